#include "resolvit/status.hpp"

#include "resolvit/codec.hpp"
#include "resolvit/errors.hpp"
#include "resolvit/util.hpp"

#include <algorithm>
#include <ctime>
#include <map>
#include <sstream>

namespace resolvit {

namespace {

[[noreturn]] void corrupt(size_t stanza, const std::string &why) {
  throw Error(Errc::CorruptState,
              "status stanza " + std::to_string(stanza) + ": " + why);
}

std::string serialize_provides(const std::vector<ServiceRef> &provides) {
  std::string out;
  for (const ServiceRef &ref : provides) {
    if (!out.empty())
      out += ", ";
    out += ref.name + "@" + format_version(ref.version);
  }
  return out;
}

std::vector<ServiceRef> parse_provides(const std::string &text, size_t stanza) {
  std::vector<ServiceRef> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find(", ", pos);
    std::string item = text.substr(pos, end == std::string::npos ? end : end - pos);
    auto at = item.rfind('@');
    if (at == std::string::npos)
      corrupt(stanza, "bad Provides item '" + item + "'");
    ServiceRef ref;
    ref.name = item.substr(0, at);
    try {
      ref.version = parse_version(item.substr(at + 1));
    } catch (const Error &e) {
      corrupt(stanza, e.what());
    }
    out.push_back(std::move(ref));
    pos = end == std::string::npos ? text.size() : end + 2;
  }
  return out;
}

} // namespace

const InstallRecord *PlatformStatus::find(const UnitId &id) const {
  for (const InstallRecord &r : records)
    if (r.id == id)
      return &r;
  return nullptr;
}

std::string serialize_status(const PlatformStatus &status) {
  std::vector<const InstallRecord *> sorted;
  sorted.reserve(status.records.size());
  for (const InstallRecord &r : status.records)
    sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const InstallRecord *a, const InstallRecord *b) {
              return a->id < b->id;
            });

  std::string out;
  for (const InstallRecord *r : sorted) {
    if (!out.empty())
      out += "\n";
    out += "Name: " + r->id.name + "\n";
    out += "Version: " + format_version(r->id.version) + "\n";
    out += "Kind: " + std::string(kind_name(r->id.kind)) + "\n";
    out += "Provider: " + r->descriptor.provider + "\n";
    out += "Provides: " + serialize_provides(r->provides) + "\n";
    out += "Package-SHA256: " + r->package_sha256 + "\n";
    out += "Installed-At: " + r->installed_at + "\n";
    out += "Descriptor: " + base64_encode(serialize_descriptor(r->descriptor)) + "\n";
  }
  return out;
}

PlatformStatus parse_status(std::string_view text) {
  PlatformStatus status;
  size_t stanza = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    // Skip blank separator lines.
    while (pos < text.size() && text[pos] == '\n')
      ++pos;
    if (pos >= text.size())
      break;
    ++stanza;
    std::map<std::string, std::string> fields;
    std::vector<std::string> order;
    while (pos < text.size() && text[pos] != '\n') {
      size_t eol = text.find('\n', pos);
      if (eol == std::string_view::npos)
        corrupt(stanza, "missing trailing newline");
      std::string_view line = text.substr(pos, eol - pos);
      pos = eol + 1;
      auto colon = line.find(": ");
      if (colon == std::string_view::npos)
        corrupt(stanza, "malformed line '" + std::string(line) + "'");
      std::string key(line.substr(0, colon));
      if (fields.count(key))
        corrupt(stanza, "duplicate field '" + key + "'");
      fields[key] = std::string(line.substr(colon + 2));
      order.push_back(key);
    }
    static const std::vector<std::string> expected = {
        "Name", "Version", "Kind", "Provider", "Provides",
        "Package-SHA256", "Installed-At", "Descriptor"};
    for (const std::string &key : expected)
      if (!fields.count(key))
        corrupt(stanza, "missing field '" + key + "'");
    for (const std::string &key : order)
      if (std::find(expected.begin(), expected.end(), key) == expected.end())
        corrupt(stanza, "unknown field '" + key + "'");

    InstallRecord record;
    record.id.name = fields["Name"];
    try {
      record.id.version = parse_version(fields["Version"]);
      record.id.kind = parse_kind(fields["Kind"]);
      record.descriptor = parse_descriptor(base64_decode(fields["Descriptor"]));
    } catch (const Error &e) {
      corrupt(stanza, e.what());
    }
    record.provides = parse_provides(fields["Provides"], stanza);
    record.package_sha256 = fields["Package-SHA256"];
    if (!is_hex64(record.package_sha256))
      corrupt(stanza, "bad Package-SHA256");
    record.installed_at = fields["Installed-At"];
    if (record.descriptor.id != record.id)
      corrupt(stanza, "embedded descriptor identity mismatch");
    if (status.find(record.id))
      corrupt(stanza, "duplicate record " + record.id.spec());
    status.records.push_back(std::move(record));
  }
  return status;
}

PlatformStatus load_status(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path))
    return PlatformStatus{};
  return parse_status(read_file(path));
}

void save_status(const PlatformStatus &status, const std::filesystem::path &path) {
  atomic_write_file(path, serialize_status(status));
}

std::vector<InstallRecord> query_installed(const PlatformStatus &status,
                                           std::string_view service_name,
                                           const VersionRange &range) {
  std::vector<InstallRecord> out;
  for (const InstallRecord &r : status.records)
    for (const ServiceRef &ref : r.provides)
      if (ref.name == service_name && range.contains(ref.version)) {
        out.push_back(r);
        break;
      }
  std::sort(out.begin(), out.end(),
            [](const InstallRecord &a, const InstallRecord &b) {
              int c = compare_versions(a.id.version, b.id.version);
              if (c != 0)
                return c > 0; // newest first
              return a.id < b.id;
            });
  return out;
}

PlatformStatus apply_change(const PlatformStatus &status, const StatusChange &change) {
  PlatformStatus next = status;
  if (const auto *install = std::get_if<InstallChange>(&change)) {
    const InstallRecord &record = install->record;
    if (next.find(record.id))
      throw Error(Errc::DuplicateInstall,
                  record.id.spec() + " is already installed");
    next.records.push_back(record);
  } else {
    const UnitId &id = std::get<RemoveChange>(change).id;
    auto it = std::find_if(next.records.begin(), next.records.end(),
                           [&](const InstallRecord &r) { return r.id == id; });
    if (it == next.records.end())
      throw Error(Errc::NotInstalled, id.spec() + " is not installed");
    next.records.erase(it);
  }
  return next;
}

std::string current_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

InstallRecord make_install_record(const Descriptor &descriptor,
                                  std::string installed_at) {
  InstallRecord record;
  record.id = descriptor.id;
  record.provides = descriptor.provides;
  record.package_sha256 = descriptor.package_sha256;
  record.descriptor = descriptor;
  record.installed_at = std::move(installed_at);
  return record;
}

} // namespace resolvit
