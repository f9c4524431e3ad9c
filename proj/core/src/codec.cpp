#include "resolvit/codec.hpp"

#include "resolvit/errors.hpp"
#include "resolvit/xml.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace resolvit {

namespace {

[[noreturn]] void schema_error(const std::string &why) {
  throw Error(Errc::SchemaViolation, why);
}

void check_attrs(const xml::Element &el,
                 std::initializer_list<std::string_view> allowed) {
  for (const auto &[key, value] : el.attrs) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      schema_error("unknown attribute '" + key + "' on <" + el.name + ">");
  }
}

const std::string &required_attr(const xml::Element &el, std::string_view key) {
  const std::string *v = el.attr(key);
  if (!v)
    schema_error("missing attribute '" + std::string(key) + "' on <" + el.name + ">");
  return *v;
}

std::uint64_t parse_uint(const std::string &text, const std::string &what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    schema_error("non-numeric " + what + " '" + text + "'");
  return value;
}

std::string check_token(const std::string &text, const std::string &what) {
  if (text.empty())
    schema_error("empty " + what);
  return text;
}

std::string check_hex64(const std::string &text, const std::string &what) {
  if (!is_hex64(text))
    schema_error(what + " must be 64 lowercase hex chars");
  return text;
}

ServiceRef parse_service_el(const xml::Element &el) {
  if (el.name != "service")
    schema_error("expected <service>, found <" + el.name + ">");
  check_attrs(el, {"name", "version"});
  if (!el.children.empty())
    schema_error("<service> must be empty");
  ServiceRef ref;
  ref.name = check_token(required_attr(el, "name"), "service name");
  ref.version = parse_version(required_attr(el, "version"));
  return ref;
}

GroupOp parse_group_op(const std::string &text) {
  if (text == "AND")
    return GroupOp::And;
  if (text == "OR")
    return GroupOp::Or;
  if (text == "XOR")
    return GroupOp::Xor;
  if (text == "NOT")
    return GroupOp::Not;
  throw Error(Errc::UnknownDependencyType,
              "unknown dependency type '" + text + "'");
}

DependencyGroup parse_dependency_el(const xml::Element &el) {
  if (el.name != "dependency")
    schema_error("expected <dependency>, found <" + el.name + ">");
  check_attrs(el, {"type", "cardinality"});
  DependencyGroup group;
  group.op = parse_group_op(required_attr(el, "type"));
  if (const std::string *card = el.attr("cardinality"))
    group.cardinality = static_cast<std::uint32_t>(parse_uint(*card, "cardinality"));
  if (group.cardinality == 0)
    schema_error("cardinality must be positive");
  for (const xml::Element &child : el.children) {
    if (child.name != "endpoint")
      schema_error("expected <endpoint>, found <" + child.name + ">");
    check_attrs(child, {"service", "range", "repository"});
    if (!child.children.empty())
      schema_error("<endpoint> must be empty");
    DependencyEndpoint ep;
    ep.service = check_token(required_attr(child, "service"), "endpoint service");
    ep.range = VersionRange::parse(required_attr(child, "range"));
    if (const std::string *repo = child.attr("repository")) {
      if (repo->find("://") == std::string::npos)
        schema_error("endpoint repository hint is not a URL: '" + *repo + "'");
      ep.repository = *repo;
    }
    group.endpoints.push_back(std::move(ep));
  }
  if (group.endpoints.empty())
    schema_error("<dependency> must contain at least one <endpoint>");
  if (group.op == GroupOp::Or && group.cardinality > group.endpoints.size())
    schema_error("OR cardinality exceeds endpoint count");
  return group;
}

void check_provides_unique(const std::vector<ServiceRef> &provides) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const ServiceRef &ref : provides)
    if (!seen.insert({ref.name, format_version(ref.version)}).second)
      schema_error("duplicate provided service " + ref.name + "@" +
                   format_version(ref.version));
}

} // namespace

Descriptor parse_descriptor(std::string_view document) {
  xml::Element root = xml::parse(document);
  if (root.name != "deployment-unit")
    schema_error("document element must be <deployment-unit>");
  check_attrs(root, {"name", "version", "kind", "provider", "priority",
                     "package-sha256", "package-location"});

  Descriptor d;
  d.id.name = check_token(required_attr(root, "name"), "unit name");
  d.id.version = parse_version(required_attr(root, "version"));
  d.id.kind = parse_kind(required_attr(root, "kind"));
  d.provider = check_token(required_attr(root, "provider"), "provider");
  if (const std::string *prio = root.attr("priority")) {
    std::uint64_t p = parse_uint(*prio, "priority");
    if (p > 100)
      schema_error("priority must be within [0,100]");
    d.priority = static_cast<int>(p);
  }
  d.package_sha256 = check_hex64(required_attr(root, "package-sha256"),
                                 "package-sha256");
  d.package_location =
      check_token(required_attr(root, "package-location"), "package-location");

  bool saw_provides = false, saw_dependencies = false, saw_requirements = false;
  for (const xml::Element &section : root.children) {
    if (section.name == "provides") {
      if (saw_provides)
        schema_error("duplicate <provides> section");
      saw_provides = true;
      check_attrs(section, {});
      for (const xml::Element &child : section.children)
        d.provides.push_back(parse_service_el(child));
    } else if (section.name == "dependencies") {
      if (saw_dependencies)
        schema_error("duplicate <dependencies> section");
      saw_dependencies = true;
      check_attrs(section, {});
      for (const xml::Element &child : section.children)
        d.groups.push_back(parse_dependency_el(child));
    } else if (section.name == "requirements") {
      if (saw_requirements)
        schema_error("duplicate <requirements> section");
      saw_requirements = true;
      check_attrs(section, {"disk-space-kib", "architecture", "os"});
      if (!section.children.empty())
        schema_error("<requirements> must be empty");
      if (const std::string *disk = section.attr("disk-space-kib"))
        d.requirements.disk_space_kib = parse_uint(*disk, "disk-space-kib");
      if (const std::string *arch = section.attr("architecture"))
        d.requirements.architecture = check_token(*arch, "architecture");
      if (const std::string *os = section.attr("os"))
        d.requirements.os = check_token(*os, "os");
    } else {
      schema_error("unknown element <" + section.name + "> in <deployment-unit>");
    }
  }
  check_provides_unique(d.provides);
  return d;
}

std::string serialize_descriptor(const Descriptor &d) {
  std::string out;
  out += "<deployment-unit name=\"" + xml::escape_attr(d.id.name) + "\"";
  out += " version=\"" + format_version(d.id.version) + "\"";
  out += " kind=\"" + std::string(kind_name(d.id.kind)) + "\"";
  out += " provider=\"" + xml::escape_attr(d.provider) + "\"";
  out += " priority=\"" + std::to_string(d.priority) + "\"";
  out += " package-sha256=\"" + d.package_sha256 + "\"";
  out += " package-location=\"" + xml::escape_attr(d.package_location) + "\">\n";

  if (d.provides.empty()) {
    out += "  <provides/>\n";
  } else {
    out += "  <provides>\n";
    for (const ServiceRef &ref : d.provides)
      out += "    <service name=\"" + xml::escape_attr(ref.name) +
             "\" version=\"" + format_version(ref.version) + "\"/>\n";
    out += "  </provides>\n";
  }

  if (d.groups.empty()) {
    out += "  <dependencies/>\n";
  } else {
    out += "  <dependencies>\n";
    for (const DependencyGroup &g : d.groups) {
      out += "    <dependency type=\"" + std::string(group_op_name(g.op)) +
             "\" cardinality=\"" + std::to_string(g.cardinality) + "\">\n";
      for (const DependencyEndpoint &ep : g.endpoints) {
        out += "      <endpoint service=\"" + xml::escape_attr(ep.service) +
               "\" range=\"" + xml::escape_attr(ep.range.format()) + "\"";
        if (!ep.repository.empty())
          out += " repository=\"" + xml::escape_attr(ep.repository) + "\"";
        out += "/>\n";
      }
      out += "    </dependency>\n";
    }
    out += "  </dependencies>\n";
  }

  out += "  <requirements disk-space-kib=\"" +
         std::to_string(d.requirements.disk_space_kib) + "\"";
  if (!d.requirements.architecture.empty())
    out += " architecture=\"" + xml::escape_attr(d.requirements.architecture) + "\"";
  if (!d.requirements.os.empty())
    out += " os=\"" + xml::escape_attr(d.requirements.os) + "\"";
  out += "/>\n";
  out += "</deployment-unit>\n";
  return out;
}

std::vector<IndexEntry> parse_repository_index(std::string_view document) {
  xml::Element root = xml::parse(document);
  if (root.name != "repository-index")
    schema_error("document element must be <repository-index>");
  check_attrs(root, {});

  std::vector<IndexEntry> entries;
  std::set<std::tuple<std::string, std::string, int>> seen;
  for (const xml::Element &el : root.children) {
    if (el.name != "unit")
      schema_error("unknown element <" + el.name + "> in <repository-index>");
    check_attrs(el, {"name", "version", "kind", "descriptor-location",
                     "package-location", "descriptor-sha256", "package-sha256",
                     "cost"});
    IndexEntry entry;
    entry.id.name = check_token(required_attr(el, "name"), "unit name");
    entry.id.version = parse_version(required_attr(el, "version"));
    entry.id.kind = parse_kind(required_attr(el, "kind"));
    entry.descriptor_location = check_token(
        required_attr(el, "descriptor-location"), "descriptor-location");
    entry.package_location =
        check_token(required_attr(el, "package-location"), "package-location");
    entry.descriptor_sha256 = check_hex64(
        required_attr(el, "descriptor-sha256"), "descriptor-sha256");
    entry.package_sha256 =
        check_hex64(required_attr(el, "package-sha256"), "package-sha256");
    if (const std::string *cost = el.attr("cost"))
      entry.cost = parse_uint(*cost, "cost");
    for (const xml::Element &svc : el.children)
      entry.provides.push_back(parse_service_el(svc));
    check_provides_unique(entry.provides);
    if (!seen.insert({entry.id.name, format_version(entry.id.version),
                      static_cast<int>(entry.id.kind)})
             .second)
      throw Error(Errc::DuplicateUnit,
                  "duplicate index entry " + entry.id.spec());
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string serialize_repository_index(const std::vector<IndexEntry> &entries) {
  if (entries.empty())
    return "<repository-index/>\n";
  std::string out = "<repository-index>\n";
  for (const IndexEntry &entry : entries) {
    out += "  <unit name=\"" + xml::escape_attr(entry.id.name) + "\"";
    out += " version=\"" + format_version(entry.id.version) + "\"";
    out += " kind=\"" + std::string(kind_name(entry.id.kind)) + "\"";
    out += " descriptor-location=\"" + xml::escape_attr(entry.descriptor_location) + "\"";
    out += " package-location=\"" + xml::escape_attr(entry.package_location) + "\"";
    out += " descriptor-sha256=\"" + entry.descriptor_sha256 + "\"";
    out += " package-sha256=\"" + entry.package_sha256 + "\"";
    if (entry.cost != 0)
      out += " cost=\"" + std::to_string(entry.cost) + "\"";
    if (entry.provides.empty()) {
      out += "/>\n";
    } else {
      out += ">\n";
      for (const ServiceRef &ref : entry.provides)
        out += "    <service name=\"" + xml::escape_attr(ref.name) +
               "\" version=\"" + format_version(ref.version) + "\"/>\n";
      out += "  </unit>\n";
    }
  }
  out += "</repository-index>\n";
  return out;
}

} // namespace resolvit
