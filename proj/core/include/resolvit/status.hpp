#pragma once

#include "resolvit/model.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace resolvit {

struct InstallRecord {
  UnitId id;
  std::vector<ServiceRef> provides;
  std::string package_sha256;
  Descriptor descriptor; // descriptor.id == id
  std::string installed_at; // ISO-8601 UTC

  bool operator==(const InstallRecord &other) const = default;
};

struct PlatformStatus {
  std::vector<InstallRecord> records;
  int format_version = 1;

  bool operator==(const PlatformStatus &other) const = default;

  const InstallRecord *find(const UnitId &id) const;
};

struct InstallChange {
  InstallRecord record;
};
struct RemoveChange {
  UnitId id;
};
using StatusChange = std::variant<InstallChange, RemoveChange>;

// Canonical stanza serialization: records sorted by (name, version, kind),
// fixed key order, blank line between stanzas.
std::string serialize_status(const PlatformStatus &status);
PlatformStatus parse_status(std::string_view text); // throws CorruptState

// Missing file means a fresh platform with zero records.
PlatformStatus load_status(const std::filesystem::path &path);
void save_status(const PlatformStatus &status, const std::filesystem::path &path);

std::vector<InstallRecord> query_installed(const PlatformStatus &status,
                                           std::string_view service_name,
                                           const VersionRange &range);

// Pure value update; callers persist with save_status.
PlatformStatus apply_change(const PlatformStatus &status, const StatusChange &change);

std::string current_timestamp();

InstallRecord make_install_record(const Descriptor &descriptor,
                                  std::string installed_at);

} // namespace resolvit
