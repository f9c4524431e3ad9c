#pragma once

#include "resolvit/version.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace resolvit {

enum class Kind { Bundle, Native, Driver };

const char *kind_name(Kind k);
Kind parse_kind(std::string_view text); // throws SchemaViolation

// Identity of one deployment unit: a bundle, a native package or a
// device driver.
struct UnitId {
  std::string name;
  Version version;
  Kind kind = Kind::Bundle;

  bool operator==(const UnitId &other) const = default;
  bool operator<(const UnitId &other) const;

  // "name@1.2.0:bundle", used in CLI output and diagnostics.
  std::string spec() const;
};

struct ServiceRef {
  std::string name;
  Version version;

  bool operator==(const ServiceRef &other) const = default;
  bool operator<(const ServiceRef &other) const;
};

enum class GroupOp { And, Or, Xor, Not };

const char *group_op_name(GroupOp op);

struct DependencyEndpoint {
  std::string service;
  VersionRange range;
  std::string repository; // optional hint URL, empty when absent

  bool operator==(const DependencyEndpoint &other) const = default;
};

struct DependencyGroup {
  GroupOp op = GroupOp::And;
  std::uint32_t cardinality = 1; // meaningful for OR only
  std::vector<DependencyEndpoint> endpoints;

  bool operator==(const DependencyGroup &other) const = default;
};

struct ResourceRequirements {
  std::uint64_t disk_space_kib = 0;
  std::string architecture; // empty matches any
  std::string os;           // empty matches any

  bool operator==(const ResourceRequirements &other) const = default;
};

struct Descriptor {
  UnitId id;
  std::string provider;
  int priority = 50; // [0,100]
  std::vector<ServiceRef> provides;
  std::vector<DependencyGroup> groups;
  ResourceRequirements requirements;
  std::string package_sha256; // 64 lowercase hex chars
  std::string package_location;

  bool operator==(const Descriptor &other) const = default;
};

struct PlatformProfile {
  std::string architecture;
  std::string os;
  std::uint64_t disk_available_kib = 0;
  std::set<Kind> multi_version_kinds = {Kind::Bundle};
};

// One entry of a repository index: enough to locate and verify a unit's
// descriptor and package without fetching either.
struct IndexEntry {
  UnitId id;
  std::vector<ServiceRef> provides;
  std::string descriptor_location;
  std::string package_location;
  std::string descriptor_sha256;
  std::string package_sha256;
  std::uint64_t cost = 0;

  bool operator==(const IndexEntry &other) const = default;
};

bool is_hex64(std::string_view text);

} // namespace resolvit
