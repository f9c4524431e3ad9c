#pragma once

#include "resolvit/codec.hpp"
#include "resolvit/engine.hpp"
#include "resolvit/model.hpp"
#include "resolvit/status.hpp"
#include "resolvit/util.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

namespace fs = std::filesystem;
using namespace resolvit;

class TempDir {
public:
  TempDir() {
    char tmpl[] = "/tmp/resolvit-test-XXXXXX";
    path_ = ::mkdtemp(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  const fs::path &path() const { return path_; }

private:
  fs::path path_;
};

inline Version v(std::uint64_t major, std::uint64_t minor = 0,
                 std::uint64_t micro = 0, std::string qualifier = "") {
  return Version{major, minor, micro, std::move(qualifier)};
}

inline Descriptor make_unit(std::string name, Version version,
                            std::vector<ServiceRef> provides,
                            std::vector<DependencyGroup> groups = {},
                            Kind kind = Kind::Bundle) {
  Descriptor d;
  d.id = UnitId{std::move(name), version, kind};
  d.provider = "fixture";
  d.provides = std::move(provides);
  d.groups = std::move(groups);
  d.package_location = "pkgs/" + d.id.name + "-" + format_version(version) + ".pkg";
  d.package_sha256 = sha256_hex("package:" + d.id.spec());
  return d;
}

inline DependencyGroup group(GroupOp op, std::vector<DependencyEndpoint> endpoints,
                             std::uint32_t cardinality = 1) {
  return DependencyGroup{op, cardinality, std::move(endpoints)};
}

inline DependencyEndpoint ep(std::string service, std::string range = "*") {
  return DependencyEndpoint{std::move(service), VersionRange::parse(range), ""};
}

// A file://-served repository directory: index.xml plus descriptor and
// package files, hashes kept consistent.
class FixtureRepo {
public:
  explicit FixtureRepo(fs::path dir) : dir_(std::move(dir)) {}

  void add(const Descriptor &descriptor, std::uint64_t cost = 0) {
    Descriptor d = descriptor;
    std::string package_bytes = "package:" + d.id.spec();
    d.package_sha256 = sha256_hex(package_bytes);
    if (d.package_location.empty())
      d.package_location = "pkgs/" + d.id.name + "-" +
                           format_version(d.id.version) + ".pkg";
    std::string doc = serialize_descriptor(d);

    IndexEntry entry;
    entry.id = d.id;
    entry.provides = d.provides;
    entry.descriptor_location = "descriptors/" + d.id.name + "-" +
                                format_version(d.id.version) + ".xml";
    entry.package_location = d.package_location;
    entry.descriptor_sha256 = sha256_hex(doc);
    entry.package_sha256 = d.package_sha256;
    entry.cost = cost;

    atomic_write_file(dir_ / entry.descriptor_location, doc);
    atomic_write_file(dir_ / entry.package_location, package_bytes);
    entries_.push_back(entry);
    descriptors_[d.id] = d;
  }

  void write_index() const {
    atomic_write_file(dir_ / "index.xml", serialize_repository_index(entries_));
  }

  std::string url() const { return "file://" + dir_.string(); }
  const fs::path &dir() const { return dir_; }
  const std::vector<IndexEntry> &entries() const { return entries_; }
  const Descriptor &descriptor(const UnitId &id) const {
    return descriptors_.at(id);
  }

private:
  fs::path dir_;
  std::vector<IndexEntry> entries_;
  std::map<UnitId, Descriptor> descriptors_;
};

inline PlatformProfile test_profile(std::uint64_t disk = std::uint64_t(1) << 40) {
  PlatformProfile profile;
  profile.architecture = "x86_64";
  profile.os = "linux";
  profile.disk_available_kib = disk;
  return profile;
}

inline EngineConfig make_config(const fs::path &workspace,
                                const std::string &repo_url) {
  EngineConfig config;
  config.repositories.push_back(RepositorySource::make(repo_url));
  config.platform_root = workspace / "platform";
  config.cache_dir = workspace / "cache";
  config.profile = test_profile();
  return config;
}

// In-memory resolver environment: no filesystem, no transport.
struct ResolverHarness {
  std::vector<Descriptor> repo;
  PlatformStatus status;
  PlatformProfile profile = test_profile();

  std::vector<IndexSnapshot> snapshots;
  std::map<UnitId, Descriptor> by_id;
  std::map<std::uint64_t, std::uint64_t> costs_by_order;

  void add(const Descriptor &d, std::uint64_t cost = 0) {
    repo.push_back(d);
    if (cost)
      costs_by_order[repo.size() - 1] = cost;
  }

  void install(const Descriptor &d) {
    status.records.push_back(make_install_record(d, "2026-01-01T00:00:00Z"));
  }

  ResolverEnv env() {
    snapshots.clear();
    by_id.clear();
    IndexSnapshot snap;
    snap.source = RepositorySource::make("file:///mem");
    for (size_t i = 0; i < repo.size(); ++i) {
      const Descriptor &d = repo[i];
      IndexEntry entry;
      entry.id = d.id;
      entry.provides = d.provides;
      entry.descriptor_sha256 = sha256_hex(serialize_descriptor(d));
      entry.package_sha256 = d.package_sha256;
      entry.descriptor_location = "descriptors/x.xml";
      entry.package_location = d.package_location;
      if (auto it = costs_by_order.find(i); it != costs_by_order.end())
        entry.cost = it->second;
      snap.entries.push_back(entry);
      by_id[d.id] = d;
    }
    snapshots.push_back(std::move(snap));
    return ResolverEnv{
        snapshots,
        [this](const IndexEntry &entry, const RepositorySource &) {
          return by_id.at(entry.id);
        },
        nullptr};
  }

  ResolutionRequest request(ResolutionTarget target,
                            std::string policy = "minimal-units",
                            ConflictPolicy conflict = ConflictPolicy::Abort) {
    return ResolutionRequest{std::move(target), profile, status,
                             std::move(policy), conflict};
  }
};

inline InstallRecord installed(const Descriptor &d) {
  return make_install_record(d, "2026-01-01T00:00:00Z");
}

inline Descriptor random_descriptor(std::mt19937 &rng) {
  auto rand_version = [&] {
    static const char *quals[] = {"", "", "alpha", "rc2"};
    return Version{rng() % 9, rng() % 9, rng() % 9, quals[rng() % 4]};
  };
  auto rand_token = [&](const char *prefix) {
    return std::string(prefix) + std::to_string(rng() % 1000);
  };

  Descriptor d;
  d.id.name = "org." + rand_token("unit");
  d.id.version = rand_version();
  d.id.kind = static_cast<Kind>(rng() % 3);
  d.provider = rand_token("vendor");
  d.priority = static_cast<int>(rng() % 101);

  int provides = static_cast<int>(rng() % 3);
  for (int i = 0; i < provides; ++i)
    d.provides.push_back({rand_token("svc.") + std::to_string(i), rand_version()});

  int groups = static_cast<int>(rng() % 3);
  for (int g = 0; g < groups; ++g) {
    DependencyGroup group;
    group.op = static_cast<GroupOp>(rng() % 4);
    int eps = 1 + static_cast<int>(rng() % 3);
    for (int e = 0; e < eps; ++e) {
      DependencyEndpoint ep;
      ep.service = rand_token("svc.req");
      switch (rng() % 4) {
      case 0:
        ep.range = VersionRange::any();
        break;
      case 1:
        ep.range = VersionRange::exact(rand_version());
        break;
      case 2:
        ep.range = VersionRange::interval(Version{1, 0, 0, ""}, true,
                                          Version{2 + rng() % 5, 0, 0, ""},
                                          rng() % 2 == 0);
        break;
      default:
        ep.range = VersionRange::interval(std::nullopt, true,
                                          Version{3, 0, 0, ""}, false);
      }
      if (rng() % 4 == 0)
        ep.repository = "http://repo" + std::to_string(rng() % 10) + ".example/r";
      group.endpoints.push_back(std::move(ep));
    }
    if (group.op == GroupOp::Or)
      group.cardinality = 1 + rng() % group.endpoints.size();
    d.groups.push_back(std::move(group));
  }

  d.requirements.disk_space_kib = rng() % 100000;
  if (rng() % 3 == 0)
    d.requirements.architecture = rng() % 2 ? "x86_64" : "armv7";
  if (rng() % 3 == 0)
    d.requirements.os = rng() % 2 ? "linux" : "rtos";
  d.package_sha256 = sha256_hex(rand_token("pkg"));
  d.package_location = "pkgs/" + d.id.name + ".pkg";
  return d;
}

// Recursive byte snapshot of a directory tree plus the status file, used
// for atomicity comparisons.
inline std::map<std::string, std::string> snapshot_tree(const fs::path &root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root))
    return out;
  for (const auto &entry : fs::recursive_directory_iterator(root)) {
    std::string rel = fs::relative(entry.path(), root).string();
    if (entry.is_directory())
      out[rel + "/"] = "";
    else
      out[rel] = read_file(entry.path());
  }
  return out;
}

} // namespace fixtures
