#pragma once

#include "resolvit/executor.hpp"
#include "resolvit/repository.hpp"
#include "resolvit/resolver.hpp"
#include "resolvit/status.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace resolvit {

struct EngineConfig {
  std::vector<RepositorySource> repositories;
  std::filesystem::path platform_root;
  std::filesystem::path cache_dir;
  std::string default_policy = "minimal-units";
  ConflictPolicy default_conflict_policy = ConflictPolicy::Abort;
  PlatformProfile profile;
  Transport transport = default_transport();

  std::filesystem::path status_path() const { return platform_root / "status"; }
};

// "svc:<service>[@<range>]" or "unit:<name>@<version>:<kind>".
ResolutionTarget parse_target(const std::string &spec);

ConflictPolicy parse_conflict_policy(const std::string &name);

struct CheckResult {
  ActionPlan plan;
  CandidateSolution solution;
  DependencyTree tree;
  FetchLog log;
  bool any_stale_snapshot = false;
};

struct RefreshReport {
  struct Entry {
    std::string base_url;
    size_t unit_count = 0;
    bool stale = false;
    std::string error; // empty on success
  };
  std::vector<Entry> entries;
  bool all_failed = false;
};

class Engine {
public:
  explicit Engine(EngineConfig config);

  const EngineConfig &config() const { return config_; }

  // Check phase only: never touches the platform, never fetches packages.
  // An inline status overrides the platform's status file (remote
  // resolution mode).
  CheckResult check(const ResolutionTarget &target, const std::string &policy,
                    ConflictPolicy conflict_policy,
                    const std::optional<PlatformStatus> &inline_status =
                        std::nullopt);

  // Full check-then-execute path.
  ExecutionReport install(const ResolutionTarget &target,
                          const std::string &policy,
                          ConflictPolicy conflict_policy);

  // Non-cascading removal of one installed unit.
  void remove_unit(const UnitId &unit);

  PlatformStatus platform_status() const;

  RefreshReport refresh_all();

private:
  std::vector<IndexSnapshot> load_snapshots(FetchLog &log, bool &any_stale);
  ExecutionEnv execution_env() const;

  EngineConfig config_;
  RepositoryClient client_;
  std::map<std::string, std::optional<IndexSnapshot>> hint_cache_;
};

} // namespace resolvit
