#include "resolvit/engine.hpp"

#include "resolvit/errors.hpp"
#include "resolvit/util.hpp"

#include <algorithm>

namespace resolvit {

namespace fs = std::filesystem;

ResolutionTarget parse_target(const std::string &spec) {
  if (spec.rfind("svc:", 0) == 0) {
    std::string rest = spec.substr(4);
    if (rest.empty())
      throw Error(Errc::UsageError, "empty service target");
    VersionRange range = VersionRange::any();
    if (auto at = rest.find('@'); at != std::string::npos) {
      try {
        range = VersionRange::parse(rest.substr(at + 1));
      } catch (const Error &e) {
        throw Error(Errc::UsageError,
                    std::string("bad service target: ") + e.what());
      }
      rest = rest.substr(0, at);
    }
    if (rest.empty())
      throw Error(Errc::UsageError, "empty service name in target");
    return ResolutionTarget::for_service(rest, range);
  }
  if (spec.rfind("unit:", 0) == 0) {
    std::string rest = spec.substr(5);
    auto colon = rest.rfind(':');
    auto at = rest.find('@');
    if (at == std::string::npos || colon == std::string::npos || colon < at)
      throw Error(Errc::UsageError,
                  "unit target must be unit:<name>@<version>:<kind>");
    UnitId id;
    id.name = rest.substr(0, at);
    try {
      id.version = parse_version(rest.substr(at + 1, colon - at - 1));
      id.kind = parse_kind(rest.substr(colon + 1));
    } catch (const Error &e) {
      throw Error(Errc::UsageError, std::string("bad unit target: ") + e.what());
    }
    if (id.name.empty())
      throw Error(Errc::UsageError, "empty unit name in target");
    return ResolutionTarget::for_unit(id);
  }
  throw Error(Errc::UsageError,
              "target must start with 'svc:' or 'unit:': " + spec);
}

ConflictPolicy parse_conflict_policy(const std::string &name) {
  if (name == "abort")
    return ConflictPolicy::Abort;
  if (name == "replace")
    return ConflictPolicy::Replace;
  throw Error(Errc::UsageError, "conflict policy must be abort or replace");
}

Engine::Engine(EngineConfig config)
    : config_(std::move(config)), client_(config_.cache_dir, config_.transport) {}

std::vector<IndexSnapshot> Engine::load_snapshots(FetchLog &log, bool &any_stale) {
  if (config_.repositories.empty())
    throw Error(Errc::UsageError, "no repositories configured");
  std::vector<IndexSnapshot> snapshots;
  std::string first_error;
  for (const RepositorySource &source : config_.repositories) {
    try {
      IndexSnapshot snap = client_.refresh_index(source, log);
      any_stale = any_stale || snap.stale;
      snapshots.push_back(std::move(snap));
    } catch (const Error &e) {
      if (first_error.empty())
        first_error = e.what();
    }
  }
  if (snapshots.empty())
    throw Error(Errc::RepositoryUnavailable, first_error);
  return snapshots;
}

CheckResult Engine::check(const ResolutionTarget &target,
                          const std::string &policy,
                          ConflictPolicy conflict_policy,
                          const std::optional<PlatformStatus> &inline_status) {
  if (!is_known_policy(policy))
    throw Error(Errc::UnknownPolicy, "unknown policy '" + policy + "'");

  CheckResult result;
  std::vector<IndexSnapshot> snapshots =
      load_snapshots(result.log, result.any_stale_snapshot);

  ResolutionRequest request;
  request.target = target;
  request.profile = config_.profile;
  request.status =
      inline_status ? *inline_status : load_status(config_.status_path());
  request.policy = policy;
  request.conflict_policy = conflict_policy;

  ResolverEnv env{
      snapshots,
      [&](const IndexEntry &entry, const RepositorySource &source) {
        return client_.fetch_descriptor(entry, source, result.log);
      },
      [&](const std::string &url) -> std::optional<IndexSnapshot> {
        auto it = hint_cache_.find(url);
        if (it != hint_cache_.end())
          return it->second;
        std::optional<IndexSnapshot> snap;
        try {
          snap = client_.refresh_index(RepositorySource::make(url, "hint"),
                                       result.log);
        } catch (const Error &) {
          // Unreachable hint: fall back to the configured repositories.
        }
        hint_cache_[url] = snap;
        return snap;
      }};

  result.tree = build_dependency_tree(request, env);
  std::vector<CandidateSolution> solutions =
      enumerate_solutions(result.tree, request);

  if (solutions.empty()) {
    // Distinguish "blocked by conflicts" from plain unsolvability.
    std::vector<CandidateSolution> relaxed =
        enumerate_solutions(result.tree, request, /*diagnose=*/true);
    if (!relaxed.empty()) {
      CandidateSolution best = select_solution(relaxed, policy, result.tree);
      plan_conflict_resolution(best, request.status, result.tree,
                               conflict_policy); // throws ConflictError
    }
    std::string message = "no solution for " + target.describe();
    for (const UnsatisfiedEndpoint &u : result.tree.unsatisfied) {
      message += "\n  unsatisfiable ";
      message += group_op_name(u.op);
      message += " endpoint ";
      message += u.endpoint.service + "@" + u.endpoint.range.format();
      if (u.source)
        message += " required by " + u.source->spec();
      else
        message += " required by the request";
    }
    throw Error(Errc::NoSolution, message);
  }

  result.solution = select_solution(solutions, policy, result.tree);
  plan_conflict_resolution(result.solution, request.status, result.tree,
                           conflict_policy);
  result.plan = order_actions(result.solution, result.tree, request.status);
  return result;
}

ExecutionEnv Engine::execution_env() const {
  ExecutionEnv env;
  env.managers = sandbox_layer_managers();
  env.platform_root = config_.platform_root;
  env.status_path = config_.status_path();
  env.cache_dir = config_.cache_dir;
  return env;
}

ExecutionReport Engine::install(const ResolutionTarget &target,
                                const std::string &policy,
                                ConflictPolicy conflict_policy) {
  CheckResult checked = check(target, policy, conflict_policy);
  if (checked.plan.empty())
    return ExecutionReport{};

  // Packages download only now, in the execution phase.
  std::map<UnitId, fs::path> package_paths;
  ExecutionEnv env = execution_env();
  for (const Action &action : checked.plan.actions) {
    if (action.verb != Action::Verb::Install)
      continue;
    auto it = checked.tree.nodes.find(action.unit);
    if (it == checked.tree.nodes.end())
      throw Error(Errc::ExecutionFailed,
                  "plan refers to unknown unit " + action.unit.spec());
    package_paths[action.unit] =
        client_.fetch_package(it->second.entry, it->second.source, checked.log);
    env.descriptors[action.unit] = it->second.descriptor;
  }

  PlatformStatus status = load_status(config_.status_path());
  ActionPlan plan = order_actions(checked.solution, checked.tree, status,
                                  package_paths);
  return execute_plan(plan, env);
}

void Engine::remove_unit(const UnitId &unit) {
  PlatformStatus status = load_status(config_.status_path());
  const InstallRecord *record = status.find(unit);
  if (!record)
    throw Error(Errc::NotInstalled, unit.spec() + " is not installed");

  // Non-cascading rule: refuse when any remaining unit's positive groups
  // stop being satisfiable without this one.
  std::vector<std::string> dependents;
  for (const InstallRecord &other : status.records) {
    if (other.id == unit)
      continue;
    for (const DependencyGroup &group : other.descriptor.groups) {
      if (group.op == GroupOp::Not)
        continue;
      size_t hits = 0;
      for (const DependencyEndpoint &ep : group.endpoints) {
        bool satisfied = false;
        for (const InstallRecord &provider : status.records) {
          if (provider.id == unit)
            continue;
          for (const ServiceRef &ref : provider.provides)
            if (ref.name == ep.service && ep.range.contains(ref.version))
              satisfied = true;
        }
        if (satisfied)
          ++hits;
      }
      bool ok = group.op == GroupOp::And ? hits == group.endpoints.size()
                : group.op == GroupOp::Or ? hits >= group.cardinality
                                          : hits == 1;
      if (!ok) {
        dependents.push_back(other.id.spec());
        break;
      }
    }
  }
  if (!dependents.empty()) {
    std::string message = "cannot remove " + unit.spec() + "; required by:";
    for (const std::string &d : dependents)
      message += " " + d;
    throw Error(Errc::NoSolution, message);
  }

  ActionPlan plan;
  plan.actions.push_back({Action::Verb::Remove, unit, {}});
  plan.plan_hash = sha256_hex(encode_plan(plan));
  execute_plan(plan, execution_env());
}

PlatformStatus Engine::platform_status() const {
  return load_status(config_.status_path());
}

RefreshReport Engine::refresh_all() {
  RefreshReport report;
  size_t failures = 0;
  FetchLog log;
  for (const RepositorySource &source : config_.repositories) {
    RefreshReport::Entry entry;
    entry.base_url = source.base_url;
    try {
      IndexSnapshot snap = client_.refresh_index(source, log);
      entry.unit_count = snap.entries.size();
      entry.stale = snap.stale;
    } catch (const Error &e) {
      entry.error = e.what();
      ++failures;
    }
    report.entries.push_back(std::move(entry));
  }
  report.all_failed =
      !config_.repositories.empty() && failures == config_.repositories.size();
  return report;
}

} // namespace resolvit
