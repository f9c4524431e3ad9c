#pragma once

#include "resolvit/model.hpp"
#include "resolvit/errors.hpp"
#include "resolvit/repository.hpp"
#include "resolvit/status.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace resolvit {

struct ResolutionTarget {
  enum class Type { Service, Unit };

  Type type = Type::Service;
  std::string service;
  VersionRange range = VersionRange::any();
  UnitId unit;

  static ResolutionTarget for_service(std::string name, VersionRange range);
  static ResolutionTarget for_unit(UnitId id);
  std::string describe() const;
};

enum class ConflictPolicy { Abort, Replace };

struct ResolutionRequest {
  ResolutionTarget target;
  PlatformProfile profile;
  PlatformStatus status;
  std::string policy = "minimal-units";
  ConflictPolicy conflict_policy = ConflictPolicy::Abort;
};

enum class ContextViolation { ArchitectureMismatch, OsMismatch };

const char *context_violation_name(ContextViolation v);

// Per-unit architecture/os check; aggregate disk is a solution-level rule.
std::vector<ContextViolation> check_context(const Descriptor &d,
                                            const PlatformProfile &profile);

struct TreeNode {
  enum class Origin { Repository, Installed };

  UnitId id;
  Descriptor descriptor;
  Origin origin = Origin::Repository;
  std::vector<ContextViolation> context_violations;
  bool expanded = false;
  std::uint64_t cost = 0;
  IndexEntry entry;           // repository nodes only
  RepositorySource source;    // repository nodes only
};

struct TreeEdge {
  std::optional<UnitId> source; // nullopt for the root request
  size_t group_index = 0;
  size_t endpoint_index = 0;
  std::vector<UnitId> candidates;
  bool satisfied_by_installed = false;
};

struct UnsatisfiedEndpoint {
  std::optional<UnitId> source;
  GroupOp op = GroupOp::And;
  DependencyEndpoint endpoint;
};

struct DependencyTree {
  std::map<UnitId, TreeNode> nodes;
  std::vector<UnitId> root_candidates;
  bool root_satisfied_by_installed = false;
  std::vector<TreeEdge> edges;
  std::vector<UnsatisfiedEndpoint> unsatisfied; // diagnostics
};

struct CandidateSolution {
  std::vector<UnitId> selected;  // sorted, new installs only
  std::vector<UnitId> displaced; // sorted, installed units to remove
  std::uint64_t total_disk_kib = 0;
  std::uint64_t total_cost = 0;

  bool operator==(const CandidateSolution &other) const = default;
};

std::string canonical_selection_key(const std::vector<UnitId> &selected);

struct Conflict {
  enum class Resolution { Abort, Remove };

  UnitId source;
  DependencyEndpoint endpoint;
  UnitId offending;
  Resolution resolution = Resolution::Abort;
};

class ConflictError : public Error {
public:
  ConflictError(std::vector<Conflict> conflicts, std::string message)
      : Error(Errc::Conflict, std::move(message)),
        conflicts_(std::move(conflicts)) {}

  const std::vector<Conflict> &conflicts() const { return conflicts_; }

private:
  std::vector<Conflict> conflicts_;
};

// Access to repository metadata during tree construction. fetch_hint_index
// resolves an endpoint's repository hint to a snapshot (consulted before the
// configured repositories); it may return nullopt when the hint is
// unreachable.
struct ResolverEnv {
  const std::vector<IndexSnapshot> &snapshots;
  std::function<Descriptor(const IndexEntry &, const RepositorySource &)>
      fetch_descriptor;
  std::function<std::optional<IndexSnapshot>(const std::string &url)>
      fetch_hint_index = nullptr;
};

// Check-phase steps 1-5: recursively expands the target through AND/OR/XOR
// endpoints, cutting recursion at installed-and-in-range services and at NOT
// endpoints. Throws NoProviderFound only when the root target itself has no
// provider anywhere and is not installed.
DependencyTree build_dependency_tree(const ResolutionRequest &request,
                                     const ResolverEnv &env);

// Exhaustive enumeration of valid selections among expanded, context-clean
// tree nodes. `diagnose` relaxes NOT-vs-installed enforcement so callers can
// distinguish "no solution" from "blocked by conflicts".
std::vector<CandidateSolution>
enumerate_solutions(const DependencyTree &tree, const ResolutionRequest &request,
                    bool diagnose = false);

bool is_known_policy(const std::string &name);

CandidateSolution select_solution(const std::vector<CandidateSolution> &solutions,
                                  const std::string &policy_name,
                                  const DependencyTree &tree);

std::vector<Conflict> plan_conflict_resolution(const CandidateSolution &solution,
                                               const PlatformStatus &status,
                                               const DependencyTree &tree,
                                               ConflictPolicy policy);

} // namespace resolvit
