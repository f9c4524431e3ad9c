#include "resolvit/resolver.hpp"

#include <algorithm>
#include <set>

namespace resolvit {

ResolutionTarget ResolutionTarget::for_service(std::string name, VersionRange range) {
  ResolutionTarget t;
  t.type = Type::Service;
  t.service = std::move(name);
  t.range = std::move(range);
  return t;
}

ResolutionTarget ResolutionTarget::for_unit(UnitId id) {
  ResolutionTarget t;
  t.type = Type::Unit;
  t.unit = std::move(id);
  return t;
}

std::string ResolutionTarget::describe() const {
  if (type == Type::Service)
    return "svc:" + service + "@" + range.format();
  return "unit:" + unit.spec();
}

const char *context_violation_name(ContextViolation v) {
  switch (v) {
  case ContextViolation::ArchitectureMismatch:
    return "ArchitectureMismatch";
  case ContextViolation::OsMismatch:
    return "OsMismatch";
  }
  return "?";
}

std::vector<ContextViolation> check_context(const Descriptor &d,
                                            const PlatformProfile &profile) {
  std::vector<ContextViolation> out;
  if (!d.requirements.architecture.empty() &&
      d.requirements.architecture != profile.architecture)
    out.push_back(ContextViolation::ArchitectureMismatch);
  if (!d.requirements.os.empty() && d.requirements.os != profile.os)
    out.push_back(ContextViolation::OsMismatch);
  return out;
}

std::string canonical_selection_key(const std::vector<UnitId> &selected) {
  std::vector<UnitId> sorted = selected;
  std::sort(sorted.begin(), sorted.end());
  std::string key;
  for (const UnitId &id : sorted) {
    if (!key.empty())
      key += ',';
    key += id.spec();
  }
  return key;
}

namespace {

bool provides_service(const std::vector<ServiceRef> &provides,
                      std::string_view service, const VersionRange &range) {
  for (const ServiceRef &ref : provides)
    if (ref.name == service && range.contains(ref.version))
      return true;
  return false;
}

class TreeBuilder {
public:
  TreeBuilder(const ResolutionRequest &request, const ResolverEnv &env)
      : request_(request), env_(env) {}

  DependencyTree build() {
    if (request_.target.type == ResolutionTarget::Type::Service) {
      if (!query_installed(request_.status, request_.target.service,
                           request_.target.range)
               .empty()) {
        tree_.root_satisfied_by_installed = true;
        return std::move(tree_);
      }
      TreeEdge root_edge;
      DependencyEndpoint ep{request_.target.service, request_.target.range, ""};
      expand_endpoint(std::nullopt, ep, GroupOp::And, root_edge);
      tree_.root_candidates = root_edge.candidates;
      if (tree_.root_candidates.empty())
        throw Error(Errc::NoProviderFound,
                    "no provider for " + request_.target.describe());
    } else {
      const UnitId &unit = request_.target.unit;
      if (request_.status.find(unit)) {
        tree_.root_satisfied_by_installed = true;
        return std::move(tree_);
      }
      auto located = locate_unit(unit);
      if (!located)
        throw Error(Errc::NoProviderFound,
                    "no repository offers " + unit.spec());
      expand_unit(located->first, located->second);
      tree_.root_candidates = {unit};
    }
    return std::move(tree_);
  }

private:
  std::optional<std::pair<IndexEntry, RepositorySource>>
  locate_unit(const UnitId &unit) const {
    for (const IndexSnapshot &snap : env_.snapshots)
      for (const IndexEntry &entry : snap.entries)
        if (entry.id == unit)
          return std::make_pair(entry, snap.source);
    return std::nullopt;
  }

  std::vector<std::pair<IndexEntry, RepositorySource>>
  find_candidates(const DependencyEndpoint &ep) {
    std::vector<std::pair<IndexEntry, RepositorySource>> out;
    auto add_from = [&](const std::vector<IndexSnapshot> &snaps) {
      auto found = find_providers(ep.service, ep.range, snaps);
      for (auto &[entry, idx] : found) {
        bool dup = false;
        for (const auto &[existing, src] : out)
          if (existing.id == entry.id)
            dup = true;
        if (!dup)
          out.emplace_back(entry, snaps[idx].source);
      }
    };
    // The descriptor's repository hint, when present, is consulted before
    // the configured repositories.
    if (!ep.repository.empty() && env_.fetch_hint_index) {
      if (auto hinted = env_.fetch_hint_index(ep.repository))
        add_from({*hinted});
    }
    add_from(env_.snapshots);
    std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
      if (a.first.id.name != b.first.id.name)
        return a.first.id.name < b.first.id.name;
      return compare_versions(a.first.id.version, b.first.id.version) > 0;
    });
    return out;
  }

  void add_installed_node(const InstallRecord &record) {
    if (tree_.nodes.count(record.id))
      return;
    TreeNode node;
    node.id = record.id;
    node.descriptor = record.descriptor;
    node.origin = TreeNode::Origin::Installed;
    node.expanded = false;
    tree_.nodes.emplace(record.id, std::move(node));
  }

  // Adds the node if absent; recurses into its dependencies unless recurse
  // is false (NOT candidates) or the node violates the platform context.
  void expand_unit(const IndexEntry &entry, const RepositorySource &source,
                   bool recurse = true) {
    auto it = tree_.nodes.find(entry.id);
    if (it != tree_.nodes.end()) {
      if (!recurse || it->second.expanded ||
          it->second.origin == TreeNode::Origin::Installed ||
          !it->second.context_violations.empty())
        return; // visited already (cycle-safe)
      // Previously recorded as a NOT candidate; expand it now.
    } else {
      TreeNode node;
      node.id = entry.id;
      node.descriptor = env_.fetch_descriptor(entry, source);
      node.origin = TreeNode::Origin::Repository;
      node.context_violations = check_context(node.descriptor, request_.profile);
      node.cost = entry.cost;
      node.entry = entry;
      node.source = source;
      it = tree_.nodes.emplace(entry.id, std::move(node)).first;
    }
    TreeNode &node = it->second;
    if (!recurse || !node.context_violations.empty())
      return;
    node.expanded = true;
    const Descriptor descriptor = node.descriptor; // node map may rehash below
    for (size_t g = 0; g < descriptor.groups.size(); ++g) {
      const DependencyGroup &group = descriptor.groups[g];
      for (size_t e = 0; e < group.endpoints.size(); ++e) {
        TreeEdge edge;
        edge.source = entry.id;
        edge.group_index = g;
        edge.endpoint_index = e;
        expand_endpoint(entry.id, group.endpoints[e], group.op, edge);
        tree_.edges.push_back(std::move(edge));
      }
    }
  }

  void expand_endpoint(std::optional<UnitId> source, const DependencyEndpoint &ep,
                       GroupOp op, TreeEdge &edge) {
    if (op != GroupOp::Not) {
      // Step 2: an installed, in-range provider satisfies the endpoint and
      // stops the recursion for it.
      auto installed = query_installed(request_.status, ep.service, ep.range);
      if (!installed.empty()) {
        edge.satisfied_by_installed = true;
        for (const InstallRecord &record : installed) {
          add_installed_node(record);
          edge.candidates.push_back(record.id);
        }
        return;
      }
      auto candidates = find_candidates(ep);
      if (candidates.empty() && op == GroupOp::And)
        tree_.unsatisfied.push_back({source, op, ep});
      for (const auto &[entry, src] : candidates) {
        edge.candidates.push_back(entry.id);
        expand_unit(entry, src);
      }
      return;
    }
    // NOT: candidates are recorded but never recursively evaluated.
    for (const InstallRecord &record :
         query_installed(request_.status, ep.service, ep.range)) {
      add_installed_node(record);
      edge.candidates.push_back(record.id);
    }
    for (const auto &[entry, src] : find_candidates(ep)) {
      if (std::find(edge.candidates.begin(), edge.candidates.end(), entry.id) ==
          edge.candidates.end()) {
        edge.candidates.push_back(entry.id);
        expand_unit(entry, src, /*recurse=*/false);
      }
    }
  }

  const ResolutionRequest &request_;
  const ResolverEnv &env_;
  DependencyTree tree_;
};

// Shared satisfaction predicate over a selection plus the surviving
// installed units.
struct Universe {
  std::vector<const TreeNode *> selected;
  std::vector<const InstallRecord *> remaining_installed;

  bool satisfies(std::string_view service, const VersionRange &range) const {
    for (const TreeNode *node : selected)
      if (provides_service(node->descriptor.provides, service, range))
        return true;
    for (const InstallRecord *record : remaining_installed)
      if (provides_service(record->provides, service, range))
        return true;
    return false;
  }

  bool contains_unit(const UnitId &id) const {
    for (const TreeNode *node : selected)
      if (node->id == id)
        return true;
    for (const InstallRecord *record : remaining_installed)
      if (record->id == id)
        return true;
    return false;
  }

  bool group_satisfied(const DependencyGroup &group) const {
    size_t hits = 0;
    for (const DependencyEndpoint &ep : group.endpoints)
      if (satisfies(ep.service, ep.range))
        ++hits;
    switch (group.op) {
    case GroupOp::And:
      return hits == group.endpoints.size();
    case GroupOp::Or:
      return hits >= group.cardinality;
    case GroupOp::Xor:
      return hits == 1;
    case GroupOp::Not:
      return hits == 0;
    }
    return false;
  }
};

} // namespace

DependencyTree build_dependency_tree(const ResolutionRequest &request,
                                     const ResolverEnv &env) {
  return TreeBuilder(request, env).build();
}

std::vector<CandidateSolution>
enumerate_solutions(const DependencyTree &tree, const ResolutionRequest &request,
                    bool diagnose) {
  const PlatformStatus &status = request.status;
  const PlatformProfile &profile = request.profile;
  const bool replace =
      diagnose || request.conflict_policy == ConflictPolicy::Replace;

  std::vector<const TreeNode *> pool;
  for (const auto &[id, node] : tree.nodes)
    if (node.origin == TreeNode::Origin::Repository && node.expanded &&
        node.context_violations.empty() && !status.find(id))
      pool.push_back(&node);
  std::sort(pool.begin(), pool.end(),
            [](const TreeNode *a, const TreeNode *b) { return a->id < b->id; });

  if (pool.size() > 22)
    throw Error(Errc::UsageError,
                "candidate universe too large for exhaustive enumeration (" +
                    std::to_string(pool.size()) + " units)");

  auto single_version = [&](Kind kind) {
    return !profile.multi_version_kinds.count(kind);
  };

  std::vector<CandidateSolution> solutions;
  const size_t n = pool.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
    Universe u;
    for (size_t i = 0; i < n; ++i)
      if (mask & (std::uint64_t(1) << i))
        u.selected.push_back(pool[i]);

    // Per-kind multi-version rule inside the selection itself.
    bool valid = true;
    for (size_t i = 0; i < u.selected.size() && valid; ++i)
      for (size_t j = i + 1; j < u.selected.size() && valid; ++j)
        if (u.selected[i]->id.name == u.selected[j]->id.name &&
            u.selected[i]->id.kind == u.selected[j]->id.kind &&
            single_version(u.selected[i]->id.kind))
          valid = false;
    if (!valid)
      continue;

    // Installed units forced out by this selection: version clashes on
    // single-version kinds plus NOT offenders.
    std::vector<const InstallRecord *> displaced;
    auto displace = [&](const InstallRecord &record) {
      for (const InstallRecord *d : displaced)
        if (d == &record)
          return;
      displaced.push_back(&record);
    };
    for (const InstallRecord &record : status.records) {
      for (const TreeNode *node : u.selected)
        if (record.id.name == node->id.name && record.id.kind == node->id.kind &&
            !(record.id.version == node->id.version) &&
            single_version(record.id.kind)) {
          if (!replace) {
            valid = false;
            break;
          }
          displace(record);
        }
      if (!valid)
        break;
    }
    if (replace && valid) {
      for (const TreeNode *node : u.selected)
        for (const DependencyGroup &group : node->descriptor.groups) {
          if (group.op != GroupOp::Not)
            continue;
          for (const DependencyEndpoint &ep : group.endpoints)
            for (const InstallRecord &record : status.records)
              if (provides_service(record.provides, ep.service, ep.range))
                displace(record);
        }
    }
    if (!valid)
      continue;

    for (const InstallRecord &record : status.records) {
      bool gone = false;
      for (const InstallRecord *d : displaced)
        if (d == &record)
          gone = true;
      if (!gone)
        u.remaining_installed.push_back(&record);
    }

    // Root target must be provided by the selection or surviving installs.
    if (request.target.type == ResolutionTarget::Type::Service) {
      if (!u.satisfies(request.target.service, request.target.range))
        continue;
    } else if (!u.contains_unit(request.target.unit)) {
      continue;
    }

    // Every group of every selected unit must hold.
    for (const TreeNode *node : u.selected) {
      for (const DependencyGroup &group : node->descriptor.groups)
        if (!u.group_satisfied(group)) {
          valid = false;
          break;
        }
      if (!valid)
        break;
    }
    if (!valid)
      continue;

    // Surviving installed units' NOT groups must stay unviolated by the
    // selection, and (under replace) their positive groups must survive
    // the displacements.
    for (const InstallRecord *record : u.remaining_installed) {
      for (const DependencyGroup &group : record->descriptor.groups) {
        if (group.op == GroupOp::Not) {
          for (const DependencyEndpoint &ep : group.endpoints)
            for (const TreeNode *node : u.selected)
              if (provides_service(node->descriptor.provides, ep.service,
                                   ep.range)) {
                valid = false;
                break;
              }
        } else if (!displaced.empty() && !diagnose) {
          // Non-cascading rule: a displacement must not break anyone else.
          if (!u.group_satisfied(group))
            valid = false;
        }
        if (!valid)
          break;
      }
      if (!valid)
        break;
    }
    if (!valid)
      continue;

    std::uint64_t total_disk = 0, total_cost = 0;
    for (const TreeNode *node : u.selected) {
      total_disk += node->descriptor.requirements.disk_space_kib;
      total_cost += node->cost;
    }
    if (total_disk > profile.disk_available_kib)
      continue;

    CandidateSolution solution;
    for (const TreeNode *node : u.selected)
      solution.selected.push_back(node->id);
    for (const InstallRecord *record : displaced)
      solution.displaced.push_back(record->id);
    std::sort(solution.selected.begin(), solution.selected.end());
    std::sort(solution.displaced.begin(), solution.displaced.end());
    solution.total_disk_kib = total_disk;
    solution.total_cost = total_cost;
    solutions.push_back(std::move(solution));
  }

  std::sort(solutions.begin(), solutions.end(),
            [](const CandidateSolution &a, const CandidateSolution &b) {
              return canonical_selection_key(a.selected) <
                     canonical_selection_key(b.selected);
            });
  return solutions;
}

namespace {

// Lexicographic comparison of the version sequences of two selections,
// each sorted by unit id. A strict prefix compares below its extension.
int compare_version_vectors(const std::vector<UnitId> &a,
                            const std::vector<UnitId> &b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i)
    if (int c = compare_versions(a[i].version, b[i].version); c != 0)
      return c;
  if (a.size() != b.size())
    return a.size() < b.size() ? -1 : 1;
  return 0;
}

int total_priority(const CandidateSolution &s, const DependencyTree &tree) {
  int sum = 0;
  for (const UnitId &id : s.selected) {
    auto it = tree.nodes.find(id);
    if (it != tree.nodes.end())
      sum += it->second.descriptor.priority;
  }
  return sum;
}

} // namespace

bool is_known_policy(const std::string &name) {
  return name == "minimal-units" || name == "newest-versions" ||
         name == "min-cost";
}

CandidateSolution select_solution(const std::vector<CandidateSolution> &solutions,
                                  const std::string &policy_name,
                                  const DependencyTree &tree) {
  if (!is_known_policy(policy_name))
    throw Error(Errc::UnknownPolicy, "unknown policy '" + policy_name + "'");
  if (solutions.empty())
    throw Error(Errc::NoSolution, "no candidate solution satisfies the request");

  auto minimal_units_less = [&](const CandidateSolution &a,
                                const CandidateSolution &b) -> bool {
    if (a.selected.size() != b.selected.size())
      return a.selected.size() < b.selected.size();
    if (a.total_disk_kib != b.total_disk_kib)
      return a.total_disk_kib < b.total_disk_kib;
    if (int c = compare_version_vectors(a.selected, b.selected); c != 0)
      return c > 0; // higher version vector preferred
    if (int pa = total_priority(a, tree), pb = total_priority(b, tree); pa != pb)
      return pa > pb;
    return canonical_selection_key(a.selected) < canonical_selection_key(b.selected);
  };

  auto newest_versions_less = [&](const CandidateSolution &a,
                                  const CandidateSolution &b) -> bool {
    if (int c = compare_version_vectors(a.selected, b.selected); c != 0)
      return c > 0;
    if (a.selected.size() != b.selected.size())
      return a.selected.size() < b.selected.size();
    return canonical_selection_key(a.selected) < canonical_selection_key(b.selected);
  };

  auto min_cost_less = [&](const CandidateSolution &a,
                           const CandidateSolution &b) -> bool {
    if (a.total_cost != b.total_cost)
      return a.total_cost < b.total_cost;
    return minimal_units_less(a, b);
  };

  const CandidateSolution *best = &solutions.front();
  for (const CandidateSolution &s : solutions) {
    bool better;
    if (policy_name == "minimal-units")
      better = minimal_units_less(s, *best);
    else if (policy_name == "newest-versions")
      better = newest_versions_less(s, *best);
    else
      better = min_cost_less(s, *best);
    if (better)
      best = &s;
  }
  return *best;
}

std::vector<Conflict> plan_conflict_resolution(const CandidateSolution &solution,
                                               const PlatformStatus &status,
                                               const DependencyTree &tree,
                                               ConflictPolicy policy) {
  std::vector<Conflict> conflicts;
  auto add_conflict = [&](const UnitId &source, const DependencyEndpoint &ep,
                          const UnitId &offending) {
    for (const Conflict &c : conflicts)
      if (c.offending == offending && c.source == source)
        return;
    conflicts.push_back({source, ep, offending, Conflict::Resolution::Abort});
  };

  std::set<UnitId> single_version_kinds_clash;
  for (const UnitId &selected_id : solution.selected) {
    auto it = tree.nodes.find(selected_id);
    if (it == tree.nodes.end())
      continue;
    const Descriptor &d = it->second.descriptor;
    for (const DependencyGroup &group : d.groups) {
      if (group.op != GroupOp::Not)
        continue;
      for (const DependencyEndpoint &ep : group.endpoints)
        for (const InstallRecord &record : status.records)
          if (provides_service(record.provides, ep.service, ep.range))
            add_conflict(selected_id, ep, record.id);
    }
  }
  // Version clashes on single-version kinds were computed during
  // enumeration and arrive as the solution's displaced set; they conflict
  // the same way an explicit NOT would.
  for (const UnitId &displaced_id : solution.displaced) {
    bool covered = false;
    for (const Conflict &c : conflicts)
      if (c.offending == displaced_id)
        covered = true;
    if (covered)
      continue;
    UnitId source = displaced_id;
    for (const UnitId &selected_id : solution.selected)
      if (selected_id.name == displaced_id.name &&
          selected_id.kind == displaced_id.kind)
        source = selected_id;
    DependencyEndpoint ep{displaced_id.name,
                          VersionRange::exact(displaced_id.version), ""};
    add_conflict(source, ep, displaced_id);
  }

  if (conflicts.empty())
    return conflicts;

  auto describe = [&]() {
    std::string msg = "conflicts:";
    for (const Conflict &c : conflicts)
      msg += " " + c.source.spec() + " vs " + c.offending.spec();
    return msg;
  };

  if (policy == ConflictPolicy::Abort)
    throw ConflictError(conflicts, describe());

  // Replace: each offender may be removed only if no surviving installed
  // unit's positive groups depend on it.
  Universe survivors;
  for (const UnitId &id : solution.selected) {
    auto it = tree.nodes.find(id);
    if (it != tree.nodes.end())
      survivors.selected.push_back(&it->second);
  }
  for (const InstallRecord &record : status.records) {
    bool offending = false;
    for (const Conflict &c : conflicts)
      if (c.offending == record.id)
        offending = true;
    if (!offending)
      survivors.remaining_installed.push_back(&record);
  }
  for (const InstallRecord *record : survivors.remaining_installed)
    for (const DependencyGroup &group : record->descriptor.groups)
      if (group.op != GroupOp::Not && !survivors.group_satisfied(group))
        throw ConflictError(conflicts,
                            "removal of a conflicting unit would break " +
                                record->id.spec());
  for (Conflict &c : conflicts)
    c.resolution = Conflict::Resolution::Remove;
  return conflicts;
}

} // namespace resolvit
