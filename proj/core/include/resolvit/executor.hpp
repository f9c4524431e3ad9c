#pragma once

#include "resolvit/model.hpp"
#include "resolvit/resolver.hpp"
#include "resolvit/status.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace resolvit {

struct Action {
  enum class Verb { Install, Remove };

  Verb verb = Verb::Install;
  UnitId unit;
  std::filesystem::path package_source; // install only, verified cache path

  bool operator==(const Action &other) const {
    return verb == other.verb && unit == other.unit;
  }
};

struct ActionPlan {
  std::vector<Action> actions;
  std::string plan_hash; // sha256 over encode_plan()

  bool empty() const { return actions.empty(); }
};

// One action per line: VERB<TAB>NAME<TAB>VERSION<TAB>KIND, LF.
std::string encode_plan(const ActionPlan &plan);

// Per-kind physical install/remove on the sandboxed platform tree.
class LayerManager {
public:
  virtual ~LayerManager() = default;
  virtual Kind kind() const = 0;
  virtual void install(const UnitId &unit, const std::filesystem::path &package,
                       const std::filesystem::path &platform_root) = 0;
  virtual void remove(const UnitId &unit,
                      const std::filesystem::path &platform_root) = 0;
};

// Default managers: install copies the verified package into
// <root>/<kind>/<name>-<version>/ with a receipt; remove deletes the
// directory. install/remove are exact inverses on the tree.
class SandboxLayerManager : public LayerManager {
public:
  explicit SandboxLayerManager(Kind kind) : kind_(kind) {}

  Kind kind() const override { return kind_; }
  void install(const UnitId &unit, const std::filesystem::path &package,
               const std::filesystem::path &platform_root) override;
  void remove(const UnitId &unit,
              const std::filesystem::path &platform_root) override;

  static std::filesystem::path unit_dir(const UnitId &unit,
                                        const std::filesystem::path &root);

private:
  Kind kind_;
};

using LayerManagers = std::map<Kind, std::shared_ptr<LayerManager>>;

LayerManagers sandbox_layer_managers();

struct JournalRecord {
  std::uint64_t seq = 0;
  std::string verb; // install | remove | snapshot
  UnitId unit;
  std::string undo_hash; // "-" when not applicable
  std::string state;     // done | undone
};

// Line-oriented journal at <root>/.resolvit.journal, fsynced per append.
class Journal {
public:
  explicit Journal(std::filesystem::path platform_root);

  static std::filesystem::path path_for(const std::filesystem::path &root);

  std::uint64_t append(const std::string &verb, const UnitId &unit,
                       const std::string &undo_hash);
  void mark_undone(std::uint64_t seq, const std::string &verb,
                   const UnitId &unit, const std::string &undo_hash);
  void clear();

  static std::vector<JournalRecord> read(const std::filesystem::path &root);

private:
  void append_line(const JournalRecord &record);

  std::filesystem::path path_;
  std::uint64_t next_seq_ = 1;
};

struct ExecutedAction {
  Action action;
  double seconds = 0.0;
};

struct ExecutionReport {
  std::vector<ExecutedAction> actions;
};

// Removals first (displaced units), then installs leaves-first; fully
// deterministic. The tree supplies descriptors for dependency ordering;
// package paths come from the cache map (may be empty for dry-run plans).
ActionPlan order_actions(const CandidateSolution &solution,
                         const DependencyTree &tree,
                         const PlatformStatus &status,
                         const std::map<UnitId, std::filesystem::path>
                             &package_paths = {});

struct ExecutionEnv {
  LayerManagers managers;
  std::filesystem::path platform_root;
  std::filesystem::path status_path;
  std::filesystem::path cache_dir;
  // Descriptors for units being installed (to write status records).
  std::map<UnitId, Descriptor> descriptors;
};

ExecutionReport execute_plan(const ActionPlan &plan, const ExecutionEnv &env);

// Undoes all done-and-not-undone journal records newest-first and restores
// the pre-transaction status file. Used for crash recovery and internally
// on execution failure.
void rollback(const ExecutionEnv &env);

bool journal_pending(const std::filesystem::path &platform_root);

} // namespace resolvit
