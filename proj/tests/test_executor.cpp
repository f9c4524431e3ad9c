#include "resolvit/errors.hpp"
#include "resolvit/executor.hpp"
#include "resolvit/util.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>

using namespace resolvit;
using namespace fixtures;

namespace {

// Wraps the sandbox manager and fails install for one chosen unit, after
// leaving partial debris behind (the worst case for rollback).
class FaultyManager : public LayerManager {
public:
  FaultyManager(Kind kind, std::string fail_name)
      : inner_(kind), fail_name_(std::move(fail_name)) {}

  Kind kind() const override { return inner_.kind(); }

  void install(const UnitId &unit, const fs::path &package,
               const fs::path &root) override {
    if (unit.name == fail_name_) {
      fs::create_directories(SandboxLayerManager::unit_dir(unit, root));
      throw Error(Errc::ExecutionFailed, "simulated install fault");
    }
    inner_.install(unit, package, root);
  }
  void remove(const UnitId &unit, const fs::path &root) override {
    inner_.remove(unit, root);
  }

private:
  SandboxLayerManager inner_;
  std::string fail_name_;
};

struct Bench {
  TempDir tmp;
  fs::path root = tmp.path() / "platform";
  fs::path cache = tmp.path() / "cache";

  ExecutionEnv env;

  Bench() {
    fs::create_directories(root);
    fs::create_directories(cache / "pkgs");
    fs::create_directories(cache / "meta");
    env.managers = sandbox_layer_managers();
    env.platform_root = root;
    env.status_path = root / "status";
    env.cache_dir = cache;
  }

  // Stages the fixture package bytes in the cache and returns an install
  // action wired to them.
  Action stage_install(const Descriptor &d) {
    std::string bytes = "package:" + d.id.spec();
    fs::path path = cache / "pkgs" / d.package_sha256;
    atomic_write_file(path, bytes);
    env.descriptors[d.id] = d;
    return Action{Action::Verb::Install, d.id, path};
  }

  ActionPlan plan(std::vector<Action> actions) {
    ActionPlan p;
    p.actions = std::move(actions);
    p.plan_hash = sha256_hex(encode_plan(p));
    return p;
  }
};

} // namespace

TEST_CASE("plan encoding is line-oriented and hash-stable") {
  ActionPlan plan;
  plan.actions.push_back(
      {Action::Verb::Remove, UnitId{"old", v(1, 0, 0), Kind::Bundle}, {}});
  plan.actions.push_back(
      {Action::Verb::Install, UnitId{"app", v(2, 1, 0), Kind::Native}, {}});

  CHECK(encode_plan(plan) == "remove\told\t1.0.0\tbundle\n"
                             "install\tapp\t2.1.0\tnative\n");
  CHECK(sha256_hex(encode_plan(plan)) ==
        sha256_hex("remove\told\t1.0.0\tbundle\ninstall\tapp\t2.1.0\tnative\n"));
}

TEST_CASE("order_actions: removals first, installs leaves-first, deterministic") {
  Descriptor c = make_unit("c", v(1), {{"svc.c", v(1)}});
  Descriptor b = make_unit("b", v(1), {{"svc.b", v(1)}},
                           {group(GroupOp::And, {ep("svc.c")})});
  Descriptor a = make_unit("a", v(1), {{"svc.a", v(1)}},
                           {group(GroupOp::And, {ep("svc.b")})});
  Descriptor doomed = make_unit("doomed", v(1), {{"svc.d", v(1)}});

  DependencyTree tree;
  for (const Descriptor *d : {&a, &b, &c}) {
    TreeNode node;
    node.id = d->id;
    node.descriptor = *d;
    node.expanded = true;
    tree.nodes[d->id] = node;
  }

  PlatformStatus status;
  status.records.push_back(installed(doomed));

  CandidateSolution solution;
  solution.selected = {a.id, b.id, c.id};
  std::sort(solution.selected.begin(), solution.selected.end());
  solution.displaced = {doomed.id};

  ActionPlan plan = order_actions(solution, tree, status);
  REQUIRE(plan.actions.size() == 4);
  CHECK(plan.actions[0].verb == Action::Verb::Remove);
  CHECK(plan.actions[0].unit == doomed.id);
  // Leaves first: c before b before a.
  CHECK(plan.actions[1].unit == c.id);
  CHECK(plan.actions[2].unit == b.id);
  CHECK(plan.actions[3].unit == a.id);
  CHECK_FALSE(plan.plan_hash.empty());

  for (int i = 0; i < 10; ++i) {
    ActionPlan again = order_actions(solution, tree, status);
    CHECK(encode_plan(again) == encode_plan(plan));
    CHECK(again.plan_hash == plan.plan_hash);
  }
}

TEST_CASE("execute_plan installs, records status, and clears the journal") {
  Bench bench;
  Descriptor a = make_unit("a", v(1, 2, 0), {{"svc.a", v(1, 2, 0)}});
  Descriptor b = make_unit("b", v(1), {{"svc.b", v(1)}}, {}, Kind::Native);

  ActionPlan plan =
      bench.plan({bench.stage_install(a), bench.stage_install(b)});
  ExecutionReport report = execute_plan(plan, bench.env);
  CHECK(report.actions.size() == 2);

  PlatformStatus status = load_status(bench.env.status_path);
  CHECK(status.records.size() == 2);
  CHECK(status.find(a.id));
  CHECK(status.find(b.id));

  fs::path unit_dir = SandboxLayerManager::unit_dir(a.id, bench.root);
  CHECK(read_file(unit_dir / "package") == "package:" + a.id.spec());
  std::string receipt = read_file(unit_dir / "receipt");
  CHECK(receipt.find("Name: a\n") != std::string::npos);
  CHECK(receipt.find("Package-SHA256: " + a.package_sha256) != std::string::npos);

  CHECK_FALSE(journal_pending(bench.root));
  CHECK_FALSE(fs::exists(bench.root / ".resolvit.lock"));
}

TEST_CASE("remove undoes install exactly, byte for byte") {
  Bench bench;
  Descriptor a = make_unit("a", v(1), {{"svc.a", v(1)}});

  auto before = snapshot_tree(bench.root);
  execute_plan(bench.plan({bench.stage_install(a)}), bench.env);
  auto installed_tree = snapshot_tree(bench.root);
  CHECK(installed_tree != before);

  execute_plan(bench.plan({{Action::Verb::Remove, a.id, {}}}), bench.env);
  auto after = snapshot_tree(bench.root);
  // The status file legitimately differs (empty vs absent); everything
  // else must be back.
  after.erase("status");
  auto expected = before;
  expected.erase("status");
  CHECK(after == expected);
  CHECK(load_status(bench.env.status_path).records.empty());
}

TEST_CASE("a mid-plan fault rolls the platform back byte-identically") {
  Bench bench;
  Descriptor a = make_unit("a", v(1), {{"svc.a", v(1)}});
  Descriptor boom = make_unit("boom", v(1), {{"svc.boom", v(1)}});
  Descriptor base = make_unit("base", v(1), {{"svc.base", v(1)}});

  // Seed an installed unit so the pre-state has a real status file.
  execute_plan(bench.plan({bench.stage_install(base)}), bench.env);

  bench.env.managers[Kind::Bundle] =
      std::make_shared<FaultyManager>(Kind::Bundle, "boom");
  auto before = snapshot_tree(bench.root);

  ActionPlan plan =
      bench.plan({bench.stage_install(a), bench.stage_install(boom)});
  try {
    execute_plan(plan, bench.env);
    FAIL("expected ExecutionFailed");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::ExecutionFailed);
  }

  CHECK(snapshot_tree(bench.root) == before);
  CHECK_FALSE(journal_pending(bench.root));
  PlatformStatus status = load_status(bench.env.status_path);
  CHECK(status.records.size() == 1);
  CHECK(status.find(base.id));
}

TEST_CASE("a failed removal restores the removed units from the cache") {
  Bench bench;
  Descriptor gone = make_unit("gone", v(1), {{"svc.gone", v(1)}});
  Descriptor boom = make_unit("boom", v(1), {{"svc.boom", v(1)}});
  execute_plan(bench.plan({bench.stage_install(gone)}), bench.env);

  bench.env.managers[Kind::Bundle] =
      std::make_shared<FaultyManager>(Kind::Bundle, "boom");
  auto before = snapshot_tree(bench.root);

  ActionPlan plan = bench.plan(
      {{Action::Verb::Remove, gone.id, {}}, bench.stage_install(boom)});
  CHECK_THROWS_AS(execute_plan(plan, bench.env), Error);

  // The removal ran before the fault; rollback reinstalled from the cache.
  CHECK(snapshot_tree(bench.root) == before);
}

TEST_CASE("crash recovery replays the journal") {
  Bench bench;
  Descriptor base = make_unit("base", v(1), {{"svc.base", v(1)}});
  execute_plan(bench.plan({bench.stage_install(base)}), bench.env);
  auto before = snapshot_tree(bench.root);

  // Simulate a crash after the journal recorded an install but before the
  // transaction finished: write the records by hand, apply the physical
  // action, then "reboot" and recover.
  Descriptor half = make_unit("half", v(1), {{"svc.half", v(1)}});
  std::string status_bytes = read_file(bench.env.status_path);
  std::string snap_hash = sha256_hex(status_bytes);
  atomic_write_file(bench.cache / "meta" / snap_hash, status_bytes);

  Journal journal(bench.root);
  journal.append("snapshot", UnitId{"-", {}, Kind::Bundle}, snap_hash);
  journal.append("install", half.id, "-");
  fs::path pkg = bench.cache / "pkgs" / half.package_sha256;
  atomic_write_file(pkg, "package:" + half.id.spec());
  SandboxLayerManager(Kind::Bundle).install(half.id, pkg, bench.root);

  CHECK(journal_pending(bench.root));
  // A new transaction refuses to start while the journal is pending.
  Descriptor other = make_unit("other", v(1), {{"svc.o", v(1)}});
  CHECK_THROWS_AS(
      execute_plan(bench.plan({bench.stage_install(other)}), bench.env), Error);

  rollback(bench.env);
  CHECK_FALSE(journal_pending(bench.root));
  CHECK(snapshot_tree(bench.root) == before);
}

TEST_CASE("journal reader tolerates a torn trailing line") {
  Bench bench;
  Journal journal(bench.root);
  journal.append("install", UnitId{"a", v(1), Kind::Bundle}, "-");
  journal.append("install", UnitId{"b", v(1), Kind::Bundle}, "-");

  // Simulate a crash mid-append: chop the last line in half.
  fs::path path = Journal::path_for(bench.root);
  std::string bytes = read_file(path);
  atomic_write_file(path, bytes.substr(0, bytes.size() - 9));

  auto records = Journal::read(bench.root);
  REQUIRE(records.size() == 1);
  CHECK(records[0].unit.name == "a");
  CHECK(records[0].state == "done");
}

TEST_CASE("concurrent executions are excluded by the platform lock") {
  Bench bench;
  Descriptor a = make_unit("a", v(1), {{"svc.a", v(1)}});
  atomic_write_file(bench.root / ".resolvit.lock", "held\n");
  try {
    execute_plan(bench.plan({bench.stage_install(a)}), bench.env);
    FAIL("expected LockHeld");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::LockHeld);
  }
  fs::remove(bench.root / ".resolvit.lock");
  execute_plan(bench.plan({bench.stage_install(a)}), bench.env);
  CHECK(load_status(bench.env.status_path).records.size() == 1);
}

TEST_CASE("a dirty platform refuses new transactions") {
  Bench bench;
  Descriptor a = make_unit("a", v(1), {{"svc.a", v(1)}});
  atomic_write_file(bench.root / ".resolvit.dirty", "rollback failed\n");
  try {
    execute_plan(bench.plan({bench.stage_install(a)}), bench.env);
    FAIL("expected RollbackFailed");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::RollbackFailed);
  }
}
