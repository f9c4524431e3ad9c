#include "resolvit/executor.hpp"

#include "resolvit/errors.hpp"
#include "resolvit/util.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <set>

namespace resolvit {

namespace fs = std::filesystem;

std::string encode_plan(const ActionPlan &plan) {
  std::string out;
  for (const Action &a : plan.actions) {
    out += a.verb == Action::Verb::Install ? "install" : "remove";
    out += '\t';
    out += a.unit.name;
    out += '\t';
    out += format_version(a.unit.version);
    out += '\t';
    out += kind_name(a.unit.kind);
    out += '\n';
  }
  return out;
}

fs::path SandboxLayerManager::unit_dir(const UnitId &unit, const fs::path &root) {
  return root / kind_name(unit.kind) /
         (unit.name + "-" + format_version(unit.version));
}

void SandboxLayerManager::install(const UnitId &unit, const fs::path &package,
                                  const fs::path &platform_root) {
  fs::path dir = unit_dir(unit, platform_root);
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string bytes = read_file(package);
  atomic_write_file(dir / "package", bytes);
  std::string receipt = "Name: " + unit.name + "\n" +
                        "Version: " + format_version(unit.version) + "\n" +
                        "Kind: " + kind_name(unit.kind) + "\n" +
                        "Package-SHA256: " + sha256_hex(bytes) + "\n";
  atomic_write_file(dir / "receipt", receipt);
}

void SandboxLayerManager::remove(const UnitId &unit, const fs::path &platform_root) {
  fs::remove_all(unit_dir(unit, platform_root));
  // Drop the kind directory too once it is empty, so an undone install
  // leaves no trace in the tree.
  fs::path kind_dir = platform_root / kind_name(unit.kind);
  std::error_code ec;
  if (fs::is_directory(kind_dir, ec) && fs::is_empty(kind_dir, ec))
    fs::remove(kind_dir, ec);
}

LayerManagers sandbox_layer_managers() {
  LayerManagers managers;
  for (Kind kind : {Kind::Bundle, Kind::Native, Kind::Driver})
    managers[kind] = std::make_shared<SandboxLayerManager>(kind);
  return managers;
}

// ---------------------------------------------------------------------------
// Journal

fs::path Journal::path_for(const fs::path &root) {
  return root / ".resolvit.journal";
}

Journal::Journal(fs::path platform_root)
    : path_(path_for(platform_root)) {
  for (const JournalRecord &r : read(platform_root))
    next_seq_ = std::max(next_seq_, r.seq + 1);
}

void Journal::append_line(const JournalRecord &record) {
  fs::create_directories(path_.parent_path());
  int fd = ::open(path_.c_str(), O_CREAT | O_WRONLY | O_APPEND, 0644);
  if (fd < 0)
    throw Error(Errc::ExecutionFailed, "cannot open journal " + path_.string());
  std::string line = std::to_string(record.seq) + "\t" + record.verb + "\t" +
                     record.unit.name + "\t" +
                     format_version(record.unit.version) + "\t" +
                     kind_name(record.unit.kind) + "\t" + record.undo_hash +
                     "\t" + record.state + "\n";
  ssize_t n = ::write(fd, line.data(), line.size());
  ::fsync(fd);
  ::close(fd);
  if (n != static_cast<ssize_t>(line.size()))
    throw Error(Errc::ExecutionFailed, "short journal write");
}

std::uint64_t Journal::append(const std::string &verb, const UnitId &unit,
                              const std::string &undo_hash) {
  JournalRecord record{next_seq_++, verb, unit, undo_hash, "done"};
  append_line(record);
  return record.seq;
}

void Journal::mark_undone(std::uint64_t seq, const std::string &verb,
                          const UnitId &unit, const std::string &undo_hash) {
  append_line({seq, verb, unit, undo_hash, "undone"});
}

void Journal::clear() { fs::remove(path_); }

std::vector<JournalRecord> Journal::read(const fs::path &root) {
  fs::path path = path_for(root);
  std::vector<JournalRecord> records;
  if (!fs::exists(path))
    return records;
  std::string text = read_file(path);
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos)
      break; // torn trailing line from a crash: ignore
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    std::vector<std::string> fields;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == '\t') {
        fields.emplace_back(line.substr(start, i - start));
        start = i + 1;
      }
    if (fields.size() != 7)
      throw Error(Errc::CorruptState, "malformed journal line");
    JournalRecord r;
    r.seq = std::stoull(fields[0]);
    r.verb = fields[1];
    r.unit.name = fields[2];
    if (fields[3] != "-")
      r.unit.version = parse_version(fields[3]);
    r.unit.kind = fields[4] == "-" ? Kind::Bundle : parse_kind(fields[4]);
    r.undo_hash = fields[5];
    r.state = fields[6];
    records.push_back(std::move(r));
  }
  return records;
}

bool journal_pending(const fs::path &platform_root) {
  std::set<std::uint64_t> undone;
  std::vector<JournalRecord> records = Journal::read(platform_root);
  for (const JournalRecord &r : records)
    if (r.state == "undone")
      undone.insert(r.seq);
  for (const JournalRecord &r : records)
    if (r.state == "done" && !undone.count(r.seq))
      return true;
  return false;
}

// ---------------------------------------------------------------------------
// Ordering

namespace {

// Deterministic key: name ascending, version descending.
bool unit_order_less(const UnitId &a, const UnitId &b) {
  if (a.name != b.name)
    return a.name < b.name;
  int c = compare_versions(a.version, b.version);
  if (c != 0)
    return c > 0;
  return static_cast<int>(a.kind) < static_cast<int>(b.kind);
}

bool unit_provides(const Descriptor &d, std::string_view service,
                   const VersionRange &range) {
  for (const ServiceRef &ref : d.provides)
    if (ref.name == service && range.contains(ref.version))
      return true;
  return false;
}

} // namespace

ActionPlan order_actions(const CandidateSolution &solution,
                         const DependencyTree &tree,
                         const PlatformStatus &status,
                         const std::map<UnitId, fs::path> &package_paths) {
  ActionPlan plan;

  // Removals first. Displaced units are dependent-free by the
  // non-cascading rule, so the deterministic key is a full order.
  std::vector<UnitId> removals = solution.displaced;
  std::sort(removals.begin(), removals.end(), unit_order_less);
  for (const UnitId &id : removals)
    plan.actions.push_back({Action::Verb::Remove, id, {}});

  // Installs leaves-first: a unit goes in only after every co-installed
  // unit it depends on through a positive endpoint.
  std::vector<UnitId> pending = solution.selected;
  std::sort(pending.begin(), pending.end(), unit_order_less);

  auto descriptor_of = [&](const UnitId &id) -> const Descriptor * {
    auto it = tree.nodes.find(id);
    return it == tree.nodes.end() ? nullptr : &it->second.descriptor;
  };

  auto depends_on = [&](const UnitId &u, const UnitId &w) {
    const Descriptor *du = descriptor_of(u);
    const Descriptor *dw = descriptor_of(w);
    if (!du || !dw)
      return false;
    for (const DependencyGroup &group : du->groups) {
      if (group.op == GroupOp::Not)
        continue;
      for (const DependencyEndpoint &ep : group.endpoints)
        if (unit_provides(*dw, ep.service, ep.range))
          return true;
    }
    return false;
  };

  std::vector<UnitId> installed_order;
  while (!pending.empty()) {
    size_t chosen = pending.size();
    for (size_t i = 0; i < pending.size(); ++i) {
      bool ready = true;
      for (size_t j = 0; j < pending.size(); ++j)
        if (i != j && depends_on(pending[i], pending[j])) {
          ready = false;
          break;
        }
      if (ready) {
        chosen = i;
        break;
      }
    }
    // A dependency cycle among co-installed units: fall back to canonical
    // order, which is always defined, so CycleError cannot occur.
    if (chosen == pending.size())
      chosen = 0;
    installed_order.push_back(pending[chosen]);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(chosen));
  }

  for (const UnitId &id : installed_order) {
    Action action{Action::Verb::Install, id, {}};
    if (auto it = package_paths.find(id); it != package_paths.end())
      action.package_source = it->second;
    plan.actions.push_back(std::move(action));
  }

  (void)status;
  plan.plan_hash = sha256_hex(encode_plan(plan));
  return plan;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

class PlatformLock {
public:
  explicit PlatformLock(const fs::path &root) : path_(root / ".resolvit.lock") {
    fs::create_directories(root);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw Error(Errc::LockHeld,
                  "another execution holds " + path_.string());
    std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] ssize_t n = ::write(fd_, pid.data(), pid.size());
  }
  ~PlatformLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      fs::remove(path_);
    }
  }

private:
  fs::path path_;
  int fd_ = -1;
};

LayerManager &manager_for(const LayerManagers &managers, Kind kind) {
  auto it = managers.find(kind);
  if (it == managers.end())
    throw Error(Errc::ExecutionFailed,
                std::string("no layer manager for kind ") + kind_name(kind));
  return *it->second;
}

fs::path dirty_flag(const fs::path &root) { return root / ".resolvit.dirty"; }

void rollback_from_journal(const ExecutionEnv &env) {
  std::vector<JournalRecord> records = Journal::read(env.platform_root);
  std::set<std::uint64_t> undone;
  for (const JournalRecord &r : records)
    if (r.state == "undone")
      undone.insert(r.seq);

  Journal journal(env.platform_root);
  for (auto it = records.rbegin(); it != records.rend(); ++it) {
    const JournalRecord &r = *it;
    if (r.state != "done" || undone.count(r.seq))
      continue;
    if (r.verb == "install") {
      manager_for(env.managers, r.unit.kind).remove(r.unit, env.platform_root);
    } else if (r.verb == "remove") {
      fs::path package = env.cache_dir / "pkgs" / r.undo_hash;
      if (!fs::exists(package))
        throw Error(Errc::RollbackFailed,
                    "undo package missing from cache: " + r.undo_hash);
      manager_for(env.managers, r.unit.kind)
          .install(r.unit, package, env.platform_root);
    } else if (r.verb == "snapshot") {
      if (r.undo_hash == "-") {
        fs::remove(env.status_path);
      } else {
        fs::path blob = env.cache_dir / "meta" / r.undo_hash;
        atomic_write_file(env.status_path, read_file(blob));
      }
    } else {
      throw Error(Errc::RollbackFailed, "unknown journal verb '" + r.verb + "'");
    }
    journal.mark_undone(r.seq, r.verb, r.unit, r.undo_hash);
    undone.insert(r.seq);
  }
}

} // namespace

void rollback(const ExecutionEnv &env) {
  try {
    rollback_from_journal(env);
  } catch (const Error &) {
    atomic_write_file(dirty_flag(env.platform_root), "rollback failed\n");
    throw;
  }
  Journal(env.platform_root).clear();
  fs::remove(dirty_flag(env.platform_root));
}

ExecutionReport execute_plan(const ActionPlan &plan, const ExecutionEnv &env) {
  if (fs::exists(dirty_flag(env.platform_root)))
    throw Error(Errc::RollbackFailed,
                "platform is flagged dirty; manual intervention required");
  if (journal_pending(env.platform_root))
    throw Error(Errc::ExecutionFailed,
                "an unfinished journal is present; run rollback first");

  PlatformLock lock(env.platform_root);
  ExecutionReport report;
  if (plan.actions.empty())
    return report;

  PlatformStatus status = load_status(env.status_path);

  // Pin the removal targets' packages in the cache so every removal stays
  // undoable for the whole transaction.
  for (const Action &action : plan.actions) {
    if (action.verb != Action::Verb::Remove)
      continue;
    const InstallRecord *record = status.find(action.unit);
    if (!record)
      throw Error(Errc::NotInstalled, action.unit.spec() + " is not installed");
    fs::path cached = env.cache_dir / "pkgs" / record->package_sha256;
    if (!fs::exists(cached)) {
      fs::path live =
          SandboxLayerManager::unit_dir(action.unit, env.platform_root) /
          "package";
      if (fs::exists(live))
        atomic_write_file(cached, read_file(live));
    }
    if (!fs::exists(cached))
      throw Error(Errc::ExecutionFailed,
                  "no cached package for removable unit " + action.unit.spec());
  }

  Journal journal(env.platform_root);
  bool status_existed = fs::exists(env.status_path);
  std::string snapshot_hash = "-";
  if (status_existed) {
    std::string bytes = read_file(env.status_path);
    snapshot_hash = sha256_hex(bytes);
    fs::path blob = env.cache_dir / "meta" / snapshot_hash;
    if (!fs::exists(blob))
      atomic_write_file(blob, bytes);
  }
  journal.append("snapshot", UnitId{"-", {}, Kind::Bundle}, snapshot_hash);

  try {
    for (const Action &action : plan.actions) {
      auto start = std::chrono::steady_clock::now();
      if (action.verb == Action::Verb::Install) {
        if (action.package_source.empty() || !fs::exists(action.package_source))
          throw Error(Errc::ExecutionFailed,
                      "install action without a verified package: " +
                          action.unit.spec());
        auto dit = env.descriptors.find(action.unit);
        if (dit == env.descriptors.end())
          throw Error(Errc::ExecutionFailed,
                      "no descriptor for " + action.unit.spec());
        journal.append("install", action.unit, "-");
        manager_for(env.managers, action.unit.kind)
            .install(action.unit, action.package_source, env.platform_root);
        status = apply_change(
            status, InstallChange{make_install_record(dit->second,
                                                      current_timestamp())});
      } else {
        const InstallRecord *record = status.find(action.unit);
        if (!record)
          throw Error(Errc::NotInstalled,
                      action.unit.spec() + " is not installed");
        journal.append("remove", action.unit, record->package_sha256);
        manager_for(env.managers, action.unit.kind)
            .remove(action.unit, env.platform_root);
        status = apply_change(status, RemoveChange{action.unit});
      }
      save_status(status, env.status_path);
      double seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
      report.actions.push_back({action, seconds});
    }
  } catch (const Error &e) {
    if (e.code() == Errc::RollbackFailed)
      throw;
    rollback(env); // throws RollbackFailed (and flags dirty) if it cannot
    throw Error(Errc::ExecutionFailed,
                std::string("execution failed, platform rolled back: ") +
                    e.what());
  }

  journal.clear();
  return report;
}

} // namespace resolvit
