#include "resolvit/engine.hpp"
#include "resolvit/errors.hpp"
#include "resolvit/service.hpp"

#include <CLI11.hpp>

#include <sys/utsname.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <iostream>

namespace {

using namespace resolvit;

int exit_code_for(Errc code) {
  switch (code) {
  case Errc::UsageError:
  case Errc::UnknownPolicy:
  case Errc::MalformedVersion:
  case Errc::NotInstalled:
    return 2;
  case Errc::NoSolution:
  case Errc::NoProviderFound:
    return 3;
  case Errc::Conflict:
    return 4;
  case Errc::ExecutionFailed:
  case Errc::LockHeld:
  case Errc::RollbackFailed:
  case Errc::CycleError:
  case Errc::DuplicateInstall:
    return 5;
  default:
    return 6;
  }
}

std::vector<std::string> split_csv(const std::string &text) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string item =
        text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!item.empty())
      out.push_back(item);
    if (comma == std::string::npos)
      break;
    pos = comma + 1;
  }
  return out;
}

struct CliOptions {
  std::string root;
  std::string cache;
  std::vector<std::string> repos;
  std::string policy = "minimal-units";
  std::string conflict = "abort";
  std::string arch;
  std::string os;
  std::uint64_t disk_kib = std::uint64_t(1) << 40;
  std::string multi_version = "bundle";
};

EngineConfig make_config(const CliOptions &opts) {
  EngineConfig config;

  std::string root = opts.root;
  if (root.empty())
    if (const char *env = std::getenv("RESOLVIT_ROOT"))
      root = env;
  if (root.empty())
    root = "platform";
  config.platform_root = root;

  std::string cache = opts.cache;
  if (cache.empty())
    if (const char *env = std::getenv("RESOLVIT_CACHE"))
      cache = env;
  if (cache.empty()) {
    if (const char *home = std::getenv("HOME"))
      cache = std::string(home) + "/.cache/resolvit";
    else
      cache = "/tmp/resolvit-cache";
  }
  config.cache_dir = cache;

  std::vector<std::string> repos = opts.repos;
  if (repos.empty())
    if (const char *env = std::getenv("RESOLVIT_REPOS"))
      repos = split_csv(env);
  for (const std::string &url : repos)
    config.repositories.push_back(RepositorySource::make(url));

  config.default_policy = opts.policy;
  config.default_conflict_policy = parse_conflict_policy(opts.conflict);

  config.profile.architecture = opts.arch;
  config.profile.os = opts.os;
  if (config.profile.architecture.empty() || config.profile.os.empty()) {
    utsname uts{};
    if (uname(&uts) == 0) {
      if (config.profile.architecture.empty())
        config.profile.architecture = uts.machine;
      if (config.profile.os.empty()) {
        std::string sysname = uts.sysname;
        for (char &c : sysname)
          c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        config.profile.os = sysname;
      }
    }
  }
  config.profile.disk_available_kib = opts.disk_kib;
  config.profile.multi_version_kinds.clear();
  for (const std::string &kind : split_csv(opts.multi_version))
    config.profile.multi_version_kinds.insert(parse_kind(kind));
  return config;
}

void print_check_result(const CheckResult &result, const std::string &format) {
  if (result.any_stale_snapshot)
    std::cerr << "warning: one or more repository snapshots are stale "
                 "(served from cache)\n";
  if (format == "plan") {
    std::cout << encode_plan(result.plan);
    return;
  }
  if (result.plan.empty()) {
    std::cout << "nothing to do\n";
    return;
  }
  for (const Action &action : result.plan.actions)
    std::cout << (action.verb == Action::Verb::Install ? "install " : "remove  ")
              << action.unit.spec() << "\n";
  std::cout << "plan-hash: " << result.plan.plan_hash << "\n";
  std::cout << "disk: " << result.solution.total_disk_kib
            << " KiB, cost: " << result.solution.total_cost << "\n";
}

int run_check(const CliOptions &opts, const std::string &target_spec,
              const std::string &format, bool execute) {
  EngineConfig config = make_config(opts);
  Engine engine(config);
  ResolutionTarget target = parse_target(target_spec);
  ConflictPolicy conflict = parse_conflict_policy(opts.conflict);

  CheckResult result = engine.check(target, opts.policy, conflict);
  print_check_result(result, format);
  if (!execute)
    return 0;

  ExecutionReport report = engine.install(target, opts.policy, conflict);
  if (format != "plan")
    std::cout << "executed " << report.actions.size() << " action(s)\n";
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"resolvit - dependency-resolving deployment engine"};
  app.require_subcommand(1);

  CliOptions opts;
  app.add_option("--root", opts.root, "platform root directory");
  app.add_option("--cache", opts.cache, "metadata/package cache directory");
  app.add_option("--repo", opts.repos, "repository base URL (repeatable)");
  app.add_option("--policy", opts.policy,
                 "selection policy: minimal-units|newest-versions|min-cost");
  app.add_option("--conflict", opts.conflict, "conflict policy: abort|replace");
  app.add_option("--arch", opts.arch, "platform architecture");
  app.add_option("--os", opts.os, "platform operating system");
  app.add_option("--disk-kib", opts.disk_kib, "available disk space in KiB");
  app.add_option("--multi-version", opts.multi_version,
                 "kinds allowed to coexist in several versions");

  std::string target_spec, format = "human", unit_spec, listen = "127.0.0.1:7373";
  bool dry_run = false;

  CLI::App *install = app.add_subcommand("install", "resolve and install a target");
  install->add_option("target", target_spec)->required();
  install->add_flag("--dry-run", dry_run, "print the plan, change nothing");
  install->add_option("--format", format)->check(CLI::IsMember({"human", "plan"}));

  CLI::App *check = app.add_subcommand("check", "resolve without executing");
  check->add_option("target", target_spec)->required();
  check->add_option("--format", format)->check(CLI::IsMember({"human", "plan"}));

  CLI::App *remove = app.add_subcommand("remove", "remove one installed unit");
  remove->add_option("unit", unit_spec, "unit:<name>@<version>:<kind>")->required();

  app.add_subcommand("list", "list installed units");
  app.add_subcommand("refresh", "refresh all repository indexes");

  CLI::App *serve_cmd = app.add_subcommand("serve", "run the resolve service");
  serve_cmd->add_option("--listen", listen, "host:port to listen on");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (install->parsed())
      return run_check(opts, target_spec, format, !dry_run);
    if (check->parsed())
      return run_check(opts, target_spec, format, false);

    if (remove->parsed()) {
      Engine engine(make_config(opts));
      ResolutionTarget target = parse_target(unit_spec);
      if (target.type != ResolutionTarget::Type::Unit)
        throw resolvit::Error(Errc::UsageError,
                              "remove expects a unit:<name>@<version>:<kind> spec");
      engine.remove_unit(target.unit);
      std::cout << "removed " << target.unit.spec() << "\n";
      return 0;
    }

    if (app.get_subcommand("list")->parsed()) {
      Engine engine(make_config(opts));
      PlatformStatus status = engine.platform_status();
      std::vector<InstallRecord> records = status.records;
      std::sort(records.begin(), records.end(),
                [](const InstallRecord &a, const InstallRecord &b) {
                  return a.id < b.id;
                });
      for (const InstallRecord &record : records)
        std::cout << record.id.spec() << "\n";
      return 0;
    }

    if (app.get_subcommand("refresh")->parsed()) {
      Engine engine(make_config(opts));
      RefreshReport report = engine.refresh_all();
      for (const RefreshReport::Entry &entry : report.entries) {
        if (!entry.error.empty())
          std::cout << entry.base_url << ": error: " << entry.error << "\n";
        else
          std::cout << entry.base_url << ": " << entry.unit_count
                    << " unit(s)" << (entry.stale ? " (stale)" : "") << "\n";
      }
      if (report.all_failed) {
        std::cerr << "error: all repositories failed with a cold cache\n";
        return 6;
      }
      return 0;
    }

    if (serve_cmd->parsed()) {
      auto colon = listen.rfind(':');
      if (colon == std::string::npos)
        throw resolvit::Error(Errc::UsageError, "--listen expects host:port");
      std::string host = listen.substr(0, colon);
      int port = std::stoi(listen.substr(colon + 1));
      Engine engine(make_config(opts));
      std::cerr << "listening on " << host << ":" << port << "\n";
      return serve(engine, host, port);
    }
  } catch (const resolvit::Error &e) {
    std::cerr << "error (" << errc_name(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
