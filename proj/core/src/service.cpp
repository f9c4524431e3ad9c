#include "resolvit/service.hpp"

#include "resolvit/errors.hpp"

#include <httplib.h>

#include <charconv>
#include <map>

namespace resolvit {

namespace {

struct ResolvePayload {
  ResolutionTarget target;
  std::string policy;
  ConflictPolicy conflict_policy;
  PlatformProfile profile;
  PlatformStatus status;
};

ResolvePayload parse_payload(const Engine &engine, const std::string &payload) {
  ResolvePayload out;
  out.policy = engine.config().default_policy;
  out.conflict_policy = engine.config().default_conflict_policy;
  out.profile = engine.config().profile;

  std::map<std::string, std::string> headers;
  size_t pos = 0;
  while (pos < payload.size() && payload[pos] != '\n') {
    size_t eol = payload.find('\n', pos);
    if (eol == std::string::npos)
      throw Error(Errc::MalformedDocument, "truncated request payload");
    std::string line = payload.substr(pos, eol - pos);
    pos = eol + 1;
    auto colon = line.find(": ");
    if (colon == std::string::npos)
      throw Error(Errc::MalformedDocument, "malformed header line '" + line + "'");
    headers[line.substr(0, colon)] = line.substr(colon + 2);
  }
  if (pos < payload.size())
    ++pos; // blank separator line
  out.status = parse_status(payload.substr(pos));

  auto it = headers.find("Target");
  if (it == headers.end())
    throw Error(Errc::MalformedDocument, "missing Target header");
  out.target = parse_target(it->second);

  for (const auto &[key, value] : headers) {
    if (key == "Target") {
      continue;
    } else if (key == "Policy") {
      out.policy = value;
    } else if (key == "Conflict-Policy") {
      out.conflict_policy = parse_conflict_policy(value);
    } else if (key == "Architecture") {
      out.profile.architecture = value;
    } else if (key == "Os") {
      out.profile.os = value;
    } else if (key == "Disk-Available-KiB") {
      std::uint64_t disk = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), disk);
      if (ec != std::errc() || ptr != value.data() + value.size())
        throw Error(Errc::MalformedDocument, "bad Disk-Available-KiB value");
      out.profile.disk_available_kib = disk;
    } else if (key == "Multi-Version-Kinds") {
      out.profile.multi_version_kinds.clear();
      size_t p = 0;
      while (p < value.size()) {
        size_t comma = value.find(',', p);
        std::string kind =
            value.substr(p, comma == std::string::npos ? comma : comma - p);
        out.profile.multi_version_kinds.insert(parse_kind(kind));
        p = comma == std::string::npos ? value.size() : comma + 1;
      }
    } else {
      throw Error(Errc::MalformedDocument, "unknown header '" + key + "'");
    }
  }
  return out;
}

} // namespace

ResolveResponse handle_resolve(Engine &engine, const std::string &payload) {
  ResolveResponse response;
  ResolvePayload request;
  try {
    request = parse_payload(engine, payload);
  } catch (const Error &e) {
    response.http_status = 400;
    response.body = std::string(e.what()) + "\n";
    return response;
  }

  // The service profile must be explicit for determinism; reuse the engine
  // profile when the payload omits fields.
  EngineConfig config = engine.config();
  config.profile = request.profile;
  Engine scoped(config);
  try {
    CheckResult result = scoped.check(request.target, request.policy,
                                      request.conflict_policy, request.status);
    response.body = encode_plan(result.plan);
    response.plan_hash = result.plan.plan_hash;
    response.total_disk_kib = result.solution.total_disk_kib;
    response.total_cost = result.solution.total_cost;
  } catch (const Error &e) {
    switch (e.code()) {
    case Errc::RepositoryUnavailable:
      response.http_status = 502;
      break;
    case Errc::NoSolution:
    case Errc::NoProviderFound:
    case Errc::Conflict:
      response.http_status = 422;
      break;
    case Errc::UsageError:
    case Errc::UnknownPolicy:
    case Errc::MalformedVersion:
      response.http_status = 400;
      break;
    default:
      response.http_status = 502;
    }
    response.body = std::string(errc_name(e.code())) + ": " + e.what() + "\n";
  }
  return response;
}

int serve(Engine &engine, const std::string &host, int port) {
  httplib::Server server;

  server.Get("/v1/health",
             [](const httplib::Request &, httplib::Response &res) {
               res.set_content("ok\n", "text/plain; charset=utf-8");
             });

  server.Post("/v1/resolve", [&engine](const httplib::Request &req,
                                       httplib::Response &res) {
    ResolveResponse response = handle_resolve(engine, req.body);
    res.status = response.http_status;
    res.set_content(response.body, "text/plain; charset=utf-8");
    if (response.http_status == 200) {
      res.set_header("X-Resolvit-Plan-Hash", response.plan_hash);
      res.set_header("X-Resolvit-Disk-KiB",
                     std::to_string(response.total_disk_kib));
      res.set_header("X-Resolvit-Cost", std::to_string(response.total_cost));
    }
  });

  return server.listen(host, port) ? 0 : 1;
}

} // namespace resolvit
