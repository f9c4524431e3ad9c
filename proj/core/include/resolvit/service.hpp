#pragma once

#include "resolvit/engine.hpp"

#include <string>

namespace resolvit {

struct ResolveResponse {
  int http_status = 200;
  std::string body; // plan bytes on 200, diagnostics otherwise
  std::string plan_hash;
  std::uint64_t total_disk_kib = 0;
  std::uint64_t total_cost = 0;
};

// Stateless remote check: the request carries the target, the platform
// profile and the platform status inline; the response body is the exact
// plan encoding a local check would print.
//
// Request payload (text/plain): header lines "Key: value" up to a blank
// line, then the platform status in stanza form. Headers: Target
// (required), Policy, Conflict-Policy, Architecture, Os,
// Disk-Available-KiB, Multi-Version-Kinds (comma-separated kinds).
ResolveResponse handle_resolve(Engine &engine, const std::string &payload);

// Blocking HTTP server: POST /v1/resolve, GET /v1/health.
int serve(Engine &engine, const std::string &host, int port);

} // namespace resolvit
