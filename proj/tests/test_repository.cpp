#include "resolvit/codec.hpp"
#include "resolvit/errors.hpp"
#include "resolvit/repository.hpp"
#include "resolvit/util.hpp"

#include "fixtures.hpp"

#include <doctest.h>

using namespace resolvit;
using namespace fixtures;

namespace {

struct Workspace {
  TempDir tmp;
  FixtureRepo repo{tmp.path() / "repo"};
  RepositoryClient client{tmp.path() / "cache"};

  RepositorySource source() const { return RepositorySource::make(repo.url()); }
};

// Transport that counts calls and can be switched off to simulate an
// unreachable repository.
struct FlakyTransport {
  Transport inner = default_transport();
  bool up = true;
  int calls = 0;

  Transport fn() {
    return [this](const std::string &url, std::string &out) {
      ++calls;
      return up && inner(url, out);
    };
  }
};

} // namespace

TEST_CASE("refresh_index fetches, caches, and falls back when offline") {
  TempDir tmp;
  FixtureRepo repo(tmp.path() / "repo");
  repo.add(make_unit("a", v(1, 2, 0), {{"svc.a", v(1, 2, 0)}}));
  repo.write_index();

  FlakyTransport transport;
  RepositoryClient client(tmp.path() / "cache", transport.fn());
  RepositorySource source = RepositorySource::make(repo.url());

  FetchLog log;
  IndexSnapshot snap = client.refresh_index(source, log);
  CHECK(snap.entries.size() == 1);
  CHECK_FALSE(snap.stale);
  CHECK(log.network_count() == 1);

  // Offline: cached copy is served and flagged stale.
  transport.up = false;
  FetchLog log2;
  IndexSnapshot cached = client.refresh_index(source, log2);
  CHECK(cached.stale);
  CHECK(cached.entries == snap.entries);
  CHECK(log2.network_count() == 0);

  // Cold cache plus offline is a hard failure.
  RepositoryClient cold(tmp.path() / "cache2", transport.fn());
  FetchLog log3;
  try {
    cold.refresh_index(source, log3);
    FAIL("expected RepositoryUnavailable");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::RepositoryUnavailable);
  }
}

TEST_CASE("descriptor fetches verify integrity and hit the cache") {
  Workspace ws;
  Descriptor a = make_unit("a", v(1), {{"svc.a", v(1)}});
  ws.repo.add(a);
  ws.repo.write_index();

  FetchLog log;
  IndexSnapshot snap = ws.client.refresh_index(ws.source(), log);
  const IndexEntry &entry = snap.entries[0];

  Descriptor fetched = ws.client.fetch_descriptor(entry, snap.source, log);
  CHECK(fetched.id == a.id);
  size_t network_after_first = log.network_count();

  // Second fetch is served from the content-addressed cache.
  Descriptor again = ws.client.fetch_descriptor(entry, snap.source, log);
  CHECK(again == fetched);
  CHECK(log.network_count() == network_after_first);

  // A corrupt cache entry is discarded and refetched once.
  atomic_write_file(ws.client.meta_path(entry.descriptor_sha256), "garbage");
  FetchLog log2;
  Descriptor refetched = ws.client.fetch_descriptor(entry, snap.source, log2);
  CHECK(refetched == fetched);
  CHECK(log2.network_count() == 1);

  // If the origin itself serves tampered bytes, that is an integrity error.
  atomic_write_file(ws.client.meta_path(entry.descriptor_sha256), "garbage");
  atomic_write_file(ws.repo.dir() / entry.descriptor_location, "garbage");
  FetchLog log3;
  try {
    ws.client.fetch_descriptor(entry, snap.source, log3);
    FAIL("expected IntegrityError");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::IntegrityError);
  }
}

TEST_CASE("package fetches are verified and cached under their hash") {
  Workspace ws;
  Descriptor a = make_unit("a", v(1), {{"svc.a", v(1)}});
  ws.repo.add(a);
  ws.repo.write_index();

  FetchLog log;
  IndexSnapshot snap = ws.client.refresh_index(ws.source(), log);
  const IndexEntry &entry = snap.entries[0];

  fs::path pkg = ws.client.fetch_package(entry, snap.source, log);
  CHECK(pkg == ws.client.package_path(entry.package_sha256));
  CHECK(sha256_file_hex(pkg) == entry.package_sha256);

  size_t network = log.network_count();
  ws.client.fetch_package(entry, snap.source, log);
  CHECK(log.network_count() == network); // cache hit

  // Missing origin file (index points at nothing).
  IndexEntry missing = entry;
  missing.package_location = "pkgs/none.pkg";
  missing.package_sha256 = sha256_hex("never stored");
  FetchLog log2;
  try {
    ws.client.fetch_package(missing, snap.source, log2);
    FAIL("expected NotFound");
  } catch (const Error &e) {
    CHECK(e.code() == Errc::NotFound);
  }
}

TEST_CASE("find_providers orders by name, version desc, source order") {
  TempDir tmp;
  FixtureRepo repo1(tmp.path() / "r1");
  FixtureRepo repo2(tmp.path() / "r2");

  Descriptor a1 = make_unit("a", v(1, 0, 0), {{"svc.x", v(1, 0, 0)}});
  Descriptor a2 = make_unit("a", v(1, 4, 0), {{"svc.x", v(1, 4, 0)}});
  Descriptor b = make_unit("b", v(2, 0, 0), {{"svc.x", v(2, 0, 0)}});
  repo1.add(a1);
  repo2.add(a2);
  repo2.add(b);
  repo2.add(a1); // duplicate id in the second source; first source wins
  repo1.write_index();
  repo2.write_index();

  RepositoryClient client(tmp.path() / "cache");
  FetchLog log;
  std::vector<IndexSnapshot> snaps = {
      client.refresh_index(RepositorySource::make(repo1.url()), log),
      client.refresh_index(RepositorySource::make(repo2.url()), log)};

  auto hits = find_providers("svc.x", VersionRange::any(), snaps);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].first.id == a2.id);
  CHECK(hits[1].first.id == a1.id);
  CHECK(hits[1].second == 0); // deduplicated: kept the first source's entry
  CHECK(hits[2].first.id == b.id);

  auto ranged = find_providers("svc.x", VersionRange::parse("[1.1.0,2.0.0)"), snaps);
  REQUIRE(ranged.size() == 1);
  CHECK(ranged[0].first.id == a2.id);

  CHECK(find_providers("svc.none", VersionRange::any(), snaps).empty());
}

TEST_CASE("index updates are picked up on the next refresh") {
  Workspace ws;
  Descriptor a = make_unit("a", v(1), {{"svc.a", v(1)}});
  ws.repo.add(a);
  ws.repo.write_index();

  FetchLog log;
  CHECK(ws.client.refresh_index(ws.source(), log).entries.size() == 1);

  ws.repo.add(make_unit("b", v(1), {{"svc.b", v(1)}}));
  ws.repo.write_index();
  CHECK(ws.client.refresh_index(ws.source(), log).entries.size() == 2);
}
