#include "resolvit/repository.hpp"

#include "resolvit/codec.hpp"
#include "resolvit/errors.hpp"
#include "resolvit/status.hpp"
#include "resolvit/util.hpp"

#include <httplib.h>

#include <sys/file.h>

#include <algorithm>
#include <fcntl.h>
#include <unistd.h>

namespace resolvit {

namespace fs = std::filesystem;

RepositorySource RepositorySource::make(std::string url, std::string trust_label) {
  while (!url.empty() && url.back() == '/')
    url.pop_back();
  return RepositorySource{std::move(url), std::move(trust_label)};
}

size_t FetchLog::count(FetchRecord::Resource resource) const {
  return static_cast<size_t>(
      std::count_if(records.begin(), records.end(), [&](const FetchRecord &r) {
        return r.resource == resource;
      }));
}

size_t FetchLog::network_count() const {
  return static_cast<size_t>(
      std::count_if(records.begin(), records.end(), [](const FetchRecord &r) {
        return r.outcome == FetchRecord::Outcome::Network;
      }));
}

Transport default_transport() {
  return [](const std::string &url, std::string &out) -> bool {
    if (url.rfind("file://", 0) == 0) {
      fs::path path(url.substr(7));
      if (!fs::is_regular_file(path))
        return false;
      try {
        out = read_file(path);
      } catch (const Error &) {
        return false;
      }
      return true;
    }
    if (url.rfind("http://", 0) == 0) {
      std::string rest = url.substr(7);
      auto slash = rest.find('/');
      std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
      std::string target = slash == std::string::npos ? "/" : rest.substr(slash);
      httplib::Client client("http://" + host);
      client.set_connection_timeout(5, 0);
      client.set_read_timeout(15, 0);
      auto res = client.Get(target);
      if (!res || res->status < 200 || res->status >= 300)
        return false;
      out = res->body;
      return true;
    }
    return false;
  };
}

RepositoryClient::RepositoryClient(fs::path cache_dir, Transport transport)
    : cache_dir_(std::move(cache_dir)), transport_(std::move(transport)) {}

fs::path RepositoryClient::meta_path(const std::string &sha256) const {
  return cache_dir_ / "meta" / sha256;
}

fs::path RepositoryClient::package_path(const std::string &sha256) const {
  return cache_dir_ / "pkgs" / sha256;
}

std::string RepositoryClient::store_meta(std::string_view bytes) {
  std::string hash = sha256_hex(bytes);
  fs::path path = meta_path(hash);
  if (!fs::exists(path))
    atomic_write_file(path, bytes);
  return hash;
}

namespace {

// Advisory lock serializing index refreshes per cache directory.
class CacheLock {
public:
  explicit CacheLock(const fs::path &cache_dir) {
    fs::create_directories(cache_dir);
    fd_ = ::open((cache_dir / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ >= 0)
      ::flock(fd_, LOCK_EX);
  }
  ~CacheLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

private:
  int fd_ = -1;
};

} // namespace

IndexSnapshot RepositoryClient::refresh_index(const RepositorySource &source,
                                              FetchLog &log) {
  std::string url = source.base_url + "/index.xml";
  // Pointer file mapping the source URL to the current index content hash.
  fs::path pointer = cache_dir_ / "sources" / sha256_hex(source.base_url);

  std::string body;
  if (transport_(url, body)) {
    std::vector<IndexEntry> entries = parse_repository_index(body);
    CacheLock lock(cache_dir_);
    std::string hash = store_meta(body);
    atomic_write_file(pointer, hash + "\n");
    log.add(url, FetchRecord::Outcome::Network, FetchRecord::Resource::Index);
    return IndexSnapshot{source, std::move(entries), current_timestamp(), false};
  }

  if (fs::exists(pointer)) {
    std::string hash = read_file(pointer);
    while (!hash.empty() && (hash.back() == '\n' || hash.back() == '\r'))
      hash.pop_back();
    fs::path cached = meta_path(hash);
    if (fs::exists(cached)) {
      std::vector<IndexEntry> entries = parse_repository_index(read_file(cached));
      log.add(url, FetchRecord::Outcome::CacheHit, FetchRecord::Resource::Index);
      return IndexSnapshot{source, std::move(entries), current_timestamp(), true};
    }
  }
  log.add(url, FetchRecord::Outcome::Error, FetchRecord::Resource::Index);
  throw Error(Errc::RepositoryUnavailable,
              source.base_url + " is unreachable and the cache is cold");
}

std::string RepositoryClient::fetch_verified(const std::string &url,
                                             const fs::path &cache_path,
                                             const std::string &expected_sha256,
                                             FetchLog &log,
                                             FetchRecord::Resource resource) {
  if (fs::exists(cache_path)) {
    std::string bytes = read_file(cache_path);
    if (sha256_hex(bytes) == expected_sha256) {
      log.add(url, FetchRecord::Outcome::CacheHit, resource);
      return bytes;
    }
    // Corrupted cache entry: discard and refetch once.
    fs::remove(cache_path);
  }
  std::string body;
  if (!transport_(url, body)) {
    log.add(url, FetchRecord::Outcome::Error, resource);
    throw Error(Errc::NotFound, url + " is not available");
  }
  if (sha256_hex(body) != expected_sha256) {
    log.add(url, FetchRecord::Outcome::Error, resource);
    throw Error(Errc::IntegrityError, url + " does not match its declared sha256");
  }
  atomic_write_file(cache_path, body);
  log.add(url, FetchRecord::Outcome::Network, resource);
  return body;
}

Descriptor RepositoryClient::fetch_descriptor(const IndexEntry &entry,
                                              const RepositorySource &source,
                                              FetchLog &log) {
  std::string url = source.base_url + "/" + entry.descriptor_location;
  std::string bytes =
      fetch_verified(url, meta_path(entry.descriptor_sha256),
                     entry.descriptor_sha256, log, FetchRecord::Resource::Descriptor);
  return parse_descriptor(bytes);
}

fs::path RepositoryClient::fetch_package(const IndexEntry &entry,
                                         const RepositorySource &source,
                                         FetchLog &log) {
  std::string url = source.base_url + "/" + entry.package_location;
  fs::path path = package_path(entry.package_sha256);
  fetch_verified(url, path, entry.package_sha256, log,
                 FetchRecord::Resource::Package);
  return path;
}

std::vector<std::pair<IndexEntry, size_t>>
find_providers(std::string_view service_name, const VersionRange &range,
               const std::vector<IndexSnapshot> &snapshots) {
  std::vector<std::pair<IndexEntry, size_t>> out;
  for (size_t i = 0; i < snapshots.size(); ++i) {
    for (const IndexEntry &entry : snapshots[i].entries) {
      bool provides = false;
      for (const ServiceRef &ref : entry.provides)
        if (ref.name == service_name && range.contains(ref.version)) {
          provides = true;
          break;
        }
      if (!provides)
        continue;
      bool duplicate = false;
      for (const auto &[existing, src] : out)
        if (existing.id == entry.id) {
          duplicate = true; // first source wins
          break;
        }
      if (!duplicate)
        out.emplace_back(entry, i);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto &a, const auto &b) {
                     if (a.first.id.name != b.first.id.name)
                       return a.first.id.name < b.first.id.name;
                     int c = compare_versions(a.first.id.version, b.first.id.version);
                     if (c != 0)
                       return c > 0; // version descending
                     return false;  // keep snapshot order
                   });
  return out;
}

} // namespace resolvit
