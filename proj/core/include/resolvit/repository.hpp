#pragma once

#include "resolvit/model.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace resolvit {

struct RepositorySource {
  std::string base_url; // http://... or file://..., no trailing slash
  std::string trust_label;

  static RepositorySource make(std::string url, std::string trust_label = "default");
};

struct FetchRecord {
  enum class Outcome { Network, CacheHit, Error };
  enum class Resource { Index, Descriptor, Package };

  std::string url;
  Outcome outcome;
  Resource resource;
};

struct FetchLog {
  std::vector<FetchRecord> records;

  void add(std::string url, FetchRecord::Outcome outcome,
           FetchRecord::Resource resource) {
    records.push_back({std::move(url), outcome, resource});
  }
  size_t count(FetchRecord::Resource resource) const;
  size_t network_count() const;
};

struct IndexSnapshot {
  RepositorySource source;
  std::vector<IndexEntry> entries;
  std::string fetched_at;
  bool stale = false; // served from cache after a failed refresh
};

// Raw byte transport; returns false on any unavailability (non-2xx,
// connection failure, missing file).
using Transport = std::function<bool(const std::string &url, std::string &out)>;

Transport default_transport();

class RepositoryClient {
public:
  RepositoryClient(std::filesystem::path cache_dir,
                   Transport transport = default_transport());

  const std::filesystem::path &cache_dir() const { return cache_dir_; }

  // Fetches <base>/index.xml; on failure falls back to the cached copy
  // (stale=true) or throws RepositoryUnavailable on a cold cache.
  IndexSnapshot refresh_index(const RepositorySource &source, FetchLog &log);

  Descriptor fetch_descriptor(const IndexEntry &entry,
                              const RepositorySource &source, FetchLog &log);

  // Execution-phase only; returns the verified cache path.
  std::filesystem::path fetch_package(const IndexEntry &entry,
                                      const RepositorySource &source,
                                      FetchLog &log);

  std::filesystem::path meta_path(const std::string &sha256) const;
  std::filesystem::path package_path(const std::string &sha256) const;

  // Stores bytes in the metadata cache and returns their hash. Used by the
  // executor to pin pre-transaction state.
  std::string store_meta(std::string_view bytes);

private:
  std::string fetch_verified(const std::string &url,
                             const std::filesystem::path &cache_path,
                             const std::string &expected_sha256, FetchLog &log,
                             FetchRecord::Resource resource);

  std::filesystem::path cache_dir_;
  Transport transport_;
};

// Providers of service_name within range across snapshots, ordered by
// (unit name asc, version desc, snapshot order), deduplicated by unit id.
// Second element of each pair is the snapshot index the entry came from.
std::vector<std::pair<IndexEntry, size_t>>
find_providers(std::string_view service_name, const VersionRange &range,
               const std::vector<IndexSnapshot> &snapshots);

} // namespace resolvit
