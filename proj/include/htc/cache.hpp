#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

namespace htc {

// The full request tuple. Keys compare by value, so distinct requests can
// never collide.
struct CacheKey {
  std::string model_id;
  std::string instruction;
  std::string input_text;
  int max_output_length = 4;
  double temperature = 0.0;

  // Canonical serialization; equality of keys is equality of this string.
  std::string canonical() const;
  bool operator==(const CacheKey&) const = default;
};

struct CacheEntry {
  std::string response;
  std::int64_t created_at = 0;  // unix seconds
};

struct CacheStats {
  std::size_t entries = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
};

// Keyed store of raw model responses, persisted as one append-safe JSONL
// file plus a stats sidecar. Entries carry a checksum; lines that fail to
// parse or verify are skipped with a warning and count as misses.
// Concurrent readers are fine; writers are serialized.
class ResponseCache {
 public:
  // Opens (or lazily creates) the store under `dir`. An empty dir disables
  // persistence: the cache then lives only in memory.
  explicit ResponseCache(std::filesystem::path dir = {});
  ~ResponseCache();

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  std::optional<CacheEntry> get(const CacheKey& key);
  void put(const CacheKey& key, CacheEntry entry);

  CacheStats stats() const;

  // Persists cumulative hit/miss counters to the sidecar.
  void flush();

  // Removes all entries and persisted state.
  void purge();

  const std::filesystem::path& directory() const { return dir_; }

  static std::filesystem::path store_file(const std::filesystem::path& dir);
  static std::filesystem::path stats_file(const std::filesystem::path& dir);

 private:
  void load();
  void append_line(const std::string& line);

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheEntry> entries_;  // keyed by canonical()
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace htc
