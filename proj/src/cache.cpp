#include "htc/cache.hpp"

#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "htc/errors.hpp"
#include "htc/hashing.hpp"

namespace htc {

using nlohmann::json;

std::string CacheKey::canonical() const {
  json tuple = json::array({model_id, instruction, input_text, max_output_length, temperature});
  return tuple.dump();
}

std::filesystem::path ResponseCache::store_file(const std::filesystem::path& dir) {
  return dir / "responses.jsonl";
}

std::filesystem::path ResponseCache::stats_file(const std::filesystem::path& dir) {
  return dir / "stats.json";
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!dir_.empty()) load();
}

ResponseCache::~ResponseCache() {
  try {
    flush();
  } catch (...) {
    // a failed stats write must not terminate
  }
}

void ResponseCache::load() {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);

  const auto store = store_file(dir_);
  std::ifstream in(store, std::ios::binary);
  if (in) {
    std::string line;
    std::size_t line_no = 0;
    std::size_t corrupt = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        json rec = json::parse(line);
        const auto& k = rec.at("key");
        CacheKey key{k.at(0).get<std::string>(), k.at(1).get<std::string>(),
                     k.at(2).get<std::string>(), k.at(3).get<int>(), k.at(4).get<double>()};
        CacheEntry entry{rec.at("response").get<std::string>(),
                         rec.at("created_at").get<std::int64_t>()};
        const std::string checksum = rec.at("checksum").get<std::string>();
        if (checksum != to_hex(fnv1a64(key.canonical() + entry.response))) {
          ++corrupt;
          continue;
        }
        entries_[key.canonical()] = std::move(entry);  // later lines win
      } catch (const json::exception&) {
        ++corrupt;
      }
    }
    if (corrupt > 0) {
      std::cerr << "warning: cache: " << corrupt << " corrupt entr"
                << (corrupt == 1 ? "y" : "ies") << " in " << store.string()
                << " ignored (treated as misses)\n";
    }
  }

  std::ifstream stats_in(stats_file(dir_), std::ios::binary);
  if (stats_in) {
    try {
      json s = json::parse(stats_in);
      hits_ = s.value("hits", std::size_t{0});
      misses_ = s.value("misses", std::size_t{0});
    } catch (const json::exception&) {
      std::cerr << "warning: cache: stats sidecar unreadable, counters reset\n";
      hits_ = 0;
      misses_ = 0;
    }
  }
}

std::optional<CacheEntry> ResponseCache::get(const CacheKey& key) {
  std::unique_lock lock(mutex_);  // counters mutate on every lookup
  auto it = entries_.find(key.canonical());
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void ResponseCache::put(const CacheKey& key, CacheEntry entry) {
  const std::string canonical = key.canonical();
  json rec{
      {"key", json::array({key.model_id, key.instruction, key.input_text, key.max_output_length,
                           key.temperature})},
      {"response", entry.response},
      {"created_at", entry.created_at},
      {"checksum", to_hex(fnv1a64(canonical + entry.response))},
  };
  std::unique_lock lock(mutex_);
  entries_[canonical] = std::move(entry);
  if (!dir_.empty()) append_line(rec.dump());
}

void ResponseCache::append_line(const std::string& line) {
  std::ofstream out(store_file(dir_), std::ios::binary | std::ios::app);
  if (!out) {
    throw BackendError(ErrorCode::corrupt_cache_file,
                       "cache: cannot append to " + store_file(dir_).string());
  }
  out << line << '\n';
}

CacheStats ResponseCache::stats() const {
  std::shared_lock lock(mutex_);
  return {entries_.size(), hits_, misses_};
}

void ResponseCache::flush() {
  if (dir_.empty()) return;
  std::unique_lock lock(mutex_);
  json s{{"hits", hits_}, {"misses", misses_}};
  std::ofstream out(stats_file(dir_), std::ios::binary | std::ios::trunc);
  if (out) out << s.dump() << '\n';
}

void ResponseCache::purge() {
  std::unique_lock lock(mutex_);
  entries_.clear();
  hits_ = 0;
  misses_ = 0;
  if (!dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove(store_file(dir_), ec);
    std::filesystem::remove(stats_file(dir_), ec);
  }
}

}  // namespace htc
