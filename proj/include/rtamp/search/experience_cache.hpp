#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace rtamp {

/// Motion costs of previously evaluated edges, keyed by (source state, action, geometry version).
/// Entries recorded under another geometry version are never returned.
class ExperienceCache {
public:
  struct Entry {
    std::string state_key;
    std::string action;
    std::uint64_t version = 0;
    double cost = 0;
  };

  std::optional<double> lookup(const std::string& state_key, const std::string& action, std::uint64_t version) {
    auto it = entries_.find(make_key(state_key, action, version));
    if (it == entries_.end()) {
      ++misses_;
      return std::nullopt;
    }
    ++hits_;
    return it->second.cost;
  }

  void store(const std::string& state_key, const std::string& action, std::uint64_t version, double cost) {
    entries_.insert_or_assign(make_key(state_key, action, version), Entry{state_key, action, version, cost});
  }

  /// Drops entries from other geometry versions.
  void prune(std::uint64_t current_version) {
    std::erase_if(entries_, [&](const auto& kv) { return kv.second.version != current_version; });
  }

  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(entries_.size());
    for (const auto& [k, e] : entries_) out.push_back(e);
    return out;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::uint64_t hits() const noexcept { return hits_; }
  std::uint64_t misses() const noexcept { return misses_; }

  void clear() {
    entries_.clear();
    hits_ = misses_ = 0;
  }

private:
  static std::string make_key(const std::string& state_key, const std::string& action, std::uint64_t version) {
    return state_key + '#' + action + '#' + std::to_string(version);
  }

  std::unordered_map<std::string, Entry> entries_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace rtamp
