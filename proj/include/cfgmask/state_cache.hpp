#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "cfgmask/fingerprint.hpp"
#include "cfgmask/token_mask.hpp"

namespace cfgmask {

/// LRU map from state fingerprint to token mask.
class MaskCache {
 public:
  static constexpr std::size_t kDefaultCapacity = 4096;

  explicit MaskCache(std::size_t capacity = kDefaultCapacity);

  std::optional<TokenMask> lookup(const Fingerprint& key);
  void insert(const Fingerprint& key, TokenMask mask);

  /// Returns the cached mask, or computes, stores and returns it. `hit`
  /// reports which path was taken.
  TokenMask lookup_or_compute(const Fingerprint& key, const std::function<TokenMask()>& compute, bool* hit = nullptr);

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t hits() const;
  std::uint64_t misses() const;
  double hit_rate() const;
  void clear();

 private:
  using Entry = std::pair<Fingerprint, TokenMask>;

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> order_;  // most recent first
  std::unordered_map<Fingerprint, std::list<Entry>::iterator, FingerprintHash> index_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace cfgmask
