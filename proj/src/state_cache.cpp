#include "cfgmask/state_cache.hpp"

#include <stdexcept>

namespace cfgmask {

MaskCache::MaskCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("mask cache capacity must be positive");
}

std::optional<TokenMask> MaskCache::lookup(const Fingerprint& key) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it == index_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  order_.splice(order_.begin(), order_, it->second);
  return it->second->second;
}

void MaskCache::insert(const Fingerprint& key, TokenMask mask) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(key);
  if (it != index_.end()) {
    it->second->second = std::move(mask);
    order_.splice(order_.begin(), order_, it->second);
    return;
  }
  order_.emplace_front(key, std::move(mask));
  index_.emplace(key, order_.begin());
  if (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
}

TokenMask MaskCache::lookup_or_compute(const Fingerprint& key, const std::function<TokenMask()>& compute, bool* hit) {
  if (auto found = lookup(key)) {
    if (hit) *hit = true;
    return *found;
  }
  if (hit) *hit = false;
  TokenMask mask = compute();
  insert(key, mask);
  return mask;
}

std::size_t MaskCache::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

std::uint64_t MaskCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::uint64_t MaskCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

double MaskCache::hit_rate() const {
  std::lock_guard lock(mutex_);
  auto total = hits_ + misses_;
  return total == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(total);
}

void MaskCache::clear() {
  std::lock_guard lock(mutex_);
  order_.clear();
  index_.clear();
  hits_ = misses_ = 0;
}

}  // namespace cfgmask
