#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cfgmask {

class Engine;

/// 128-bit digest of a canonical engine state.
struct Fingerprint {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  std::string hex() const;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

struct FingerprintHash {
  std::size_t operator()(const Fingerprint& f) const { return static_cast<std::size_t>(f.lo ^ (f.hi * 0x9E3779B97F4A7C15ull)); }
};

/// Canonical encoding of the retained state: retained sets relabeled
/// 0..m-1 in index order, each as (phase, item count, items sorted by
/// production, dot, relabeled origin, fsm). Absolute byte positions and
/// pruned history do not appear.
std::vector<std::uint32_t> canonical_encoding(const Engine& engine);

/// Stable, non-cryptographic 128-bit hash of a word sequence.
Fingerprint hash128(std::span<const std::uint32_t> words);

Fingerprint fingerprint(const Engine& engine);

}  // namespace cfgmask
