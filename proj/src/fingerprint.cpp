#include "cfgmask/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <stdexcept>

#include "cfgmask/earley.hpp"

namespace cfgmask {

namespace {

std::uint64_t finalize_lane(std::uint64_t h) {
  h ^= h >> 30;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 27;
  h *= 0x94D049BB133111EBull;
  h ^= h >> 31;
  return h;
}

}  // namespace

std::string Fingerprint::hex() const {
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

Fingerprint hash128(std::span<const std::uint32_t> words) {
  std::uint64_t a = 0x243F6A8885A308D3ull ^ words.size();
  std::uint64_t b = 0x13198A2E03707344ull + words.size() * 0x9E3779B97F4A7C15ull;
  for (auto w : words) {
    a = std::rotl((a ^ w) * 0x9E3779B97F4A7C15ull, 31);
    b = std::rotl((b + w) * 0xC2B2AE3D27D4EB4Full, 29) ^ a;
  }
  return Fingerprint{finalize_lane(a ^ std::rotl(b, 17)), finalize_lane(b + 0x165667B19E3779F9ull)};
}

std::vector<std::uint32_t> canonical_encoding(const Engine& engine) {
  const auto& sets = engine.sets();
  std::vector<std::uint32_t> out;
  out.push_back(engine.finished() ? 1u : 0u);
  out.push_back(static_cast<std::uint32_t>(sets.size()));
  auto relabel = [&](std::uint32_t index) -> std::uint32_t {
    auto it = std::lower_bound(sets.begin(), sets.end(), index,
                               [](const EarleySet& s, std::uint32_t i) { return s.index() < i; });
    if (it == sets.end() || it->index() != index) throw std::logic_error("item origin refers to a pruned set");
    return static_cast<std::uint32_t>(it - sets.begin());
  };
  std::vector<EarleyItem> items;
  for (const auto& set : sets) {
    items.clear();
    for (auto item : set.items()) {
      item.origin = relabel(item.origin);
      items.push_back(item);
    }
    std::sort(items.begin(), items.end());
    out.push_back(static_cast<std::uint32_t>(set.phase()));
    out.push_back(static_cast<std::uint32_t>(items.size()));
    for (const auto& item : items) {
      out.push_back(item.production);
      out.push_back(item.dot);
      out.push_back(item.origin);
      out.push_back(static_cast<std::uint32_t>(item.fsm));
    }
  }
  return out;
}

Fingerprint fingerprint(const Engine& engine) { return hash128(canonical_encoding(engine)); }

}  // namespace cfgmask
