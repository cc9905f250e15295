#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cfgmask/earley.hpp"

namespace cfgmask {

/// Items with a dependency path into the newest set.
///
/// `marks[slot][pos]` is parallel to engine.sets()[slot].items().
struct ActiveSet {
  std::vector<std::vector<std::uint8_t>> marks;

  bool contains(const Engine& engine, ItemRef ref) const;
  std::size_t size() const;
};

/// Reverse traversal of the dependency graph from every item of the last
/// set. Predict, scan and comp-parent edges are followed; comp-child edges
/// are not, because a completed item is only ever consulted while its own
/// set is the newest one. Cost is proportional to the retained graph.
///
/// Requires the last set to be at least completed.
ActiveSet compute_active(const Engine& engine);

/// Deletes every item outside `active` together with its edges, then drops
/// historical sets left empty. Set indices are never reused, so item origins
/// stay valid. The last set is never touched.
void compact(Engine& engine, const ActiveSet& active);

}  // namespace cfgmask
