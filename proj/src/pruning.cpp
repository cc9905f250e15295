#include "cfgmask/pruning.hpp"

#include <algorithm>

namespace cfgmask {

namespace {

std::size_t slot_of(const std::vector<EarleySet>& sets, std::uint32_t index) {
  auto it = std::lower_bound(sets.begin(), sets.end(), index,
                             [](const EarleySet& s, std::uint32_t i) { return s.index() < i; });
  return static_cast<std::size_t>(it - sets.begin());
}

bool followed(DependencyKind kind) { return kind != DependencyKind::comp_child; }

}  // namespace

bool ActiveSet::contains(const Engine& engine, ItemRef ref) const {
  const auto& sets = engine.sets();
  auto slot = slot_of(sets, ref.set);
  if (slot >= sets.size() || sets[slot].index() != ref.set) return false;
  return ref.pos < marks[slot].size() && marks[slot][ref.pos] != 0;
}

std::size_t ActiveSet::size() const {
  std::size_t n = 0;
  for (const auto& m : marks) n += static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
  return n;
}

ActiveSet compute_active(const Engine& engine) {
  const auto& sets = engine.sets();
  const std::size_t last = sets.size() - 1;
  ActiveSet active;
  active.marks.resize(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) active.marks[i].assign(sets[i].size(), 0);
  std::fill(active.marks[last].begin(), active.marks[last].end(), std::uint8_t{1});

  // Edges only point forward in set index, so slots can be closed from the
  // newest backwards with one worklist each.
  std::vector<std::vector<std::uint32_t>> pending(sets.size());
  auto mark = [&](const ItemRef& ref, std::size_t current_slot) {
    auto slot = ref.set == sets[current_slot].index() ? current_slot : slot_of(sets, ref.set);
    auto& m = active.marks[slot][ref.pos];
    if (m) return;
    m = 1;
    pending[slot].push_back(ref.pos);
  };

  // The newest set is not finalized yet, so its edges are still flat.
  for (const auto& edge : sets[last].all_dependencies())
    if (followed(edge.dep.kind)) mark(edge.dep.source, last);

  for (std::size_t slot = last; slot-- > 0;) {
    auto& work = pending[slot];
    while (!work.empty()) {
      auto pos = work.back();
      work.pop_back();
      for (const auto& edge : sets[slot].dependencies(pos))
        if (followed(edge.dep.kind)) mark(edge.dep.source, slot);
    }
  }
  return active;
}

void compact(Engine& engine, const ActiveSet& active) {
  auto& sets = engine.sets_;
  const std::size_t last = sets.size() - 1;

  std::vector<std::vector<std::int32_t>> remap(sets.size());
  std::vector<std::uint8_t> changed(sets.size(), 0);
  for (std::size_t slot = 0; slot < sets.size(); ++slot) {
    const auto& marks = active.marks[slot];
    auto& map = remap[slot];
    map.assign(marks.size(), -1);
    std::int32_t next = 0;
    for (std::size_t pos = 0; pos < marks.size(); ++pos)
      if (marks[pos] || slot == last) map[pos] = next++;
    changed[slot] = static_cast<std::size_t>(next) != marks.size();
  }
  bool any_changed = std::any_of(changed.begin(), changed.end(), [](std::uint8_t c) { return c != 0; });
  if (!any_changed) return;

  auto translate = [&](const ItemRef& ref) -> std::int32_t {
    auto slot = slot_of(sets, ref.set);
    return remap[slot][ref.pos];
  };

  const Grammar& g = engine.grammar();
  for (std::size_t slot = 0; slot < sets.size(); ++slot) {
    auto& set = sets[slot];
    const auto& map = remap[slot];
    if (changed[slot]) {
      std::vector<EarleyItem> kept;
      kept.reserve(set.items_.size());
      for (std::size_t pos = 0; pos < set.items_.size(); ++pos)
        if (map[pos] >= 0) kept.push_back(set.items_[pos]);
      set.items_ = std::move(kept);
    }
    std::vector<DependencyEdge> edges;
    edges.reserve(set.edges_.size());
    for (const auto& edge : set.edges_) {
      auto target = map[edge.target];
      if (target < 0) continue;
      auto source = translate(edge.dep.source);
      if (source < 0) continue;
      edges.push_back(DependencyEdge{static_cast<std::uint32_t>(target),
                                     Dependency{ItemRef{edge.dep.source.set, static_cast<std::uint32_t>(source)},
                                                edge.dep.kind}});
    }
    set.edges_ = std::move(edges);
    if (slot != last) set.finalize(g);
  }

  std::vector<EarleySet> retained;
  retained.reserve(sets.size());
  for (std::size_t slot = 0; slot < sets.size(); ++slot)
    if (slot == last || !sets[slot].items_.empty()) retained.push_back(std::move(sets[slot]));
  sets = std::move(retained);
}

}  // namespace cfgmask
