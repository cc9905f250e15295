#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "cfgmask/grammar.hpp"

namespace cfgmask {

class Engine;
struct ActiveSet;

inline constexpr std::int32_t kNoFsm = -1;

/// Dotted production with origin; `fsm` is the automaton state of the
/// postdot terminal while it is partially matched. The end position is the
/// index of the set holding the item.
struct EarleyItem {
  std::uint32_t production = 0;
  std::uint32_t dot = 0;
  std::uint32_t origin = 0;
  std::int32_t fsm = kNoFsm;

  friend bool operator==(const EarleyItem&, const EarleyItem&) = default;
  friend auto operator<=>(const EarleyItem&, const EarleyItem&) = default;
};

enum class Phase : std::uint8_t { scanned, completed, compacted, predicted };

enum class DependencyKind : std::uint8_t { pred, scan, comp_child, comp_parent };

/// Item address: set index (byte position) and position within the set.
struct ItemRef {
  std::uint32_t set = 0;
  std::uint32_t pos = 0;

  friend bool operator==(const ItemRef&, const ItemRef&) = default;
};

/// Incoming dependency edge: `source` -> (owning item).
struct Dependency {
  ItemRef source;
  DependencyKind kind = DependencyKind::pred;

  friend bool operator==(const Dependency&, const Dependency&) = default;
};

struct DependencyEdge {
  std::uint32_t target = 0;  // position in the owning set
  Dependency dep;
};

class EarleySet {
 public:
  std::uint32_t index() const { return index_; }
  Phase phase() const { return phase_; }
  const std::vector<EarleyItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  /// Incoming edges of the item at `pos`. Valid once the set is predicted.
  std::span<const DependencyEdge> dependencies(std::uint32_t pos) const;
  const std::vector<DependencyEdge>& all_dependencies() const { return edges_; }

  /// Positions of items whose postdot symbol is `nonterminal`.
  std::span<const std::uint32_t> waiting_for(std::uint32_t nonterminal) const;
  /// Positions of items whose postdot symbol is a terminal.
  const std::vector<std::uint32_t>& scan_frontier() const { return frontier_; }

 private:
  friend class SetBuilder;
  friend class Engine;
  friend class SpeculativeCursor;
  friend void compact(Engine&, const ActiveSet&);

  void finalize(const Grammar& g);
  void clear(std::uint32_t index);

  std::uint32_t index_ = 0;
  Phase phase_ = Phase::scanned;
  std::vector<EarleyItem> items_;
  // Flat until finalize(), then sorted by target with offsets_ as CSR.
  std::vector<DependencyEdge> edges_;
  std::vector<std::uint32_t> offsets_;
  // (nonterminal, position) sorted; split into keys/values for equal_range.
  std::vector<std::uint32_t> waiting_keys_;
  std::vector<std::uint32_t> waiting_pos_;
  std::vector<std::uint32_t> frontier_;
};

namespace detail {

/// Open-addressing dedup index over the items of the set being built.
class ItemIndex {
 public:
  void reset(std::size_t expected);
  /// Position of `item` in `items`, or -1.
  std::int64_t find(const EarleyItem& item, const std::vector<EarleyItem>& items) const;
  void insert(const EarleyItem& item, std::uint32_t pos, const std::vector<EarleyItem>& items);

 private:
  static std::size_t hash(const EarleyItem& item);
  void grow(const std::vector<EarleyItem>& items);

  std::vector<std::uint32_t> slots_;  // pos + 1; 0 = empty
  std::size_t used_ = 0;
};

/// Scratch state shared by the committed and speculative paths.
struct BuildScratch {
  ItemIndex index;
  std::vector<std::uint8_t> predicted;  // per nonterminal, when edges are off
  std::vector<std::uint32_t> predicted_list;
};

}  // namespace detail

struct EngineOptions {
  /// Record dependencies and compact after every completion phase.
  bool prune = true;
};

/// Byte-level Earley recognizer over a prepared grammar (see
/// prepare_grammar). One set per consumed byte; terminal automata advance
/// inside items so a terminal may span many sets.
///
/// Single writer. Copying yields an independent state.
class Engine {
 public:
  using PhaseObserver = std::function<void(const Engine&, std::uint32_t set_index, Phase)>;

  explicit Engine(std::shared_ptr<const Grammar> grammar, EngineOptions options = {});

  const Grammar& grammar() const { return *grammar_; }
  const std::shared_ptr<const Grammar>& grammar_ptr() const { return grammar_; }
  const EngineOptions& options() const { return options_; }

  /// Scan, complete, compact, predict. On rejection nothing changes.
  bool accept_byte(std::uint8_t byte);
  /// All bytes or none.
  bool accept_bytes(std::string_view bytes);

  bool is_accepting() const;
  std::uint32_t consumed() const { return sets_.back().index(); }

  /// Set after an end-of-sequence token; no further input is accepted.
  bool finished() const { return finished_; }
  void finish() { finished_ = true; }

  /// Retained sets in increasing index order; pruned sets are absent.
  const std::vector<EarleySet>& sets() const { return sets_; }
  const EarleySet& last_set() const { return sets_.back(); }
  const EarleySet* find_set(std::uint32_t index) const;

  std::size_t live_item_count() const;
  /// Upper bound on the size of any set: (#productions * (max rhs + 1)) * states.
  std::size_t item_bound() const;

  /// Called after every phase of every committed set.
  void set_phase_observer(PhaseObserver observer) { observer_ = std::move(observer); }

 private:
  friend class SpeculativeCursor;
  friend void compact(Engine&, const ActiveSet&);

  void notify(std::uint32_t index, Phase phase) const {
    if (observer_) observer_(*this, index, phase);
  }
  void run_complete(EarleySet& set);
  void run_predict(EarleySet& set);

  std::shared_ptr<const Grammar> grammar_;
  EngineOptions options_;
  std::vector<EarleySet> sets_;
  bool finished_ = false;
  PhaseObserver observer_;
  detail::BuildScratch scratch_;
};

/// Speculative extension of a committed engine: sets are stacked on top of
/// the engine's chain without touching it and popped by truncate(). Used
/// for trial parsing. The engine must outlive the cursor and stay unchanged
/// while the cursor has depth > 0.
class SpeculativeCursor {
 public:
  explicit SpeculativeCursor(const Engine& engine);

  void rebind(const Engine& engine);
  bool push(std::uint8_t byte);
  void truncate(std::size_t depth);
  std::size_t depth() const { return depth_; }
  bool is_accepting() const;

 private:
  const EarleySet& top() const;
  const EarleySet* lookup(std::uint32_t index) const;

  const Engine* engine_;
  std::vector<EarleySet> stack_;
  std::size_t depth_ = 0;
  detail::BuildScratch scratch_;
};

/// Runs a fresh engine over `input`; `prepared` must come from prepare_grammar.
bool recognize(const Grammar& prepared, std::string_view input, EngineOptions options = {});

}  // namespace cfgmask
