#include "cfgmask/earley.hpp"

#include <algorithm>
#include <stdexcept>

#include "cfgmask/pruning.hpp"

namespace cfgmask {

// ---------------------------------------------------------------- dedup index

namespace detail {

std::size_t ItemIndex::hash(const EarleyItem& item) {
  std::uint64_t h = item.production;
  h = h * 0x9E3779B97F4A7C15ull + item.dot;
  h = h * 0x9E3779B97F4A7C15ull + item.origin;
  h = h * 0x9E3779B97F4A7C15ull + static_cast<std::uint32_t>(item.fsm);
  h ^= h >> 29;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 32;
  return static_cast<std::size_t>(h);
}

void ItemIndex::reset(std::size_t expected) {
  std::size_t cap = 32;
  while (cap < expected * 2) cap <<= 1;
  if (slots_.size() == cap) {
    std::fill(slots_.begin(), slots_.end(), 0u);
  } else {
    slots_.assign(cap, 0u);
  }
  used_ = 0;
}

std::int64_t ItemIndex::find(const EarleyItem& item, const std::vector<EarleyItem>& items) const {
  const std::size_t mask = slots_.size() - 1;
  for (std::size_t i = hash(item) & mask;; i = (i + 1) & mask) {
    auto slot = slots_[i];
    if (slot == 0) return -1;
    if (items[slot - 1] == item) return slot - 1;
  }
}

void ItemIndex::insert(const EarleyItem& item, std::uint32_t pos, const std::vector<EarleyItem>& items) {
  if ((used_ + 1) * 2 > slots_.size()) grow(items);
  const std::size_t mask = slots_.size() - 1;
  std::size_t i = hash(item) & mask;
  while (slots_[i] != 0) i = (i + 1) & mask;
  slots_[i] = pos + 1;
  ++used_;
}

void ItemIndex::grow(const std::vector<EarleyItem>& items) {
  std::vector<std::uint32_t> old = std::move(slots_);
  slots_.assign(old.size() * 2, 0u);
  const std::size_t mask = slots_.size() - 1;
  for (auto slot : old) {
    if (slot == 0) continue;
    std::size_t i = hash(items[slot - 1]) & mask;
    while (slots_[i] != 0) i = (i + 1) & mask;
    slots_[i] = slot;
  }
}

}  // namespace detail

// ---------------------------------------------------------------- sets

void EarleySet::clear(std::uint32_t index) {
  index_ = index;
  phase_ = Phase::scanned;
  items_.clear();
  edges_.clear();
  offsets_.clear();
  waiting_keys_.clear();
  waiting_pos_.clear();
  frontier_.clear();
}

void EarleySet::finalize(const Grammar& g) {
  frontier_.clear();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> waiting;
  for (std::uint32_t pos = 0; pos < items_.size(); ++pos) {
    const auto& item = items_[pos];
    const auto& rhs = g.production(item.production).rhs;
    if (item.dot >= rhs.size()) continue;
    if (rhs[item.dot].is_terminal()) {
      frontier_.push_back(pos);
    } else {
      waiting.emplace_back(rhs[item.dot].id, pos);
    }
  }
  std::sort(waiting.begin(), waiting.end());
  waiting_keys_.resize(waiting.size());
  waiting_pos_.resize(waiting.size());
  for (std::size_t i = 0; i < waiting.size(); ++i) {
    waiting_keys_[i] = waiting[i].first;
    waiting_pos_[i] = waiting[i].second;
  }

  std::stable_sort(edges_.begin(), edges_.end(),
                   [](const DependencyEdge& a, const DependencyEdge& b) { return a.target < b.target; });
  offsets_.assign(items_.size() + 1, 0);
  for (const auto& e : edges_) ++offsets_[e.target + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
}

std::span<const DependencyEdge> EarleySet::dependencies(std::uint32_t pos) const {
  if (offsets_.size() != items_.size() + 1) return {};
  return std::span<const DependencyEdge>(edges_.data() + offsets_[pos], offsets_[pos + 1] - offsets_[pos]);
}

std::span<const std::uint32_t> EarleySet::waiting_for(std::uint32_t nonterminal) const {
  auto [lo, hi] = std::equal_range(waiting_keys_.begin(), waiting_keys_.end(), nonterminal);
  auto begin = static_cast<std::size_t>(lo - waiting_keys_.begin());
  return std::span<const std::uint32_t>(waiting_pos_.data() + begin, static_cast<std::size_t>(hi - lo));
}

// ---------------------------------------------------------------- phases

/// Adds items to one set with dedup; re-derivations union their edges onto
/// the existing item.
class SetBuilder {
 public:
  SetBuilder(EarleySet& set, detail::BuildScratch& scratch, bool record, std::size_t nonterminals)
      : set_(&set), scratch_(&scratch), record_(record) {
    scratch.index.reset(std::max<std::size_t>(set.items_.size(), 16));
    for (std::uint32_t pos = 0; pos < set.items_.size(); ++pos) scratch.index.insert(set.items_[pos], pos, set.items_);
    if (!record) {
      scratch.predicted.resize(nonterminals, 0);
      for (auto nt : scratch.predicted_list) scratch.predicted[nt] = 0;
      scratch.predicted_list.clear();
    }
  }

  EarleySet& set() { return *set_; }
  void rebind(EarleySet& set) { set_ = &set; }
  bool recording() const { return record_; }

  std::uint32_t add(const EarleyItem& item) {
    auto found = scratch_->index.find(item, set_->items_);
    if (found >= 0) return static_cast<std::uint32_t>(found);
    auto pos = static_cast<std::uint32_t>(set_->items_.size());
    scratch_->index.insert(item, pos, set_->items_);
    set_->items_.push_back(item);
    return pos;
  }

  void add(const EarleyItem& item, Dependency dep) {
    auto pos = add(item);
    if (record_) set_->edges_.push_back(DependencyEdge{pos, dep});
  }

  void add(const EarleyItem& item, Dependency first, Dependency second) {
    auto pos = add(item);
    if (record_) {
      set_->edges_.push_back(DependencyEdge{pos, first});
      set_->edges_.push_back(DependencyEdge{pos, second});
    }
  }

  /// When edges are off, a nonterminal needs predicting once per set.
  bool claim_prediction(std::uint32_t nonterminal) {
    if (record_) return true;
    if (scratch_->predicted[nonterminal]) return false;
    scratch_->predicted[nonterminal] = 1;
    scratch_->predicted_list.push_back(nonterminal);
    return true;
  }

 private:
  EarleySet* set_;
  detail::BuildScratch* scratch_;
  bool record_;
};

namespace {

void scan_phase(const Grammar& g, const EarleySet& from, std::uint8_t byte, SetBuilder& b) {
  for (auto pos : from.scan_frontier()) {
    const EarleyItem& item = from.items()[pos];
    const auto& rhs = g.production(item.production).rhs;
    const auto& automaton = g.terminal(rhs[item.dot].id).automaton;
    auto state = item.fsm == kNoFsm ? automaton.start() : static_cast<std::uint32_t>(item.fsm);
    auto next = automaton.next(state, byte);
    if (next == TerminalAutomaton::kDead) continue;
    Dependency dep{ItemRef{from.index(), pos}, DependencyKind::scan};
    auto q = static_cast<std::uint32_t>(next);
    if (automaton.can_extend(q)) b.add(EarleyItem{item.production, item.dot, item.origin, next}, dep);
    if (automaton.is_accepting(q)) b.add(EarleyItem{item.production, item.dot + 1, item.origin, kNoFsm}, dep);
  }
}

template <typename Lookup>
void complete_phase(const Grammar& g, SetBuilder& b, Lookup&& lookup) {
  EarleySet& set = b.set();
  const auto index = set.index();
  for (std::uint32_t pos = 0; pos < set.items().size(); ++pos) {
    const EarleyItem item = set.items()[pos];
    const auto& prod = g.production(item.production);
    if (item.dot != prod.rhs.size() || item.origin == index) continue;
    const EarleySet* origin = lookup(item.origin);
    if (origin == nullptr) throw std::logic_error("completion origin set was pruned");
    for (auto qpos : origin->waiting_for(prod.lhs)) {
      const EarleyItem& parent = origin->items()[qpos];
      b.add(EarleyItem{parent.production, parent.dot + 1, parent.origin, kNoFsm},
            Dependency{ItemRef{index, pos}, DependencyKind::comp_child},
            Dependency{ItemRef{origin->index(), qpos}, DependencyKind::comp_parent});
    }
  }
}

void predict_phase(const Grammar& g, SetBuilder& b) {
  EarleySet& set = b.set();
  const auto index = set.index();
  for (std::uint32_t pos = 0; pos < set.items().size(); ++pos) {
    const EarleyItem item = set.items()[pos];
    const auto& rhs = g.production(item.production).rhs;
    if (item.dot >= rhs.size() || rhs[item.dot].is_terminal()) continue;
    auto nt = rhs[item.dot].id;
    if (!b.claim_prediction(nt)) continue;
    Dependency dep{ItemRef{index, pos}, DependencyKind::pred};
    for (auto p : g.productions_of(nt)) b.add(EarleyItem{p, 0, index, kNoFsm}, dep);
  }
}

}  // namespace

// ---------------------------------------------------------------- engine

Engine::Engine(std::shared_ptr<const Grammar> grammar, EngineOptions options)
    : grammar_(std::move(grammar)), options_(options) {
  const Grammar& g = *grammar_;
  for (const auto& p : g.productions()) {
    if (p.rhs.empty() && p.lhs != g.start())
      throw std::invalid_argument("engine requires a prepared grammar (empty production for '" + g.name(p.lhs) + "')");
    for (auto s : p.rhs)
      if (!s.is_terminal() && s.id == g.start() && g.has_empty_productions())
        throw std::invalid_argument("engine requires a prepared grammar (nullable start used on a right-hand side)");
  }
  if (g.productions_of(g.start()).empty())
    throw GrammarError(GrammarError::Code::empty_language, "start symbol has no productions");

  sets_.emplace_back();
  sets_.back().clear(0);
  SetBuilder b(sets_.back(), scratch_, options_.prune, g.nonterminal_count());
  for (auto p : g.productions_of(g.start())) b.add(EarleyItem{p, 0, 0, kNoFsm});
  notify(0, Phase::scanned);
  run_complete(sets_.back());
  if (options_.prune) compact(*this, compute_active(*this));
  sets_.back().phase_ = Phase::compacted;
  notify(0, Phase::compacted);
  run_predict(sets_.back());
}

void Engine::run_complete(EarleySet& set) {
  SetBuilder b(set, scratch_, options_.prune, grammar_->nonterminal_count());
  complete_phase(*grammar_, b, [this](std::uint32_t index) { return find_set(index); });
  set.phase_ = Phase::completed;
  notify(set.index(), Phase::completed);
}

void Engine::run_predict(EarleySet& set) {
  SetBuilder b(set, scratch_, options_.prune, grammar_->nonterminal_count());
  predict_phase(*grammar_, b);
  set.finalize(*grammar_);
  set.phase_ = Phase::predicted;
  notify(set.index(), Phase::predicted);
}

bool Engine::accept_byte(std::uint8_t byte) {
  if (finished_) return false;
  const auto index = consumed() + 1;
  sets_.emplace_back();
  EarleySet& next = sets_.back();
  next.clear(index);
  {
    SetBuilder b(next, scratch_, options_.prune, grammar_->nonterminal_count());
    scan_phase(*grammar_, sets_[sets_.size() - 2], byte, b);
  }
  if (sets_.back().empty()) {
    sets_.pop_back();
    return false;
  }
  notify(index, Phase::scanned);
  run_complete(sets_.back());
  if (options_.prune) compact(*this, compute_active(*this));
  sets_.back().phase_ = Phase::compacted;
  notify(index, Phase::compacted);
  run_predict(sets_.back());
  return true;
}

bool Engine::accept_bytes(std::string_view bytes) {
  if (finished_) return false;
  if (bytes.empty()) return true;
  if (bytes.size() == 1) return accept_byte(static_cast<std::uint8_t>(bytes[0]));
  SpeculativeCursor probe(*this);
  for (char c : bytes)
    if (!probe.push(static_cast<std::uint8_t>(c))) return false;
  for (char c : bytes)
    if (!accept_byte(static_cast<std::uint8_t>(c))) throw std::logic_error("speculative check disagreed with commit");
  return true;
}

namespace {

bool set_accepts(const Grammar& g, const EarleySet& set) {
  for (const auto& item : set.items()) {
    const auto& prod = g.production(item.production);
    if (prod.lhs == g.start() && item.origin == 0 && item.dot == prod.rhs.size()) return true;
  }
  return false;
}

}  // namespace

bool Engine::is_accepting() const { return !finished_ && set_accepts(*grammar_, sets_.back()); }

const EarleySet* Engine::find_set(std::uint32_t index) const {
  auto it = std::lower_bound(sets_.begin(), sets_.end(), index,
                             [](const EarleySet& s, std::uint32_t i) { return s.index() < i; });
  return (it != sets_.end() && it->index() == index) ? &*it : nullptr;
}

std::size_t Engine::live_item_count() const {
  std::size_t n = 0;
  for (const auto& s : sets_) n += s.size();
  return n;
}

std::size_t Engine::item_bound() const {
  std::size_t per_origin = 0;
  for (const auto& p : grammar_->productions()) {
    per_origin += p.rhs.size() + 1;
    for (auto s : p.rhs)
      if (s.is_terminal()) per_origin += grammar_->terminal(s.id).automaton.state_count();
  }
  return per_origin * sets_.size();
}

// ---------------------------------------------------------------- cursor

SpeculativeCursor::SpeculativeCursor(const Engine& engine) : engine_(&engine) {}

void SpeculativeCursor::rebind(const Engine& engine) {
  engine_ = &engine;
  depth_ = 0;
}

const EarleySet& SpeculativeCursor::top() const { return depth_ == 0 ? engine_->last_set() : stack_[depth_ - 1]; }

const EarleySet* SpeculativeCursor::lookup(std::uint32_t index) const {
  auto base = engine_->consumed();
  if (index <= base) return engine_->find_set(index);
  return &stack_[index - base - 1];
}

bool SpeculativeCursor::push(std::uint8_t byte) {
  if (engine_->finished()) return false;
  if (stack_.size() <= depth_) stack_.emplace_back();
  const Grammar& g = engine_->grammar();
  EarleySet& next = stack_[depth_];
  const EarleySet& from = top();
  next.clear(from.index() + 1);
  SetBuilder b(next, scratch_, false, g.nonterminal_count());
  scan_phase(g, from, byte, b);
  if (next.empty()) return false;
  complete_phase(g, b, [this](std::uint32_t index) { return lookup(index); });
  predict_phase(g, b);
  next.finalize(g);
  next.phase_ = Phase::predicted;
  ++depth_;
  return true;
}

void SpeculativeCursor::truncate(std::size_t depth) {
  if (depth < depth_) depth_ = depth;
}

bool SpeculativeCursor::is_accepting() const { return set_accepts(engine_->grammar(), top()); }

bool recognize(const Grammar& prepared, std::string_view input, EngineOptions options) {
  Engine engine(std::make_shared<const Grammar>(prepared), options);
  for (char c : input)
    if (!engine.accept_byte(static_cast<std::uint8_t>(c))) return false;
  return engine.is_accepting();
}

}  // namespace cfgmask
