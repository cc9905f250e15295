#include "cfgmask/mask_engine.hpp"

#include <omp.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>

namespace cfgmask {

// ---------------------------------------------------------------- CI cache

namespace {

enum class Verdict : std::uint8_t { unknown, accepted, rejected };

Verdict classify(const TerminalAutomaton& automaton, std::uint32_t state, std::string_view bytes) {
  bool seen_accepting = automaton.is_accepting(state);
  for (char c : bytes) {
    auto next = automaton.next(state, static_cast<std::uint8_t>(c));
    if (next == TerminalAutomaton::kDead) return seen_accepting ? Verdict::unknown : Verdict::rejected;
    state = static_cast<std::uint32_t>(next);
    if (automaton.is_accepting(state)) seen_accepting = true;
  }
  return Verdict::accepted;
}

void classify_word(const TerminalAutomaton& automaton, std::uint32_t state, const Vocabulary& vocab, std::size_t w,
                   std::uint64_t& accepted, std::uint64_t& rejected) {
  const std::size_t begin = w * 64;
  const std::size_t end = std::min<std::size_t>(begin + 64, vocab.size());
  std::uint64_t acc = 0, rej = 0;
  for (std::size_t id = begin; id < end; ++id) {
    if (id == vocab.eos_id()) continue;
    switch (classify(automaton, state, vocab.token(static_cast<std::uint32_t>(id)))) {
      case Verdict::accepted: acc |= std::uint64_t{1} << (id - begin); break;
      case Verdict::rejected: rej |= std::uint64_t{1} << (id - begin); break;
      case Verdict::unknown: break;
    }
  }
  accepted = acc;
  rejected = rej;
}

}  // namespace

TokenClassification classify_tokens(const TerminalAutomaton& automaton, std::uint32_t state, const Vocabulary& vocab,
                                    Parallelism parallelism) {
  TokenClassification out{TokenMask(vocab.size()), TokenMask(vocab.size())};
  auto& acc = out.accepted.words();
  auto& rej = out.rejected.words();
  const auto words = static_cast<std::int64_t>(acc.size());
  if (parallelism == Parallelism::serial) {
    for (std::int64_t w = 0; w < words; ++w)
      classify_word(automaton, state, vocab, static_cast<std::size_t>(w), acc[w], rej[w]);
  } else {
#pragma omp parallel for schedule(static)
    for (std::int64_t w = 0; w < words; ++w)
      classify_word(automaton, state, vocab, static_cast<std::size_t>(w), acc[w], rej[w]);
  }
  return out;
}

TokenCache::TokenCache(std::shared_ptr<const Grammar> grammar, std::shared_ptr<const Vocabulary> vocab,
                       Parallelism parallelism)
    : grammar_(std::move(grammar)), vocab_(std::move(vocab)), parallelism_(parallelism) {
  entries_.resize(grammar_->terminal_count());
  for (std::uint32_t t = 0; t < grammar_->terminal_count(); ++t)
    entries_[t].resize(grammar_->terminal(t).automaton.state_count());
}

const TokenClassification& TokenCache::entry(std::uint32_t terminal, std::uint32_t state) {
  {
    std::shared_lock lock(mutex_);
    if (const auto& e = entries_.at(terminal).at(state)) return *e;
  }
  auto fresh = std::make_unique<const TokenClassification>(
      classify_tokens(grammar_->terminal(terminal).automaton, state, *vocab_, parallelism_));
  std::unique_lock lock(mutex_);
  auto& slot = entries_[terminal][state];
  if (!slot) slot = std::move(fresh);
  return *slot;
}

void TokenCache::build_all() {
  for (std::uint32_t t = 0; t < entries_.size(); ++t)
    for (std::uint32_t s = 0; s < entries_[t].size(); ++s) entry(t, s);
}

std::size_t TokenCache::entry_count() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& row : entries_)
    for (const auto& e : row) n += e != nullptr;
  return n;
}

std::shared_ptr<TokenCache> build_ci_cache(std::shared_ptr<const Grammar> grammar,
                                           std::shared_ptr<const Vocabulary> vocab, Parallelism parallelism) {
  auto cache = std::make_shared<TokenCache>(std::move(grammar), std::move(vocab), parallelism);
  cache->build_all();
  return cache;
}

// ---------------------------------------------------------------- trie

RejectedPrefixTrie::RejectedPrefixTrie() { nodes_.emplace_back(); }

std::int64_t RejectedPrefixTrie::child(std::uint32_t node, std::uint8_t byte) const {
  const auto& ch = nodes_[node].children;
  auto it = std::lower_bound(ch.begin(), ch.end(), byte, [](const auto& e, std::uint8_t b) { return e.first < b; });
  return (it != ch.end() && it->first == byte) ? static_cast<std::int64_t>(it->second) : -1;
}

bool RejectedPrefixTrie::rejects(std::string_view bytes) const {
  if (count_ == 0) return false;
  std::uint32_t node = 0;
  for (char c : bytes) {
    auto next = child(node, static_cast<std::uint8_t>(c));
    if (next < 0) return false;
    node = static_cast<std::uint32_t>(next);
    if (nodes_[node].terminal) return true;
  }
  return false;
}

std::size_t RejectedPrefixTrie::count_subtree(std::uint32_t node) const {
  std::size_t n = nodes_[node].terminal ? 1 : 0;
  for (const auto& [b, c] : nodes_[node].children) n += count_subtree(c);
  return n;
}

void RejectedPrefixTrie::insert(std::string_view prefix) {
  if (prefix.empty()) throw std::invalid_argument("empty rejected prefix");
  std::uint32_t node = 0;
  for (char c : prefix) {
    if (nodes_[node].terminal) return;
    auto byte = static_cast<std::uint8_t>(c);
    auto next = child(node, byte);
    if (next < 0) {
      auto fresh = static_cast<std::uint32_t>(nodes_.size());
      nodes_.emplace_back();
      auto& ch = nodes_[node].children;
      auto it = std::lower_bound(ch.begin(), ch.end(), byte, [](const auto& e, std::uint8_t b) { return e.first < b; });
      ch.insert(it, {byte, fresh});
      next = fresh;
    }
    node = static_cast<std::uint32_t>(next);
  }
  if (nodes_[node].terminal) return;
  // Longer prefixes below become redundant; their nodes stay allocated but unreachable.
  count_ -= count_subtree(node);
  nodes_[node].children.clear();
  nodes_[node].terminal = true;
  ++count_;
}

void RejectedPrefixTrie::clear() {
  nodes_.clear();
  nodes_.emplace_back();
  count_ = 0;
}

void RejectedPrefixTrie::collect(std::uint32_t node, std::string& path, std::vector<std::string>& out) const {
  if (nodes_[node].terminal) out.push_back(path);
  for (const auto& [b, c] : nodes_[node].children) {
    path.push_back(static_cast<char>(b));
    collect(c, path, out);
    path.pop_back();
  }
}

std::vector<std::string> RejectedPrefixTrie::prefixes() const {
  std::vector<std::string> out;
  std::string path;
  collect(0, path, out);
  return out;
}

void RejectedPrefixTrie::reset_for_state(const Fingerprint& state) {
  if (scope_ != state) {
    clear();
    scope_ = state;
  }
}

// ---------------------------------------------------------------- masks

MaskComputer::MaskComputer(std::shared_ptr<const Vocabulary> vocab, std::shared_ptr<TokenCache> cache,
                           MaskOptions options)
    : vocab_(std::move(vocab)), cache_(std::move(cache)), options_(options) {
  if (options_.ci_cache && !cache_) throw std::invalid_argument("token cache required when ci_cache is on");
}

namespace {

struct BlockResult {
  std::vector<std::uint32_t> valid;
  RejectedPrefixTrie rejected;
  MaskStats stats;
};

std::size_t common_prefix(std::string_view a, std::string_view b) {
  std::size_t n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

/// Trial-parses one block of lexicographically sorted tokens, reusing the
/// speculative sets of the shared prefix with the previous token.
void run_block(const Vocabulary& vocab, std::span<const std::uint32_t> ids, const RejectedPrefixTrie* shared,
               SpeculativeCursor& cursor, BlockResult& out) {
  std::string pushed;
  cursor.truncate(0);
  for (auto id : ids) {
    const std::string& bytes = vocab.token(id);
    if (shared != nullptr && shared->rejects(bytes)) {
      ++out.stats.trie_rejected;
      continue;
    }
    if (out.rejected.rejects(bytes)) {
      ++out.stats.trie_rejected;
      continue;
    }
    ++out.stats.trial_parses;
    std::size_t keep = common_prefix(pushed, bytes);
    cursor.truncate(keep);
    pushed.resize(keep);
    bool ok = true;
    for (std::size_t i = keep; i < bytes.size(); ++i) {
      if (!cursor.push(static_cast<std::uint8_t>(bytes[i]))) {
        out.rejected.insert(std::string_view(bytes).substr(0, i + 1));
        ok = false;
        break;
      }
      pushed.push_back(bytes[i]);
    }
    if (ok) out.valid.push_back(id);
  }
}

}  // namespace

MaskResult MaskComputer::compute(const Engine& engine, RejectedPrefixTrie* trie) const {
  const Vocabulary& vocab = *vocab_;
  MaskResult result{TokenMask(vocab.size()), false, {}};
  if (engine.finished()) return result;
  if (engine.last_set().phase() != Phase::predicted) throw std::logic_error("mask requested before prediction");
  RejectedPrefixTrie* shared = options_.trie ? trie : nullptr;

  // Context-independent pass.
  TokenMask unknown(vocab.size(), true);
  unknown.reset(vocab.eos_id());
  if (options_.ci_cache) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> frontier;
    const auto& set = engine.last_set();
    const Grammar& g = engine.grammar();
    for (auto pos : set.scan_frontier()) {
      const auto& item = set.items()[pos];
      auto terminal = g.production(item.production).rhs[item.dot].id;
      auto state = item.fsm == kNoFsm ? g.terminal(terminal).automaton.start() : static_cast<std::uint32_t>(item.fsm);
      frontier.emplace_back(terminal, state);
    }
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    TokenMask accepted(vocab.size());
    TokenMask rejected(vocab.size(), true);
    for (auto [t, s] : frontier) {
      const auto& e = cache_->entry(t, s);
      accepted |= e.accepted;
      rejected &= e.rejected;
    }
    accepted.reset(vocab.eos_id());
    rejected.reset(vocab.eos_id());
    result.mask |= accepted;
    result.stats.ci_accepted = accepted.count();
    rejected.subtract(accepted);
    result.stats.ci_rejected = rejected.count();
    unknown.subtract(accepted);
    unknown.subtract(rejected);
  }

  // Context-dependent pass.
  std::vector<std::uint32_t> pending;
  for (auto id : vocab.sorted_ids())
    if (unknown.test(id)) pending.push_back(id);
  const auto blocks = static_cast<std::int64_t>((pending.size() + kTrialBlock - 1) / kTrialBlock);
  std::vector<BlockResult> results(static_cast<std::size_t>(blocks));
  auto block_span = [&](std::int64_t b) {
    std::size_t begin = static_cast<std::size_t>(b) * kTrialBlock;
    return std::span<const std::uint32_t>(pending).subspan(begin, std::min(kTrialBlock, pending.size() - begin));
  };
  if (options_.parallelism == Parallelism::serial || blocks < 2) {
    SpeculativeCursor cursor(engine);
    for (std::int64_t b = 0; b < blocks; ++b) run_block(vocab, block_span(b), shared, cursor, results[b]);
  } else {
#pragma omp parallel
    {
      SpeculativeCursor cursor(engine);
#pragma omp for schedule(dynamic, 1)
      for (std::int64_t b = 0; b < blocks; ++b) run_block(vocab, block_span(b), shared, cursor, results[b]);
    }
  }
  for (auto& r : results) {
    for (auto id : r.valid) result.mask.set(id);
    result.stats.trie_rejected += r.stats.trie_rejected;
    result.stats.trial_parses += r.stats.trial_parses;
    if (shared != nullptr)
      for (const auto& p : r.rejected.prefixes()) shared->insert(p);
  }

  if (engine.is_accepting()) result.mask.set(vocab.eos_id());
  result.dead_end = result.mask.none();
  return result;
}

bool MaskComputer::check_token(const Engine& engine, std::string_view bytes, RejectedPrefixTrie* trie,
                               MaskStats& stats) const {
  if (engine.finished() || bytes.empty()) return false;
  RejectedPrefixTrie* shared = options_.trie ? trie : nullptr;
  if (shared != nullptr && shared->rejects(bytes)) {
    ++stats.trie_rejected;
    return false;
  }
  ++stats.trial_parses;
  SpeculativeCursor cursor(engine);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (!cursor.push(static_cast<std::uint8_t>(bytes[i]))) {
      if (shared != nullptr) shared->insert(bytes.substr(0, i + 1));
      return false;
    }
  }
  return true;
}

TokenMask compute_mask(const Engine& engine, const Vocabulary& vocab, TokenCache& cache, RejectedPrefixTrie& trie) {
  std::shared_ptr<const Vocabulary> v(std::shared_ptr<const Vocabulary>{}, &vocab);
  std::shared_ptr<TokenCache> c(std::shared_ptr<TokenCache>{}, &cache);
  return MaskComputer(v, c).compute(engine, &trie).mask;
}

}  // namespace cfgmask
