#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "cfgmask/earley.hpp"
#include "cfgmask/fingerprint.hpp"
#include "cfgmask/grammar.hpp"
#include "cfgmask/token_mask.hpp"
#include "cfgmask/vocabulary.hpp"

namespace cfgmask {

enum class Parallelism { serial, openmp };

/// Per-(terminal, automaton state) classification of every token, computed
/// from the automaton alone:
///   accepted - all bytes consumed without reaching DEAD;
///   rejected - reaches DEAD before any visited state (the starting state
///              included) is accepting.
/// Tokens in neither set depend on grammar context.
struct TokenClassification {
  TokenMask accepted;
  TokenMask rejected;
};

/// Classifies every token of `vocab` against `automaton` starting at `state`.
/// The serial loop is the reference; the OpenMP kernel splits the vocabulary
/// on 64-token word boundaries so no mask word is shared between threads.
TokenClassification classify_tokens(const TerminalAutomaton& automaton, std::uint32_t state, const Vocabulary& vocab,
                                    Parallelism parallelism);

/// Lazily populated context-independent token cache. Entries are immutable
/// once published; concurrent first use may compute an entry twice, and the
/// first published copy wins (both are identical).
class TokenCache {
 public:
  TokenCache(std::shared_ptr<const Grammar> grammar, std::shared_ptr<const Vocabulary> vocab,
             Parallelism parallelism = Parallelism::openmp);

  const TokenClassification& entry(std::uint32_t terminal, std::uint32_t state);
  /// Populates every (terminal, state) entry.
  void build_all();
  std::size_t entry_count() const;

  const Grammar& grammar() const { return *grammar_; }
  const Vocabulary& vocabulary() const { return *vocab_; }

 private:
  std::shared_ptr<const Grammar> grammar_;
  std::shared_ptr<const Vocabulary> vocab_;
  Parallelism parallelism_;
  mutable std::shared_mutex mutex_;
  std::vector<std::vector<std::unique_ptr<const TokenClassification>>> entries_;
};

/// Eagerly built cache over every (terminal, state) pair.
std::shared_ptr<TokenCache> build_ci_cache(std::shared_ptr<const Grammar> grammar,
                                           std::shared_ptr<const Vocabulary> vocab,
                                           Parallelism parallelism = Parallelism::openmp);

/// Minimal byte prefixes known to be rejected from one engine state.
/// No stored prefix is a prefix of another.
class RejectedPrefixTrie {
 public:
  RejectedPrefixTrie();

  /// True when some stored prefix is a prefix of `bytes`.
  bool rejects(std::string_view bytes) const;
  /// Stores `prefix` unless a stored prefix already covers it; drops stored
  /// prefixes that `prefix` covers.
  void insert(std::string_view prefix);
  void clear();
  std::size_t size() const { return count_; }
  std::vector<std::string> prefixes() const;

  /// Clears the trie when `state` differs from the state it was filled for.
  void reset_for_state(const Fingerprint& state);
  const std::optional<Fingerprint>& scope() const { return scope_; }

 private:
  struct Node {
    std::vector<std::pair<std::uint8_t, std::uint32_t>> children;  // sorted by byte
    bool terminal = false;
  };
  std::int64_t child(std::uint32_t node, std::uint8_t byte) const;
  std::size_t count_subtree(std::uint32_t node) const;
  void collect(std::uint32_t node, std::string& path, std::vector<std::string>& out) const;

  std::vector<Node> nodes_;
  std::size_t count_ = 0;
  std::optional<Fingerprint> scope_;
};

struct MaskOptions {
  bool ci_cache = true;
  bool trie = true;
  Parallelism parallelism = Parallelism::openmp;
};

struct MaskStats {
  std::uint64_t ci_accepted = 0;
  std::uint64_t ci_rejected = 0;
  std::uint64_t trie_rejected = 0;
  std::uint64_t trial_parses = 0;
};

struct MaskResult {
  TokenMask mask;
  /// No token and no EOS is allowed.
  bool dead_end = false;
  MaskStats stats;
};

/// Computes exact token masks for engine states.
class MaskComputer {
 public:
  /// Tokens resolved by trial parsing are processed in fixed blocks of this
  /// many ids (lexicographic order); results do not depend on thread count.
  static constexpr std::size_t kTrialBlock = 64;

  MaskComputer(std::shared_ptr<const Vocabulary> vocab, std::shared_ptr<TokenCache> cache, MaskOptions options = {});

  /// `trie` may be null when options.trie is off. Requires the engine's last
  /// set to be predicted.
  MaskResult compute(const Engine& engine, RejectedPrefixTrie* trie) const;

  /// Validity of one byte sequence from `engine`'s state, consulting and
  /// updating `trie`. Counts into `stats`.
  bool check_token(const Engine& engine, std::string_view bytes, RejectedPrefixTrie* trie, MaskStats& stats) const;

  const MaskOptions& options() const { return options_; }
  const Vocabulary& vocabulary() const { return *vocab_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  std::shared_ptr<TokenCache> cache_;
  MaskOptions options_;
};

/// Convenience wrapper over MaskComputer::compute.
TokenMask compute_mask(const Engine& engine, const Vocabulary& vocab, TokenCache& cache, RejectedPrefixTrie& trie);

}  // namespace cfgmask
