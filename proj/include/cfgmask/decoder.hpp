#pragma once

#include <cstdint>
#include <memory>
#include <string_view>

#include "cfgmask/earley.hpp"
#include "cfgmask/fingerprint.hpp"
#include "cfgmask/mask_engine.hpp"
#include "cfgmask/state_cache.hpp"
#include "cfgmask/vocabulary.hpp"

namespace cfgmask {

struct DecoderOptions {
  bool prune = true;
  bool ci_cache = true;
  bool trie = true;
  bool state_cache = true;
  Parallelism parallelism = Parallelism::openmp;
};

struct MaskStep {
  TokenMask mask;
  bool dead_end = false;
  bool cache_hit = false;
  Fingerprint fingerprint;
  /// Zero on a state-cache hit.
  MaskStats stats;
};

/// One decoding session: engine, rejected-prefix trie and the caches. The
/// token and state caches may be shared between sessions over the same
/// grammar and vocabulary.
class Decoder {
 public:
  Decoder(std::shared_ptr<const Grammar> prepared, std::shared_ptr<const Vocabulary> vocab, DecoderOptions options = {},
          std::shared_ptr<TokenCache> token_cache = nullptr, std::shared_ptr<MaskCache> state_cache = nullptr);

  MaskStep mask();

  /// Commits all bytes of `id` or nothing. EOS is legal only in an accepting
  /// state and finishes the sequence.
  bool accept_token(std::uint32_t id);
  /// Byte-level prefix feeding, bypassing the vocabulary.
  bool accept_bytes(std::string_view bytes);

  /// Back to the initial state; caches are kept.
  void reset();

  const Engine& engine() const { return engine_; }
  const Vocabulary& vocabulary() const { return *vocab_; }
  const DecoderOptions& options() const { return options_; }
  const RejectedPrefixTrie& trie() const { return trie_; }
  const std::shared_ptr<TokenCache>& token_cache() const { return token_cache_; }
  const std::shared_ptr<MaskCache>& state_cache() const { return state_cache_; }
  const MaskComputer& computer() const { return computer_; }

 private:
  std::shared_ptr<const Grammar> grammar_;
  std::shared_ptr<const Vocabulary> vocab_;
  DecoderOptions options_;
  std::shared_ptr<TokenCache> token_cache_;
  std::shared_ptr<MaskCache> state_cache_;
  MaskComputer computer_;
  Engine engine_;
  RejectedPrefixTrie trie_;
};

}  // namespace cfgmask
