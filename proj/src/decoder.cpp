#include "cfgmask/decoder.hpp"

#include <stdexcept>

namespace cfgmask {

namespace {

std::shared_ptr<TokenCache> ensure_token_cache(std::shared_ptr<TokenCache> cache, const DecoderOptions& options,
                                               const std::shared_ptr<const Grammar>& grammar,
                                               const std::shared_ptr<const Vocabulary>& vocab) {
  if (cache || !options.ci_cache) return cache;
  return std::make_shared<TokenCache>(grammar, vocab, options.parallelism);
}

}  // namespace

Decoder::Decoder(std::shared_ptr<const Grammar> prepared, std::shared_ptr<const Vocabulary> vocab,
                 DecoderOptions options, std::shared_ptr<TokenCache> token_cache,
                 std::shared_ptr<MaskCache> state_cache)
    : grammar_(std::move(prepared)),
      vocab_(std::move(vocab)),
      options_(options),
      token_cache_(ensure_token_cache(std::move(token_cache), options_, grammar_, vocab_)),
      state_cache_(options_.state_cache ? (state_cache ? std::move(state_cache) : std::make_shared<MaskCache>())
                                        : nullptr),
      computer_(vocab_, token_cache_, MaskOptions{options_.ci_cache, options_.trie, options_.parallelism}),
      engine_(grammar_, EngineOptions{options_.prune}) {}

MaskStep Decoder::mask() {
  MaskStep step;
  step.fingerprint = fingerprint(engine_);
  trie_.reset_for_state(step.fingerprint);
  auto compute = [&] {
    auto r = computer_.compute(engine_, options_.trie ? &trie_ : nullptr);
    step.stats = r.stats;
    return std::move(r.mask);
  };
  if (state_cache_) {
    step.mask = state_cache_->lookup_or_compute(step.fingerprint, compute, &step.cache_hit);
  } else {
    step.mask = compute();
  }
  step.dead_end = step.mask.none() && !engine_.finished();
  return step;
}

bool Decoder::accept_token(std::uint32_t id) {
  if (id >= vocab_->size()) throw std::out_of_range("token id out of range");
  if (engine_.finished()) return false;
  if (id == vocab_->eos_id()) {
    if (!engine_.is_accepting()) return false;
    engine_.finish();
    trie_.clear();
    return true;
  }
  return accept_bytes(vocab_->token(id));
}

bool Decoder::accept_bytes(std::string_view bytes) {
  if (!engine_.accept_bytes(bytes)) return false;
  if (!bytes.empty()) trie_.clear();
  return true;
}

void Decoder::reset() {
  engine_ = Engine(grammar_, EngineOptions{options_.prune});
  trie_.clear();
}

}  // namespace cfgmask
