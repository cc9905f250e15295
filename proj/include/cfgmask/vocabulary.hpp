#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfgmask {

/// Token id -> byte sequence. The EOS id maps to the empty sequence; every
/// other token is non-empty.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> tokens, std::uint32_t eos_id);

  std::uint32_t size() const { return static_cast<std::uint32_t>(tokens_.size()); }
  std::uint32_t eos_id() const { return eos_id_; }
  const std::string& token(std::uint32_t id) const { return tokens_[id]; }

  /// Non-EOS ids in lexicographic byte order of their tokens.
  const std::vector<std::uint32_t>& sorted_ids() const { return sorted_; }

  /// `{"eos_id": N, "tokens": {"<id>": "<base64>", ...}}`
  static Vocabulary from_json(std::string_view text);
  static Vocabulary load(const std::filesystem::path& path);
  std::string to_json() const;

 private:
  std::vector<std::string> tokens_;
  std::uint32_t eos_id_;
  std::vector<std::uint32_t> sorted_;
};

std::string base64_encode(std::string_view bytes);
/// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view text);

/// Deterministic synthetic vocabulary of `size` tokens (EOS is the last id):
/// every printable ASCII byte plus tab and newline, then random 2-6 byte
/// slices of `samples`, then random printable noise.
Vocabulary synthetic_vocabulary(std::uint32_t size, std::uint64_t seed, std::span<const std::string> samples);

}  // namespace cfgmask
