#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cfgmask {

/// Fixed-width bit vector over vocabulary ids.
///
/// Wire format: lowercase hex of the little-endian byte image, so bit 0 of
/// byte 0 is token 0. Trailing bits past size() are always zero.
class TokenMask {
 public:
  TokenMask() = default;
  explicit TokenMask(std::size_t size, bool value = false);

  std::size_t size() const { return size_; }

  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  void assign(std::size_t i, bool v) { v ? set(i) : reset(i); }

  void fill(bool value);
  std::size_t count() const;
  bool none() const;

  TokenMask& operator|=(const TokenMask& other);
  TokenMask& operator&=(const TokenMask& other);
  /// this &= ~other
  TokenMask& subtract(const TokenMask& other);
  TokenMask operator~() const;

  bool intersects(const TokenMask& other) const;

  template <typename F>
  void for_each_set(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      std::uint64_t bits = words_[w];
      while (bits != 0) {
        f(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
        bits &= bits - 1;
      }
    }
  }

  std::vector<std::uint8_t> to_bytes() const;
  std::string to_hex() const;
  static TokenMask from_hex(std::string_view hex, std::size_t size);

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  friend bool operator==(const TokenMask&, const TokenMask&) = default;

 private:
  void clear_tail();

  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace cfgmask
