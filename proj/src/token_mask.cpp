#include "cfgmask/token_mask.hpp"

#include <stdexcept>

namespace cfgmask {

TokenMask::TokenMask(std::size_t size, bool value)
    : size_(size), words_((size + 63) / 64, value ? ~std::uint64_t{0} : 0) {
  clear_tail();
}

void TokenMask::clear_tail() {
  if (size_ % 64 != 0 && !words_.empty())
    words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
}

void TokenMask::fill(bool value) {
  for (auto& w : words_) w = value ? ~std::uint64_t{0} : 0;
  clear_tail();
}

std::size_t TokenMask::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool TokenMask::none() const {
  for (auto w : words_)
    if (w != 0) return false;
  return true;
}

TokenMask& TokenMask::operator|=(const TokenMask& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

TokenMask& TokenMask::operator&=(const TokenMask& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
  return *this;
}

TokenMask& TokenMask::subtract(const TokenMask& other) {
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~other.words_[i];
  return *this;
}

TokenMask TokenMask::operator~() const {
  TokenMask out = *this;
  for (auto& w : out.words_) w = ~w;
  out.clear_tail();
  return out;
}

bool TokenMask::intersects(const TokenMask& other) const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if ((words_[i] & other.words_[i]) != 0) return true;
  return false;
}

std::vector<std::uint8_t> TokenMask::to_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
  return out;
}

std::string TokenMask::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  auto bytes = to_bytes();
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

TokenMask TokenMask::from_hex(std::string_view hex, std::size_t size) {
  if (hex.size() != 2 * ((size + 7) / 8))
    throw std::invalid_argument("mask hex length does not match vocabulary size");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    throw std::invalid_argument("mask hex must be lowercase hexadecimal");
  };
  TokenMask out(size);
  for (std::size_t i = 0; i < hex.size() / 2; ++i) {
    std::uint64_t byte = nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]);
    out.words_[i / 8] |= byte << (8 * (i % 8));
  }
  std::uint64_t before = out.words_.empty() ? 0 : out.words_.back();
  out.clear_tail();
  if (!out.words_.empty() && before != out.words_.back())
    throw std::invalid_argument("mask hex has bits set past the vocabulary size");
  return out;
}

}  // namespace cfgmask
