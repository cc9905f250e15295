#include "cfgmask/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cfgmask {

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::uint32_t eos_id)
    : tokens_(std::move(tokens)), eos_id_(eos_id) {
  if (eos_id_ >= tokens_.size()) throw std::invalid_argument("eos_id out of range");
  if (!tokens_[eos_id_].empty()) throw std::invalid_argument("EOS token must have an empty byte sequence");
  for (std::uint32_t id = 0; id < tokens_.size(); ++id) {
    if (id == eos_id_) continue;
    if (tokens_[id].empty()) throw std::invalid_argument("token " + std::to_string(id) + " is empty");
    sorted_.push_back(id);
  }
  std::stable_sort(sorted_.begin(), sorted_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return tokens_[a] < tokens_[b]; });
}

Vocabulary Vocabulary::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("vocabulary is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("eos_id") || !doc.contains("tokens") || !doc["tokens"].is_object())
    throw std::invalid_argument("vocabulary must be an object with 'eos_id' and 'tokens'");
  const auto eos = doc["eos_id"].get<std::int64_t>();
  const auto& entries = doc["tokens"];
  std::vector<std::string> tokens(entries.size());
  std::vector<bool> seen(entries.size(), false);
  for (const auto& [key, value] : entries.items()) {
    std::size_t consumed = 0;
    unsigned long id = 0;
    try {
      id = std::stoul(key, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed != key.size() || id >= tokens.size())
      throw std::invalid_argument("token ids must be dense integers 0..n-1 (bad key '" + key + "')");
    tokens[id] = base64_decode(value.get<std::string>());
    seen[id] = true;
  }
  if (eos < 0 || static_cast<std::size_t>(eos) > tokens.size())
    throw std::invalid_argument("eos_id out of range");
  // The EOS entry may be omitted, in which case it is appended.
  if (static_cast<std::size_t>(eos) == tokens.size()) {
    tokens.emplace_back();
    seen.push_back(true);
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i] && i != static_cast<std::size_t>(eos))
      throw std::invalid_argument("token ids must be dense (missing " + std::to_string(i) + ")");
  return Vocabulary(std::move(tokens), static_cast<std::uint32_t>(eos));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vocabulary file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string Vocabulary::to_json() const {
  nlohmann::ordered_json doc;
  doc["eos_id"] = eos_id_;
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (std::uint32_t id = 0; id < tokens_.size(); ++id) entries[std::to_string(id)] = base64_encode(tokens_[id]);
  doc["tokens"] = std::move(entries);
  return doc.dump();
}

namespace {
constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    std::uint32_t v = static_cast<std::uint8_t>(bytes[i]) << 16 | static_cast<std::uint8_t>(bytes[i + 1]) << 8 |
                      static_cast<std::uint8_t>(bytes[i + 2]);
    for (int shift : {18, 12, 6, 0}) out.push_back(kAlphabet[(v >> shift) & 63]);
  }
  std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = static_cast<std::uint8_t>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<std::uint8_t>(bytes[i + 1]) << 8;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string base64_decode(std::string_view text) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length must be a multiple of 4");
  std::string out;
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      char c = text[i + k];
      int d = 0;
      if (c == '=') {
        if (i + 4 != text.size() || k < 2) throw std::invalid_argument("misplaced base64 padding");
        ++pad;
      } else {
        if (pad > 0) throw std::invalid_argument("misplaced base64 padding");
        d = value(c);
        if (d < 0) throw std::invalid_argument("invalid base64 character");
      }
      v = v << 6 | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<char>(v >> 16));
    if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

Vocabulary synthetic_vocabulary(std::uint32_t size, std::uint64_t seed, std::span<const std::string> samples) {
  std::vector<std::string> tokens;
  std::set<std::string> seen;
  auto add = [&](std::string t) {
    if (tokens.size() + 1 >= size || t.empty()) return;
    if (seen.insert(t).second) tokens.push_back(std::move(t));
  };
  add("\t");
  add("\n");
  for (int c = 0x20; c < 0x7f; ++c) add(std::string(1, static_cast<char>(c)));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> len(2, 6);
  std::size_t attempts = 0;
  const std::size_t sample_budget = samples.empty() ? 0 : (size * 2) / 3;
  while (tokens.size() + 1 < sample_budget && attempts++ < size * 50) {
    const auto& s = samples[std::uniform_int_distribution<std::size_t>(0, samples.size() - 1)(rng)];
    if (s.size() < 2) continue;
    auto n = std::min<std::size_t>(static_cast<std::size_t>(len(rng)), s.size());
    auto start = std::uniform_int_distribution<std::size_t>(0, s.size() - n)(rng);
    add(s.substr(start, n));
  }
  std::uniform_int_distribution<int> printable(0x20, 0x7e);
  while (tokens.size() + 1 < size) {
    std::string t;
    int n = len(rng);
    for (int i = 0; i < n; ++i) t.push_back(static_cast<char>(printable(rng)));
    add(std::move(t));
  }
  tokens.emplace_back();
  auto eos = static_cast<std::uint32_t>(tokens.size() - 1);
  return Vocabulary(std::move(tokens), eos);
}

}  // namespace cfgmask
