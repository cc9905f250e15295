#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cfgmask/grammar.hpp"
#include "cfgmask/transform.hpp"
#include "cfgmask/vocabulary.hpp"

namespace fixture {

inline std::string path(const std::string& relative) { return std::string(CFGMASK_SOURCE_DIR) + "/" + relative; }

inline std::string read(const std::string& relative) {
  std::ifstream in(path(relative), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::shared_ptr<const cfgmask::Grammar> prepared(const std::string& text, const char* start = nullptr) {
  auto g = start ? cfgmask::parse_grammar(text, start) : cfgmask::parse_grammar(text);
  return std::make_shared<const cfgmask::Grammar>(cfgmask::prepare_grammar(g));
}

inline std::shared_ptr<const cfgmask::Grammar> bundled(const std::string& name, const char* start = nullptr) {
  return prepared(read("grammars/" + name), start);
}

inline const std::string kPlus = "start ::= A \"+\" B ;\nA ::= \"a\" | \"c\" ;\nB ::= \"b\" | \"d\" ;\n";
inline const std::string kAPlus = "start ::= start \"a\" | \"a\" ;\n";
inline const std::string kLeftAB = "A ::= A B | B ;\nB ::= \"a\" ;\n";

/// Hand-picked vocabulary; EOS is appended as the last id.
inline std::shared_ptr<const cfgmask::Vocabulary> vocab(std::vector<std::string> tokens) {
  auto eos = static_cast<std::uint32_t>(tokens.size());
  tokens.emplace_back();
  return std::make_shared<const cfgmask::Vocabulary>(std::move(tokens), eos);
}

inline std::shared_ptr<const cfgmask::Vocabulary> json_vocab(std::uint32_t size, std::uint64_t seed) {
  std::vector<std::string> samples{read("data/json_samples.txt")};
  return std::make_shared<const cfgmask::Vocabulary>(cfgmask::synthetic_vocabulary(size, seed, samples));
}

}  // namespace fixture
