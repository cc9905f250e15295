#include <doctest.h>

#include "cfgmask/automaton.hpp"
#include "support/oracles.hpp"

using namespace cfgmask;

TEST_CASE("literal automaton accepts exactly its bytes") {
  auto a = literal_automaton("abc");
  CHECK(a.accepts("abc"));
  CHECK_FALSE(a.accepts("ab"));
  CHECK_FALSE(a.accepts("abcc"));
  CHECK_FALSE(a.accepts(""));
  CHECK(a.state_count() == 4);
  CHECK_FALSE(a.can_extend(3));
}

TEST_CASE("compiled regex agrees with std::regex on every short string") {
  const std::vector<std::string> patterns{
      "a*",         "(ab|b)+",   "[ab]{2,3}", "a?b?a?",  "(a|b)*abb", "[^a]+",    "b{2}",
      "(?:ab)*a",   "a|b|ab",    "[a-b]0*",   "(a*b*)*", "0{1,}",     "\\d+a",    "[0-9a]{0,2}b?",
  };
  const auto strings = oracle::all_strings("ab0", 5);
  for (const auto& p : patterns) {
    CAPTURE(p);
    auto dfa = compile_terminal(p);
    for (const auto& s : strings) {
      CAPTURE(s);
      CHECK(dfa.accepts(s) == oracle::regex_matches(p, s));
    }
  }
}

TEST_CASE("minimal DFA sizes") {
  CHECK(compile_terminal("(a|b)*abb").state_count() == 4);
  CHECK(compile_terminal("a*").state_count() == 1);
  CHECK(compile_terminal("[0-9]+").state_count() == 2);
}

TEST_CASE("escapes and classes") {
  auto hex = compile_terminal("\\x41[\\x30-\\x32]");
  CHECK(hex.accepts("A0"));
  CHECK(hex.accepts("A2"));
  CHECK_FALSE(hex.accepts("A3"));
  auto ws = compile_terminal("\\s+");
  CHECK(ws.accepts(" \t\n"));
  CHECK_FALSE(ws.accepts("x"));
  auto dot = compile_terminal(".");
  CHECK(dot.accepts("\xff"));
  CHECK_FALSE(dot.accepts("\n"));
  auto brace = compile_terminal("a{");
  CHECK(brace.accepts("a{"));
  auto quote = compile_terminal("\"[^\"]*\"");
  CHECK(quote.accepts("\"hi\""));
  CHECK_FALSE(quote.accepts("\"h\"i\""));
}

TEST_CASE("unsupported or malformed patterns throw with a position") {
  auto position_of = [](const char* p) -> long {
    try {
      compile_terminal(p);
    } catch (const RegexError& e) {
      return static_cast<long>(e.position());
    }
    return -1;
  };
  CHECK(position_of("(ab") >= 0);
  CHECK(position_of("a{3,1}") >= 0);
  CHECK(position_of("^a") == 0);
  CHECK(position_of("a\\1") == 1);
  CHECK(position_of("[b-a]") >= 0);
  CHECK(position_of("[]") >= 0);
  CHECK(position_of("a)") == 1);
}

TEST_CASE("empty-string handling") {
  auto star = compile_terminal("a*");
  CHECK(star.accepts_empty());
  auto plus = star.without_empty();
  CHECK_FALSE(plus.accepts(""));
  CHECK(plus.accepts("a"));
  CHECK(plus.accepts("aaa"));
  CHECK(compile_terminal("(?:)").only_empty());
  CHECK_FALSE(star.only_empty());
}

TEST_CASE("every retained state is live") {
  for (const char* p : {"(a|b)*abb", "[0-9]+(\\.[0-9]+)?", "\"([^\"\\\\]|\\\\.)*\""}) {
    auto dfa = compile_terminal(p);
    for (std::uint32_t s = 0; s < dfa.state_count(); ++s) {
      CHECK((dfa.is_accepting(s) || dfa.can_extend(s)));
      bool extend = false;
      for (int b = 0; b < 256; ++b) extend = extend || dfa.next(s, static_cast<std::uint8_t>(b)) != TerminalAutomaton::kDead;
      CHECK(extend == dfa.can_extend(s));
    }
  }
}
