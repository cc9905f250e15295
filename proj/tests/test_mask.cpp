#include <doctest.h>

#include <omp.h>

#include <random>

#include "cfgmask/decoder.hpp"
#include "cfgmask/mask_engine.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace cfgmask;

namespace {

// Independent automaton trace used as the oracle for CI classification.
enum class Trace { consumed, died_before_accepting, died_after_accepting };

Trace trace(const TerminalAutomaton& a, std::uint32_t state, const std::string& bytes) {
  bool accepting = a.is_accepting(state);
  for (unsigned char c : bytes) {
    auto n = a.next(state, c);
    if (n < 0) return accepting ? Trace::died_after_accepting : Trace::died_before_accepting;
    state = static_cast<std::uint32_t>(n);
    accepting = accepting || a.is_accepting(state);
  }
  return Trace::consumed;
}

std::vector<std::string> ids_to_tokens(const TokenMask& m, const Vocabulary& v) {
  std::vector<std::string> out;
  m.for_each_set([&](std::size_t id) { out.push_back(id == v.eos_id() ? "<eos>" : v.token(static_cast<std::uint32_t>(id))); });
  std::sort(out.begin(), out.end());
  return out;
}

MaskResult fresh_mask(const std::shared_ptr<const Vocabulary>& v, const Engine& e, MaskOptions o, RejectedPrefixTrie* trie) {
  auto cache = std::make_shared<TokenCache>(e.grammar_ptr(), v, o.parallelism);
  return MaskComputer(v, cache, o).compute(e, trie);
}

}  // namespace

TEST_CASE("CI classification of single tokens") {
  auto digits = compile_terminal("[0-9]+");
  auto v = fixture::vocab({"42", "7,", "x", "abc", "ab"});
  auto start = classify_tokens(digits, digits.start(), *v, Parallelism::serial);
  CHECK(start.accepted.test(0));
  CHECK(start.rejected.test(2));
  auto accepting = static_cast<std::uint32_t>(digits.next(digits.start(), '4'));
  REQUIRE(digits.is_accepting(accepting));
  auto mid = classify_tokens(digits, accepting, *v, Parallelism::serial);
  CHECK_FALSE(mid.accepted.test(1));
  CHECK_FALSE(mid.rejected.test(1));

  auto abc = literal_automaton("abc");
  auto lit = classify_tokens(abc, abc.start(), *v, Parallelism::serial);
  CHECK(lit.rejected.test(2));
  CHECK(lit.accepted.test(3));
  CHECK(lit.accepted.test(4));
  CHECK_FALSE(lit.accepted.test(v->eos_id()));
  CHECK_FALSE(lit.rejected.test(v->eos_id()));
}

TEST_CASE("CI classification matches the trace oracle for every state") {
  auto v = fixture::json_vocab(512, 3);
  auto g = fixture::bundled("json.cfg");
  TokenCache cache(g, v, Parallelism::serial);
  for (std::uint32_t t = 0; t < g->terminal_count(); ++t) {
    const auto& a = g->terminal(t).automaton;
    for (std::uint32_t s = 0; s < a.state_count(); ++s) {
      const auto& e = cache.entry(t, s);
      CHECK_FALSE(e.accepted.intersects(e.rejected));
      for (std::uint32_t id = 0; id < v->size(); ++id) {
        if (id == v->eos_id()) continue;
        auto tr = trace(a, s, v->token(id));
        CHECK(e.accepted.test(id) == (tr == Trace::consumed));
        CHECK(e.rejected.test(id) == (tr == Trace::died_before_accepting));
      }
    }
  }
}

TEST_CASE("serial and OpenMP classification kernels agree") {
  auto v = fixture::json_vocab(1024, 8);
  auto g = fixture::bundled("json.cfg");
  omp_set_num_threads(4);
  for (std::uint32_t t = 0; t < g->terminal_count(); ++t) {
    const auto& a = g->terminal(t).automaton;
    for (std::uint32_t s = 0; s < a.state_count(); ++s) {
      auto x = classify_tokens(a, s, *v, Parallelism::serial);
      auto y = classify_tokens(a, s, *v, Parallelism::openmp);
      CHECK(x.accepted == y.accepted);
      CHECK(x.rejected == y.rejected);
    }
  }
}

TEST_CASE("object start allows a quote or a closing brace") {
  auto g = fixture::bundled("json.cfg");
  auto v = fixture::vocab({"\"", "}", "a", "{"});
  Engine e(g);
  REQUIRE(e.accept_byte('{'));
  RejectedPrefixTrie trie;
  auto r = fresh_mask(v, e, {}, &trie);
  CHECK(ids_to_tokens(r.mask, *v) == std::vector<std::string>{"\"", "}"});
}

TEST_CASE("single literal grammar") {
  auto g = fixture::prepared("start ::= \"a\" ;");
  auto v = fixture::vocab({"a", "b", "ab"});
  Engine e(g);
  for (bool ci : {true, false}) {
    RejectedPrefixTrie trie;
    auto r = fresh_mask(v, e, MaskOptions{ci, true, Parallelism::serial}, &trie);
    CHECK(ids_to_tokens(r.mask, *v) == std::vector<std::string>{"a"});
  }
  REQUIRE(e.accept_byte('a'));
  RejectedPrefixTrie trie;
  CHECK(ids_to_tokens(fresh_mask(v, e, {}, &trie).mask, *v) == std::vector<std::string>{"<eos>"});
}

TEST_CASE("dead ends are reported") {
  auto g = fixture::prepared("start ::= \"ab\" ;");
  auto v = fixture::vocab({"a", "x"});
  Engine e(g);
  REQUIRE(e.accept_byte('a'));
  auto r = fresh_mask(v, e, {}, nullptr);
  CHECK(r.dead_end);
  CHECK(r.mask.none());
}

TEST_CASE("rejected prefixes are minimal and short-circuit later tokens") {
  RejectedPrefixTrie t;
  t.insert("abc");
  t.insert("abd");
  CHECK(t.size() == 2);
  t.insert("ab");
  CHECK(t.size() == 1);
  t.insert("abzz");
  CHECK(t.size() == 1);
  CHECK(t.rejects("abx"));
  CHECK_FALSE(t.rejects("a"));
  CHECK(t.prefixes() == std::vector<std::string>{"ab"});
  t.clear();
  CHECK(t.size() == 0);
  CHECK_FALSE(t.rejects("abx"));
}

TEST_CASE("trie stores the minimal failing prefix during trial parsing") {
  auto g = fixture::prepared("start ::= as \"b\" ; as ::= as \"a\" | \"a\" ;");
  auto v = fixture::vocab({"aaacdefrf", "aaacd", "aaacx", "ab"});
  Engine e(g);
  MaskComputer mc(v, std::make_shared<TokenCache>(g, v), {});
  RejectedPrefixTrie trie;
  MaskStats stats;
  CHECK_FALSE(mc.check_token(e, v->token(0), &trie, stats));
  CHECK(stats.trial_parses == 1);
  CHECK(trie.prefixes() == std::vector<std::string>{"aaac"});
  MaskStats later;
  CHECK_FALSE(mc.check_token(e, "aaacd", &trie, later));
  CHECK(later.trial_parses == 0);
  CHECK(later.trie_rejected == 1);
}

TEST_CASE("a second mask at the same state needs fewer trials") {
  auto g = fixture::bundled("json.cfg");
  auto v = fixture::json_vocab(512, 4);
  Engine e(g);
  REQUIRE(e.accept_bytes("{\"k\": "));
  MaskComputer mc(v, std::make_shared<TokenCache>(g, v), {});
  RejectedPrefixTrie trie;
  auto first = mc.compute(e, &trie);
  auto second = mc.compute(e, &trie);
  CHECK(first.mask == second.mask);
  CHECK(trie.size() > 0);
  CHECK(second.stats.trial_parses < first.stats.trial_parses);
}

TEST_CASE("every optimization subset matches the brute-force mask along random decodes") {
  auto v = fixture::json_vocab(300, 12);
  for (const char* name : {"json.cfg", "arith.cfg"}) {
    auto g = fixture::bundled(name);
    CAPTURE(name);
    std::mt19937_64 rng(17);
    std::vector<std::unique_ptr<Decoder>> decoders;
    for (int bits = 0; bits < 16; ++bits)
      decoders.push_back(std::make_unique<Decoder>(
          g, v, DecoderOptions{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0, (bits & 8) != 0, Parallelism::serial}));
    Engine reference(g, EngineOptions{false});
    for (int step = 0; step < 30; ++step) {
      CAPTURE(step);
      auto expected = oracle::brute_force_mask(reference, *v);
      for (auto& d : decoders) CHECK(d->mask().mask == expected);
      std::vector<std::uint32_t> allowed;
      expected.for_each_set([&](std::size_t id) {
        if (id != v->eos_id()) allowed.push_back(static_cast<std::uint32_t>(id));
      });
      if (allowed.empty()) break;
      auto pick = allowed[std::uniform_int_distribution<std::size_t>(0, allowed.size() - 1)(rng)];
      REQUIRE(reference.accept_bytes(v->token(pick)));
      for (auto& d : decoders) REQUIRE(d->accept_token(pick));
    }
  }
}

TEST_CASE("serial and OpenMP mask passes agree, trie contents included") {
  auto g = fixture::bundled("json.cfg");
  auto v = fixture::json_vocab(1024, 21);
  omp_set_num_threads(4);
  auto cache = std::make_shared<TokenCache>(g, v);
  MaskComputer serial(v, cache, MaskOptions{true, true, Parallelism::serial});
  MaskComputer parallel(v, cache, MaskOptions{true, true, Parallelism::openmp});
  Engine e(g);
  for (const char* piece : {"", "[", "{\"a", "\": 1", ", \"b\": [tr"}) {
    REQUIRE(e.accept_bytes(piece));
    RejectedPrefixTrie t1, t2;
    auto a = serial.compute(e, &t1);
    auto b = parallel.compute(e, &t2);
    CHECK(a.mask == b.mask);
    CHECK(a.stats.trial_parses == b.stats.trial_parses);
    CHECK(t1.prefixes() == t2.prefixes());
  }
}

TEST_CASE("decoder token acceptance") {
  auto g = fixture::bundled("json.cfg");
  auto v = fixture::vocab({"{", "{\"", "}", "\"k\"", ":", "1"});
  Decoder d(g, v);
  CHECK_FALSE(d.accept_token(v->eos_id()));
  auto m = d.mask();
  CHECK(m.mask.test(1));
  CHECK(d.accept_token(1));
  CHECK(d.trie().size() == 0);
  CHECK(d.accept_token(4));
  CHECK_FALSE(d.accept_token(3));
  d.reset();
  CHECK(d.accept_token(0));
  CHECK_FALSE(d.accept_token(4));
  CHECK_FALSE(d.mask().mask.test(4));
  CHECK(d.accept_token(2));
  CHECK(d.mask().mask.test(v->eos_id()));
  CHECK(d.accept_token(v->eos_id()));
  CHECK(d.engine().finished());
  CHECK(d.mask().mask.none());
  CHECK_FALSE(d.accept_token(0));
}
