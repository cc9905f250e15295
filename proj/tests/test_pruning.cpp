#include <doctest.h>

#include <random>

#include "cfgmask/earley.hpp"
#include "cfgmask/pruning.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace cfgmask;

namespace {

bool feed(Engine& e, std::string_view s) {
  for (char c : s)
    if (!e.accept_byte(static_cast<std::uint8_t>(c))) return false;
  return true;
}

// Every retained item's origin and every retained edge source must still exist.
void check_closed(const Engine& e) {
  for (const auto& set : e.sets()) {
    for (const auto& item : set.items()) CHECK(e.find_set(item.origin) != nullptr);
    for (const auto& edge : set.all_dependencies()) {
      const auto* src = e.find_set(edge.dep.source.set);
      REQUIRE(src != nullptr);
      CHECK(edge.dep.source.pos < src->size());
    }
  }
}

}  // namespace

TEST_CASE("live state stays bounded on left recursion") {
  auto g = fixture::prepared(fixture::kAPlus);
  Engine pruned(g);
  Engine full(g, EngineOptions{false});
  std::size_t at10 = 0;
  for (int i = 1; i <= 200; ++i) {
    REQUIRE(pruned.accept_byte('a'));
    REQUIRE(full.accept_byte('a'));
    if (i == 10) at10 = pruned.live_item_count();
  }
  CHECK(pruned.live_item_count() == at10);
  CHECK(pruned.sets().size() <= 3);
  CHECK(full.live_item_count() > 10 * pruned.live_item_count());
}

TEST_CASE("compaction keeps origins and edges closed") {
  auto g = fixture::bundled("json.cfg");
  Engine e(g);
  for (char c : std::string("{\"k\": [1, {\"z\": null}], \"m\": \"x\"}")) {
    REQUIRE(e.accept_byte(static_cast<std::uint8_t>(c)));
    check_closed(e);
  }
}

TEST_CASE("the active set covers the whole newest set") {
  auto g = fixture::bundled("json.cfg");
  Engine e(g, EngineOptions{true});
  REQUIRE(feed(e, "[1, 2"));
  auto active = compute_active(e);
  const auto& last = active.marks.back();
  CHECK(std::all_of(last.begin(), last.end(), [](auto m) { return m != 0; }));
  CHECK(active.size() == e.live_item_count());
}

TEST_CASE("pruned and unpruned engines accept the same continuations") {
  std::mt19937_64 rng(5);
  const auto suffixes = oracle::all_strings("ab", 5);
  int grammars = 0;
  while (grammars < 10) {
    auto text = oracle::random_grammar_text(rng, 5, 3, "ab");
    Grammar raw = parse_grammar(text);
    if (oracle::derivable(raw, "ab", 6).empty()) continue;
    CAPTURE(text);
    auto g = std::make_shared<const Grammar>(prepare_grammar(raw));
    for (const auto& prefix : oracle::all_strings("ab", 3)) {
      Engine p(g, EngineOptions{true});
      Engine u(g, EngineOptions{false});
      bool ok_p = feed(p, prefix);
      REQUIRE(ok_p == feed(u, prefix));
      if (!ok_p) continue;
      for (const auto& s : suffixes) {
        Engine pc = p;
        Engine uc = u;
        bool a = feed(pc, s);
        CHECK(a == feed(uc, s));
        if (a) CHECK(pc.is_accepting() == uc.is_accepting());
      }
    }
    ++grammars;
  }
}
