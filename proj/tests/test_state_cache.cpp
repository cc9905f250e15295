#include <doctest.h>

#include <random>

#include "cfgmask/decoder.hpp"
#include "cfgmask/fingerprint.hpp"
#include "cfgmask/state_cache.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace cfgmask;

namespace {

Engine engine_after(const std::shared_ptr<const Grammar>& g, std::string_view prefix, bool prune) {
  Engine e(g, EngineOptions{prune});
  REQUIRE(e.accept_bytes(prefix));
  return e;
}

// Suffixes accepted from a state, up to a length bound over a fixed alphabet.
std::set<std::string> continuations(const Engine& e, const std::string& alphabet, std::size_t max_len) {
  std::set<std::string> out;
  for (const auto& s : oracle::all_strings(alphabet, max_len)) {
    Engine c = e;
    if (c.accept_bytes(s) && c.is_accepting()) out.insert(s);
  }
  return out;
}

TokenMask mask_bits(std::size_t n, std::initializer_list<std::size_t> ids) {
  TokenMask m(n);
  for (auto id : ids) m.set(id);
  return m;
}

}  // namespace

TEST_CASE("fresh engines share a fingerprint") {
  auto g = fixture::bundled("json.cfg");
  CHECK(fingerprint(Engine(g)) == fingerprint(Engine(g)));
  CHECK(fingerprint(Engine(g)).hex().size() == 32);
  CHECK_FALSE(fingerprint(Engine(g)) == fingerprint(engine_after(g, "[", true)));
}

TEST_CASE("objects with different keys converge after pruning") {
  auto g = fixture::bundled("json.cfg");
  auto a = engine_after(g, "{\"ab\":1,", true);
  auto b = engine_after(g, "{\"xy\":2,", true);
  CHECK(canonical_encoding(a) == canonical_encoding(b));
  CHECK(fingerprint(a) == fingerprint(b));

  auto ua = engine_after(g, "{\"ab\":1,", false);
  auto ub = engine_after(g, "{\"xy\":2,", false);
  CHECK_FALSE(canonical_encoding(ua) == canonical_encoding(ub));
  CHECK_FALSE(fingerprint(ua) == fingerprint(ub));
}

TEST_CASE("fingerprints ignore absolute positions") {
  auto g = fixture::prepared(fixture::kAPlus);
  CHECK(fingerprint(engine_after(g, "aa", true)) == fingerprint(engine_after(g, "aaaaa", true)));
  CHECK_FALSE(fingerprint(engine_after(g, "aa", false)) == fingerprint(engine_after(g, "aaaaa", false)));

  auto json = fixture::bundled("json.cfg");
  for (const char* body : {"[1,", "{\"k\": [tr", "\"s"}) {
    CAPTURE(body);
    auto near = engine_after(json, std::string(" ") + body, true);
    auto far = engine_after(json, std::string("     ") + body, true);
    CHECK(fingerprint(near) == fingerprint(far));
  }
}

TEST_CASE("finished engines fingerprint differently") {
  auto g = fixture::prepared(fixture::kAPlus);
  auto e = engine_after(g, "aa", true);
  auto before = fingerprint(e);
  e.finish();
  CHECK_FALSE(fingerprint(e) == before);
}

TEST_CASE("equal fingerprints imply equal continuations") {
  std::mt19937_64 rng(31);
  auto g = fixture::bundled("arith.cfg");
  const std::string alphabet = "1+(x)";
  auto v = fixture::vocab({"1", "+", "(", ")", "x", "1+", ")+", "(x", "+(", "11", "x)"});
  std::vector<std::string> prefixes;
  for (const auto& s : oracle::all_strings(alphabet, 4)) {
    Engine e(g);
    if (e.accept_bytes(s)) prefixes.push_back(s);
  }
  std::shuffle(prefixes.begin(), prefixes.end(), rng);
  prefixes.resize(std::min<std::size_t>(prefixes.size(), 60));
  int collisions = 0;
  for (std::size_t i = 0; i < prefixes.size(); ++i)
    for (std::size_t j = i + 1; j < prefixes.size(); ++j) {
      auto a = engine_after(g, prefixes[i], true);
      auto b = engine_after(g, prefixes[j], true);
      if (!(fingerprint(a) == fingerprint(b))) continue;
      ++collisions;
      CAPTURE(prefixes[i]);
      CAPTURE(prefixes[j]);
      CHECK(continuations(a, alphabet, 3) == continuations(b, alphabet, 3));
      CHECK(oracle::brute_force_mask(a, *v) == oracle::brute_force_mask(b, *v));
    }
  CHECK(collisions > 0);
}

TEST_CASE("LRU cache hits, misses and eviction") {
  MaskCache cache(2);
  Fingerprint a{1, 2}, b{3, 4}, c{5, 6};
  int computed = 0;
  auto make = [&](std::size_t id) {
    return [&computed, id] {
      ++computed;
      return mask_bits(8, {id});
    };
  };
  bool hit = true;
  CHECK(cache.lookup_or_compute(a, make(0), &hit).test(0));
  CHECK_FALSE(hit);
  CHECK(cache.lookup_or_compute(a, make(1), &hit).test(0));
  CHECK(hit);
  cache.lookup_or_compute(b, make(2), &hit);
  cache.lookup_or_compute(a, make(3), &hit);
  cache.lookup_or_compute(c, make(4), &hit);
  CHECK(cache.size() == 2);
  CHECK_FALSE(cache.lookup(b).has_value());
  CHECK(cache.lookup(a).has_value());
  CHECK(computed == 3);
  CHECK_THROWS_AS(MaskCache(0), std::invalid_argument);
}

TEST_CASE("capacity one with alternating states never hits") {
  MaskCache cache(1);
  Fingerprint a{1, 1}, b{2, 2};
  for (int i = 0; i < 10; ++i) {
    bool hit = true;
    cache.lookup_or_compute(i % 2 ? a : b, [] { return TokenMask(4); }, &hit);
    CHECK_FALSE(hit);
  }
  CHECK(cache.hits() == 0);
  CHECK(cache.misses() == 10);
}

TEST_CASE("the default capacity") { CHECK(MaskCache().capacity() == 4096); }

TEST_CASE("second visit to a converged state is a cache hit") {
  auto g = fixture::bundled("json.cfg");
  auto v = fixture::json_vocab(256, 5);
  Decoder d(g, v);
  REQUIRE(d.accept_bytes("{\"ab\":1,"));
  auto first = d.mask();
  CHECK_FALSE(first.cache_hit);
  d.reset();
  REQUIRE(d.accept_bytes("{\"xy\":2,"));
  auto second = d.mask();
  CHECK(second.cache_hit);
  CHECK(second.mask == first.mask);
  CHECK(second.stats.trial_parses == 0);
}

TEST_CASE("cached masks equal freshly computed masks") {
  auto g = fixture::bundled("json.cfg");
  auto v = fixture::json_vocab(256, 6);
  Decoder cached(g, v, DecoderOptions{true, true, true, true, Parallelism::serial});
  Decoder plain(g, v, DecoderOptions{true, true, true, false, Parallelism::serial});
  const std::string doc = "[{\"a\":1,\"b\":[true,null]},{\"a\":2,\"b\":[false]},{\"a\":3,\"b\":[]}]";
  for (char c : doc) {
    auto x = cached.mask();
    auto y = plain.mask();
    CHECK(x.mask == y.mask);
    CHECK(x.fingerprint == y.fingerprint);
    REQUIRE(cached.accept_bytes(std::string(1, c)));
    REQUIRE(plain.accept_bytes(std::string(1, c)));
  }
  CHECK(cached.state_cache()->hits() > 0);
}

TEST_CASE("pruning raises the hit rate on repeated structure") {
  auto g = fixture::bundled("json.cfg");
  auto v = fixture::json_vocab(256, 9);
  std::string doc = "[";
  for (int i = 0; i < 10; ++i) {
    if (i) doc += ",";
    doc += "{\"id\":" + std::to_string(i + 1) + ",\"ok\":true}";
  }
  doc += "]";
  auto rate = [&](bool prune) {
    Decoder d(g, v, DecoderOptions{prune, true, true, true, Parallelism::serial});
    for (char c : doc) {
      d.mask();
      REQUIRE(d.accept_bytes(std::string(1, c)));
    }
    return d.state_cache()->hit_rate();
  };
  auto pruned = rate(true);
  auto unpruned = rate(false);
  CAPTURE(pruned);
  CAPTURE(unpruned);
  CHECK(pruned > unpruned);
  CHECK(pruned > 0.5);
}
