#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "cfgmask/cli.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace cfgmask;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::vector<json> lines;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  for (auto& a : args)
    if (a.rfind("grammars/", 0) == 0 || a.rfind("data/", 0) == 0) a = fixture::path(a);
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  std::istringstream in(out.str());
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) r.lines.push_back(json::parse(line));
  r.err = err.str();
  return r;
}

const std::string kVocab = "data/json_vocab.json";

}  // namespace

TEST_CASE("validate exit codes") {
  auto ok = run_cli({"validate", "--grammar", "grammars/plus.cfg", "--input", "a+d"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.lines.back()["accepted"] == true);
  auto bad = run_cli({"validate", "--grammar", "grammars/plus.cfg", "--input", "a+a"});
  CHECK(bad.code == cli::kReject);
  CHECK(bad.lines.back()["failed_at"] == 2);
  CHECK(run_cli({"validate", "--grammar", "grammars/json.cfg", "--input", "{\"k\":[1,2]}"}).code == cli::kOk);
  CHECK(run_cli({"validate", "--grammar", "grammars/ab_left.cfg", "--start", "A", "--input", "aaa"}).code == cli::kOk);
}

TEST_CASE("input errors exit with 2") {
  CHECK(run_cli({"validate", "--grammar", "grammars/missing.cfg", "--input", "x"}).code == cli::kInputError);
  CHECK(run_cli({"validate", "--input", "x"}).code == cli::kInputError);
  CHECK(run_cli({"mask", "--grammar", "grammars/plus.cfg", "--vocab", "grammars/plus.cfg"}).code == cli::kInputError);
  CHECK(run_cli({"validate", "--grammar", "grammars/plus.cfg", "--start", "Q", "--input", "x"}).code == cli::kInputError);
  CHECK(run_cli({"frobnicate"}).code == cli::kInputError);
}

TEST_CASE("mask output agrees with the brute-force mask") {
  auto g = fixture::bundled("plus.cfg");
  auto v = std::make_shared<const Vocabulary>(Vocabulary::load(fixture::path(kVocab)));
  for (const char* prefix : {"", "a", "a+", "c+b"}) {
    CAPTURE(prefix);
    auto r = run_cli({"mask", "--grammar", "grammars/plus.cfg", "--vocab", kVocab, "--prefix", prefix});
    Engine e(g, EngineOptions{false});
    REQUIRE(e.accept_bytes(prefix));
    auto expected = oracle::brute_force_mask(e, *v);
    REQUIRE(r.code == cli::kOk);
    CHECK(r.lines.back()["allowed"] == expected.count());
    CHECK(r.lines.back()["eos"] == expected.test(v->eos_id()));
  }
  auto bad = run_cli({"mask", "--grammar", "grammars/plus.cfg", "--vocab", kVocab, "--prefix", "a+x"});
  CHECK(bad.code == cli::kInvalidPrefix);
  CHECK(bad.lines.back()["position"] == 2);
}

TEST_CASE("decode is deterministic and closes the loop") {
  const std::vector<std::string> args{"decode", "--grammar", "grammars/json.cfg", "--vocab", kVocab, "--seed", "7"};
  auto a = run_cli(args);
  auto b = run_cli(args);
  REQUIRE(a.code == cli::kOk);
  CHECK(a.lines == b.lines);
  const auto& last = a.lines.back();
  CHECK(last["accepted"] == true);
  auto again = run_cli({"validate", "--grammar", "grammars/json.cfg", "--input", last["output"].get<std::string>()});
  CHECK(again.code == cli::kOk);
  CHECK_FALSE(run_cli({"decode", "--grammar", "grammars/json.cfg", "--vocab", kVocab, "--seed", "8"}).lines == a.lines);
}

TEST_CASE("decode with zero steps stops immediately") {
  auto r = run_cli({"decode", "--grammar", "grammars/json.cfg", "--vocab", kVocab, "--max-steps", "0"});
  REQUIRE(r.lines.size() == 1);
  CHECK(r.lines[0]["status"] == "max_steps");
  CHECK(r.lines[0]["steps"] == 0);
  CHECK(r.code == cli::kDeadEnd);
}

TEST_CASE("live state without pruning is never smaller") {
  for (const char* seed : {"1", "2", "3"}) {
    std::vector<std::string> args{"decode", "--grammar", "grammars/json.cfg", "--vocab", kVocab, "--seed", seed};
    auto pruned = run_cli(args);
    args.push_back("--no-prune");
    auto full = run_cli(args);
    REQUIRE(pruned.lines.size() == full.lines.size());
    for (std::size_t i = 0; i + 1 < pruned.lines.size(); ++i) {
      CHECK(pruned.lines[i]["token"] == full.lines[i]["token"]);
      CHECK(pruned.lines[i]["live_items"].get<int>() <= full.lines[i]["live_items"].get<int>());
    }
  }
}

TEST_CASE("bench records and hit rate growth") {
  auto fields = {"config",          "repeats",        "masks",      "seconds",    "masks_per_second", "mean_trials",
                 "mean_live_items", "max_live_items", "cache_hits", "cache_misses", "hit_rate"};
  auto one = run_cli({"bench", "--grammar", "grammars/json.cfg", "--vocab", kVocab, "--repeats", "1"});
  REQUIRE(one.code == cli::kOk);
  for (const char* f : fields) CHECK(one.lines.back().contains(f));
  auto ten = run_cli({"bench", "--grammar", "grammars/json.cfg", "--vocab", kVocab, "--repeats", "10"});
  CHECK(ten.lines.back()["hit_rate"].get<double>() >= one.lines.back()["hit_rate"].get<double>());

  auto ladder = run_cli({"bench", "--grammar", "grammars/plus.cfg", "--vocab", kVocab, "--all-configs", "--self-check"});
  REQUIRE(ladder.code == cli::kOk);
  CHECK(ladder.lines.size() == 7);
  CHECK(ladder.lines.back()["self_check"] == "pass");
}

TEST_CASE("analyze reports each transformation stage") {
  auto r = run_cli({"analyze", "--grammar", "grammars/nullable.cfg"});
  REQUIRE(r.code == cli::kOk);
  const auto& rec = r.lines.back();
  CHECK(rec["nullable"] == json::array({"A", "B"}));
  CHECK(rec["remove_useless"]["removed_productions"] == 1);
  for (const auto& p : rec["eliminate_nullables"]["productions_list"]) CHECK(p.get<std::string>().find("\"\"") == std::string::npos);

  auto left = run_cli({"analyze", "--grammar", "grammars/ab_left.cfg", "--start", "A"});
  CHECK(left.lines.back()["hrr"] == json::parse(R"([{"production":"B ::= \"a\"","form":"A->c"}])"));
}
