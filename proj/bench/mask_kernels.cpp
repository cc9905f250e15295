// Serial vs OpenMP timings for the two mask kernels: per-state token
// classification and a full mask pass over a set of JSON prefixes.

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cfgmask/earley.hpp"
#include "cfgmask/mask_engine.hpp"
#include "cfgmask/transform.hpp"
#include "cfgmask/vocabulary.hpp"

using namespace cfgmask;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
double seconds(int repeats, F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

const char* name(Parallelism p) { return p == Parallelism::serial ? "serial" : "openmp"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mask kernel benchmark"};
  std::string grammar_path = "grammars/json.cfg";
  std::string vocab_path = "data/json_vocab_1024.json";
  int repeats = 20;
  int threads = 0;
  app.add_option("--grammar", grammar_path);
  app.add_option("--vocab", vocab_path);
  app.add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "OpenMP threads, 0 keeps the runtime default");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  auto g = std::make_shared<const Grammar>(prepare_grammar(parse_grammar(slurp(grammar_path))));
  auto v = std::make_shared<const Vocabulary>(Vocabulary::load(vocab_path));
  std::printf("threads %d, vocab %u, terminals %zu\n", omp_get_max_threads(), v->size(), static_cast<std::size_t>(g->terminal_count()));

  for (auto p : {Parallelism::serial, Parallelism::openmp}) {
    double t = seconds(repeats, [&] {
      for (std::uint32_t id = 0; id < g->terminal_count(); ++id) {
        const auto& a = g->terminal(id).automaton;
        for (std::uint32_t s = 0; s < a.state_count(); ++s) classify_tokens(a, s, *v, p);
      }
    });
    std::printf("classify_all_states %-6s %10.3f ms\n", name(p), t * 1e3);
  }

  const std::vector<std::string> prefixes{"", "{", "{\"key", "{\"key\": [1, 2", "[true, {\"a\": nul", "{\"a\": {\"b\": \"c\"}, "};
  std::vector<Engine> states;
  for (const auto& prefix : prefixes) {
    Engine e(g);
    if (!e.accept_bytes(prefix)) {
      std::fprintf(stderr, "prefix rejected by grammar: %s\n", prefix.c_str());
      return 2;
    }
    states.push_back(std::move(e));
  }
  for (bool ci : {true, false}) {
    for (auto p : {Parallelism::serial, Parallelism::openmp}) {
      auto cache = std::make_shared<TokenCache>(g, v, p);
      cache->build_all();
      MaskComputer mc(v, cache, MaskOptions{ci, true, p});
      double t = seconds(repeats, [&] {
        for (const auto& e : states) {
          RejectedPrefixTrie trie;
          mc.compute(e, &trie);
        }
      });
      std::printf("mask_pass ci=%d %-6s %10.3f ms per mask\n", ci ? 1 : 0, name(p), t * 1e3 / states.size());
    }
  }
  return 0;
}
