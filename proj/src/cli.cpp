#include "cfgmask/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cfgmask/transform.hpp"

namespace cfgmask::cli {

using nlohmann::ordered_json;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(std::ostream& out, const ordered_json& record) {
  out << record.dump(-1, ' ', false, ordered_json::error_handler_t::replace) << '\n';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Grammar load_raw_grammar(const Options& o) {
  if (o.grammar_path.empty()) throw InputError("--grammar is required");
  auto text = read_file(o.grammar_path);
  return o.start ? parse_grammar(text, *o.start) : parse_grammar(text);
}

std::shared_ptr<const Grammar> load_grammar(const Options& o) {
  return std::make_shared<const Grammar>(prepare_grammar(load_raw_grammar(o)));
}

std::shared_ptr<const Vocabulary> load_vocab(const Options& o) {
  if (o.vocab_path.empty()) throw InputError("--vocab is required");
  return std::make_shared<const Vocabulary>(Vocabulary::from_json(read_file(o.vocab_path)));
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const GrammarError& e) {
    err << "grammar error";
    if (e.line() > 0) err << " at " << e.line() << ":" << e.column();
    err << ": " << e.what() << '\n';
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const nlohmann::json::exception& e) {
    err << "vocabulary error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
  }
  return kInputError;
}

ordered_json grammar_counts(const Grammar& g) {
  return {{"nonterminals", g.nonterminal_count()},
          {"terminals", g.terminal_count()},
          {"productions", g.production_count()}};
}

std::string config_name(const DecoderOptions& d) {
  std::string name;
  if (!d.prune) name += "no-prune+";
  if (!d.ci_cache) name += "no-ci-cache+";
  if (!d.trie) name += "no-trie+";
  if (!d.state_cache) name += "no-state-cache+";
  if (name.empty()) return "full";
  name.pop_back();
  return name;
}

// ---------------------------------------------------------------- decoding

struct StepRecord {
  std::uint64_t step = 0;
  std::string fingerprint;
  std::size_t allowed = 0;
  std::uint32_t token = 0;
  bool cache_hit = false;
  std::size_t live_items = 0;
  std::uint64_t trials = 0;
};

struct DecodeRun {
  std::string output;
  std::string status;
  int code = kOk;
  std::uint64_t masks = 0;
  std::vector<StepRecord> steps;
  std::vector<TokenMask> kept;
};

/// Seeded sampler: EOS with probability 0.1 when legal (always when it is
/// the only choice), otherwise uniform over the allowed non-EOS tokens.
DecodeRun run_decode(Decoder& d, std::uint64_t seed, std::uint64_t max_steps, bool keep_masks) {
  DecodeRun run;
  std::mt19937_64 rng(seed);
  const auto eos = d.vocabulary().eos_id();
  std::vector<std::uint32_t> allowed;
  for (std::uint64_t step = 0;; ++step) {
    if (step == max_steps) {
      run.status = "max_steps";
      run.code = d.engine().is_accepting() ? kOk : kDeadEnd;
      break;
    }
    auto m = d.mask();
    ++run.masks;
    if (keep_masks) run.kept.push_back(m.mask);
    if (m.dead_end) {
      run.status = "dead_end";
      run.code = kDeadEnd;
      break;
    }
    allowed.clear();
    m.mask.for_each_set([&](std::size_t id) {
      if (id != eos) allowed.push_back(static_cast<std::uint32_t>(id));
    });
    const bool eos_legal = m.mask.test(eos);
    std::uint32_t choice;
    if (eos_legal && (allowed.empty() || std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.1)) {
      choice = eos;
    } else {
      choice = allowed[std::uniform_int_distribution<std::size_t>(0, allowed.size() - 1)(rng)];
    }
    StepRecord rec{step, m.fingerprint.hex(), m.mask.count(), choice, m.cache_hit, d.engine().live_item_count(),
                   m.stats.trial_parses};
    if (!d.accept_token(choice)) throw std::logic_error("token allowed by the mask was rejected");
    run.steps.push_back(std::move(rec));
    if (choice == eos) {
      run.status = "eos";
      run.code = kOk;
      break;
    }
    run.output += d.vocabulary().token(choice);
  }
  return run;
}

ordered_json step_json(const StepRecord& r) {
  return {{"step", r.step},       {"fingerprint", r.fingerprint}, {"allowed", r.allowed},
          {"token", r.token},     {"cache_hit", r.cache_hit},     {"live_items", r.live_items},
          {"trials", r.trials}};
}

}  // namespace

DecoderOptions Options::decoder_options() const {
  return DecoderOptions{prune, ci_cache, trie, state_cache, serial ? Parallelism::serial : Parallelism::openmp};
}

// ---------------------------------------------------------------- commands

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto g = load_grammar(o);
    Engine engine(g, EngineOptions{o.prune});
    ordered_json live = ordered_json::array();
    live.push_back(engine.live_item_count());
    std::optional<std::size_t> failed_at;
    for (std::size_t i = 0; i < o.input.size(); ++i) {
      if (!engine.accept_byte(static_cast<std::uint8_t>(o.input[i]))) {
        failed_at = i;
        break;
      }
      live.push_back(engine.live_item_count());
    }
    const bool accepted = !failed_at && engine.is_accepting();
    ordered_json rec{{"accepted", accepted}, {"bytes", o.input.size()}};
    rec["failed_at"] = failed_at ? ordered_json(*failed_at) : ordered_json(nullptr);
    rec["live_items"] = std::move(live);
    emit(out, rec);
    return accepted ? kOk : kReject;
  });
}

int cmd_mask(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto g = load_grammar(o);
    auto v = load_vocab(o);
    Decoder d(g, v, o.decoder_options());
    for (std::size_t i = 0; i < o.input.size(); ++i) {
      if (!d.accept_bytes(o.input.substr(i, 1))) {
        err << "invalid prefix: byte " << i << " rejected\n";
        emit(out, {{"error", "invalid prefix"}, {"position", i}});
        return static_cast<int>(kInvalidPrefix);
      }
    }
    auto m = d.mask();
    emit(out, {{"prefix_bytes", o.input.size()},
               {"mask", m.mask.to_hex()},
               {"allowed", m.mask.count()},
               {"eos", m.mask.test(v->eos_id())},
               {"dead_end", m.dead_end},
               {"fingerprint", m.fingerprint.hex()}});
    return m.dead_end ? static_cast<int>(kDeadEnd) : static_cast<int>(kOk);
  });
}

int cmd_decode(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto g = load_grammar(o);
    auto v = load_vocab(o);
    Decoder d(g, v, o.decoder_options());
    auto run = run_decode(d, o.seed, o.max_steps, false);
    for (const auto& s : run.steps) emit(out, step_json(s));
    // Closed loop: re-validate with an independent unpruned engine.
    Engine check(g, EngineOptions{false});
    bool prefix_ok = check.accept_bytes(run.output);
    bool accepted = prefix_ok && check.is_accepting();
    if (!prefix_ok || (run.status == "eos" && !accepted))
      throw std::logic_error("decoded output failed re-validation");
    emit(out, {{"status", run.status},
               {"steps", run.steps.size()},
               {"output", run.output},
               {"output_base64", base64_encode(run.output)},
               {"accepted", accepted}});
    if (run.code == kDeadEnd) err << "decode stopped without an accepting state (" << run.status << ")\n";
    return run.code;
  });
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto g = load_grammar(o);
    auto v = load_vocab(o);
    std::vector<DecoderOptions> configs;
    if (o.all_configs) {
      auto par = o.serial ? Parallelism::serial : Parallelism::openmp;
      configs = {{true, true, true, true, par},   {true, true, false, true, par},   {true, true, true, false, par},
                 {true, false, true, true, par},  {false, true, true, true, par},   {false, false, true, true, par}};
    } else {
      configs = {o.decoder_options()};
    }
    std::vector<std::vector<TokenMask>> all_masks;
    for (const auto& cfg : configs) {
      auto tokens = cfg.ci_cache ? std::make_shared<TokenCache>(g, v, cfg.parallelism) : nullptr;
      auto states = cfg.state_cache ? std::make_shared<MaskCache>() : nullptr;
      std::uint64_t masks = 0, trials = 0, live_sum = 0, live_max = 0;
      std::vector<TokenMask> kept;
      double seconds = 0;
      for (std::uint32_t r = 0; r < o.repeats; ++r) {
        Decoder d(g, v, cfg, tokens, states);
        auto t0 = std::chrono::steady_clock::now();
        auto run = run_decode(d, o.seed + r, o.max_steps, o.self_check);
        seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        masks += run.masks;
        for (const auto& s : run.steps) {
          trials += s.trials;
          live_sum += s.live_items;
          live_max = std::max<std::uint64_t>(live_max, s.live_items);
        }
        for (auto& m : run.kept) kept.push_back(std::move(m));
      }
      const std::uint64_t hits = states ? states->hits() : 0;
      const std::uint64_t misses = states ? states->misses() : masks;
      emit(out, {{"config", config_name(cfg)},
                 {"repeats", o.repeats},
                 {"masks", masks},
                 {"seconds", seconds},
                 {"masks_per_second", seconds > 0 ? static_cast<double>(masks) / seconds : 0.0},
                 {"mean_trials", masks ? static_cast<double>(trials) / static_cast<double>(masks) : 0.0},
                 {"mean_live_items", masks ? static_cast<double>(live_sum) / static_cast<double>(masks) : 0.0},
                 {"max_live_items", live_max},
                 {"cache_hits", hits},
                 {"cache_misses", misses},
                 {"hit_rate", hits + misses ? static_cast<double>(hits) / static_cast<double>(hits + misses) : 0.0}});
      if (o.self_check) all_masks.push_back(std::move(kept));
    }
    if (!o.self_check) return static_cast<int>(kOk);

    // Reference: every optimization off, serial kernels.
    DecoderOptions ref_cfg{false, false, false, false, Parallelism::serial};
    std::vector<TokenMask> reference;
    for (std::uint32_t r = 0; r < o.repeats; ++r) {
      Decoder d(g, v, ref_cfg);
      auto run = run_decode(d, o.seed + r, o.max_steps, true);
      for (auto& m : run.kept) reference.push_back(std::move(m));
    }
    bool same = true;
    for (const auto& masks : all_masks) same = same && masks == reference;
    emit(out, {{"self_check", same ? "pass" : "fail"}, {"masks_compared", reference.size()}});
    if (!same) err << "self-check failed: masks differ between configurations\n";
    return same ? static_cast<int>(kOk) : static_cast<int>(kReject);
  });
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Grammar input = load_raw_grammar(o);
    ordered_json rec;
    rec["input"] = grammar_counts(input);

    Grammar useful = remove_useless_rules(input);
    auto useless = grammar_counts(useful);
    useless["removed_productions"] = input.production_count() - useful.production_count();
    rec["remove_useless"] = std::move(useless);

    auto nullable = nullable_nonterminals(useful);
    ordered_json null_names = ordered_json::array();
    for (std::uint32_t nt = 0; nt < useful.nonterminal_count(); ++nt)
      if (nullable[nt]) null_names.push_back(useful.name(nt));
    rec["nullable"] = std::move(null_names);

    Grammar expanded = eliminate_nullables(useful);
    auto expansion = grammar_counts(expanded);
    ordered_json prods = ordered_json::array();
    for (std::uint32_t p = 0; p < expanded.production_count(); ++p) prods.push_back(expanded.production_to_string(p));
    expansion["productions_list"] = std::move(prods);
    rec["eliminate_nullables"] = std::move(expansion);

    rec["prepared"] = grammar_counts(prepare_grammar(input));

    ordered_json hrr = ordered_json::array();
    for (const auto& r : detect_hrr_rules(input))
      hrr.push_back({{"production", input.production_to_string(r.production)}, {"form", to_string(r.form)}});
    rec["hrr"] = std::move(hrr);
    emit(out, rec);
    return static_cast<int>(kOk);
  });
}

// ---------------------------------------------------------------- parsing

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grammar-constrained token masks"};
  app.require_subcommand(1);
  Options o;
  std::string start;
  std::string input_file;
  bool no_prune = false, no_ci = false, no_trie = false, no_state = false;

  auto common = [&](CLI::App* sub, bool vocab) {
    sub->add_option("--grammar", o.grammar_path, "grammar file")->required();
    if (vocab) sub->add_option("--vocab", o.vocab_path, "vocabulary JSON")->required();
    sub->add_option("--start", start, "start nonterminal");
    sub->add_option("--seed", o.seed);
    sub->add_option("--max-steps", o.max_steps);
    sub->add_flag("--no-prune", no_prune);
    sub->add_flag("--no-ci-cache", no_ci);
    sub->add_flag("--no-trie", no_trie);
    sub->add_flag("--no-state-cache", no_state);
    sub->add_flag("--serial", o.serial, "serial reference kernels");
  };

  auto* validate = app.add_subcommand("validate", "check membership of an input");
  common(validate, false);
  auto* validate_in = validate->add_option("--input", o.input);
  validate->add_option("--input-file", input_file)->excludes(validate_in);

  auto* mask = app.add_subcommand("mask", "emit the mask after a prefix");
  common(mask, true);
  auto* mask_in = mask->add_option("--prefix", o.input);
  mask->add_option("--prefix-file", input_file)->excludes(mask_in);

  auto* decode = app.add_subcommand("decode", "seeded random constrained decode");
  common(decode, true);

  auto* bench = app.add_subcommand("bench", "throughput and cache statistics");
  common(bench, true);
  bench->add_option("--repeats", o.repeats)->check(CLI::PositiveNumber);
  bench->add_flag("--all-configs", o.all_configs);
  bench->add_flag("--self-check", o.self_check);

  auto* analyze = app.add_subcommand("analyze", "grammar transformation report");
  analyze->add_option("--grammar", o.grammar_path)->required();
  analyze->add_option("--start", start);

  std::vector<const char*> argv{"cfgmask"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? static_cast<int>(kOk) : static_cast<int>(kInputError);
  }

  if (!start.empty()) o.start = start;
  o.prune = !no_prune;
  o.ci_cache = !no_ci;
  o.trie = !no_trie;
  o.state_cache = !no_state;
  if (!input_file.empty()) {
    int code = guarded(err, [&] {
      o.input = read_file(input_file);
      return static_cast<int>(kOk);
    });
    if (code != kOk) return code;
  }

  if (validate->parsed()) return cmd_validate(o, out, err);
  if (mask->parsed()) return cmd_mask(o, out, err);
  if (decode->parsed()) return cmd_decode(o, out, err);
  if (bench->parsed()) return cmd_bench(o, out, err);
  return cmd_analyze(o, out, err);
}

}  // namespace cfgmask::cli
