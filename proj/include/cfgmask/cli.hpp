#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfgmask/decoder.hpp"

namespace cfgmask::cli {

enum ExitCode : int { kOk = 0, kReject = 1, kInputError = 2, kInvalidPrefix = 3, kDeadEnd = 4 };

struct Options {
  std::string grammar_path;
  std::string vocab_path;
  std::optional<std::string> start;
  std::uint64_t seed = 0;
  std::uint64_t max_steps = 256;
  std::uint32_t repeats = 1;
  /// validate input, or mask prefix
  std::string input;
  bool prune = true;
  bool ci_cache = true;
  bool trie = true;
  bool state_cache = true;
  bool serial = false;
  /// bench: run the standard ablation ladder instead of one configuration
  bool all_configs = false;
  /// bench: compare every mask against a fresh all-off computation
  bool self_check = false;

  DecoderOptions decoder_options() const;
};

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err);
int cmd_mask(const Options& o, std::ostream& out, std::ostream& err);
int cmd_decode(const Options& o, std::ostream& out, std::ostream& err);
int cmd_bench(const Options& o, std::ostream& out, std::ostream& err);
int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err);

/// Full command line: `<subcommand> [flags]`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cfgmask::cli
