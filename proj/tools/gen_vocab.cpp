// Writes a deterministic synthetic vocabulary file.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "cfgmask/vocabulary.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic vocabulary generator"};
  std::uint32_t size = 512;
  std::uint64_t seed = 1;
  std::vector<std::string> sample_files;
  std::string out_path;
  app.add_option("--size", size)->check(CLI::Range(2u, 1u << 20));
  app.add_option("--seed", seed);
  app.add_option("--samples", sample_files, "text files whose slices seed the multi-byte tokens");
  app.add_option("--out", out_path)->required();
  CLI11_PARSE(app, argc, argv);

  std::vector<std::string> samples;
  for (const auto& path : sample_files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      std::cerr << "cannot read " << path << '\n';
      return 2;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    samples.push_back(ss.str());
  }
  auto vocab = cfgmask::synthetic_vocabulary(size, seed, samples);
  std::ofstream out(out_path, std::ios::binary);
  out << vocab.to_json() << '\n';
  return out ? 0 : 2;
}
