#include <iostream>
#include <string>
#include <vector>

#include "cfgmask/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cfgmask::cli::run(args, std::cout, std::cerr);
}
