#include <iostream>

#include "seqprobe/cli/cli.hpp"

int main(int argc, char** argv) {
  return seqprobe::cli::run({argv + 1, argv + argc}, std::cin, std::cout, std::cerr);
}
