#include <iostream>
#include <string>
#include <vector>

#include "antenna/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return antenna::cli::main_entry(args, std::cout, std::cerr);
}
