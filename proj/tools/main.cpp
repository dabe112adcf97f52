#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "eoren/training.hpp"

int main(int argc, char** argv) {
  eoren::configure_allocator();
  std::vector<std::string> args(argv + 1, argv + argc);
  return eoren::cli::run_cli(args, std::cout, std::cerr);
}
