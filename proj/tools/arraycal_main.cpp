#include <unistd.h>

#include <iostream>
#include <string>
#include <vector>

#include "arraycal/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return arraycal::cli::run(args, std::cout, std::cerr, isatty(STDOUT_FILENO) != 0);
}
