#include <iostream>
#include <string>
#include <vector>

#include "hyperrank/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return hyperrank::run_cli(args, std::cout, std::cerr);
}
