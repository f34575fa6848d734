#include <iostream>

#include "ponlut/cli.hpp"

int main(int argc, char** argv) {
  return ponlut::run_cli(argc, argv, std::cout, std::cerr);
}
