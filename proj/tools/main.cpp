#include "repsim/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return repsim::cli::main_entry(argc, argv, std::cout, std::cerr);
}
