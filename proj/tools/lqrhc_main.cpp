#include <iostream>

#include "lqrhc/cli.hpp"

int main(int argc, char** argv) {
  return lqrhc::cli::main_entry(argc, argv, std::cout, std::cerr);
}
