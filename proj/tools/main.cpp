#include <iostream>

#include "transgen/cli.hpp"

int main(int argc, char** argv) {
  return transgen::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
