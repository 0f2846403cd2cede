#include <iostream>

#include "cpisnet/cli.hpp"

int main(int argc, char** argv) {
  return cpisnet::cli::run(argc, argv, std::cout, std::cerr);
}
