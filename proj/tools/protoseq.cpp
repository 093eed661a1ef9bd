// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "protoseq/cli.hpp"

int main(int argc, char **argv) {
  return protoseq::run_command(argc, argv, std::cout, std::cerr);
}
