// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "zkd/cli.hpp"

int main(int argc, char** argv) { return zkd::cli::run(argc, argv, std::cout, std::cerr); }
