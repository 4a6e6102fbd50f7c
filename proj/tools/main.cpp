// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "baggagedet/app/cli.hpp"

int main(int argc, char** argv) { return baggagedet::app::run_cli(argc, argv, std::cout, std::cerr); }
