#include <iostream>

#include "flowkit/cli.hpp"

int main(int argc, char** argv) { return flowkit::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
