#include <iostream>

#include "structpred/cli/cli.hpp"

int main(int argc, char** argv) { return structpred::cli::run(argc, argv, std::cout, std::cerr); }
