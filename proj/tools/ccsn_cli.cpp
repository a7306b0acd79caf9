#include "ccsn/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ccsn::cli::run(argc, argv, std::cout, std::cerr); }
