#include <iostream>

#include "pelab/cli.hpp"

int main(int argc, char** argv) { return pelab::cli::run(argc, argv, std::cout, std::cerr); }
