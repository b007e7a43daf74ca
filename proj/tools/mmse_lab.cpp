#include <iostream>

#include "mmse/cli.hpp"

int main(int argc, char** argv) { return mmse::cli::run(argc, argv, std::cout, std::cerr); }
