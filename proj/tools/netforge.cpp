#include <iostream>

#include "netforge/cli.hpp"

int main(int argc, char** argv) { return netforge::cli::run(argc, argv, std::cout, std::cerr); }
