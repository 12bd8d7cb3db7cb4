#include "activelr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return activelr::run_cli(argc, argv, std::cout, std::cerr); }
