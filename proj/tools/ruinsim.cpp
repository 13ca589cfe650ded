#include <iostream>

#include "ruinsim/cli.hpp"

int main(int argc, char** argv) { return ruinsim::run_cli(argc, argv, std::cout, std::cerr); }
