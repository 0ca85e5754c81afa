#include <iostream>

#include "vscope/cli.hpp"

int main(int argc, char** argv) { return vscope::run_cli(argc, argv, std::cout, std::cerr); }
