#include <iostream>

#include "gendisc/cli.hpp"

int main(int argc, char** argv) { return gendisc::cli::main(argc, argv, std::cout, std::cerr); }
