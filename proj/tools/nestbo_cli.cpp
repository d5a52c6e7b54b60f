#include <iostream>

#include "nestbo/cli.hpp"

int main(int argc, char** argv) { return nestbo::run_cli(argc, argv, std::cout, std::cerr); }
