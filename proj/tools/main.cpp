#include "infoeff/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return infoeff::run_cli(argc, argv, std::cout, std::cerr); }
