#include <iostream>

#include "lorp/cli.hpp"

int main(int argc, char** argv) { return lorp::run_cli(argc, argv, std::cout, std::cerr); }
