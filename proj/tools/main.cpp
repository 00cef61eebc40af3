#include <iostream>

#include "fluortraj/cli.hpp"

int main(int argc, char** argv) { return fluortraj::run_cli(argc, argv, std::cout, std::cerr); }
