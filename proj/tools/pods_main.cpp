#include <iostream>

#include "pods/cli.hpp"

int main(int argc, char** argv) { return pods::run_cli(argc, argv, std::cout, std::cerr); }
