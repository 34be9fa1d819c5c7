#include <iostream>

#include "cqm/cli.hpp"

int main(int argc, char** argv) { return cqm::run_cli(argc, argv, std::cout, std::cerr); }
