#include <iostream>

#include "ecodrive/cli_io.hpp"

int main(int argc, char** argv) { return ecodrive::run_cli(argc, argv, std::cout, std::cerr); }
