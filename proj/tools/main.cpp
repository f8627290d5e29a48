#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return jsqd::cli::cli_main(argc, argv, std::cout, std::cerr); }
