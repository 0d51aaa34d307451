#include <iostream>

#include "csslab/cli.hpp"

int main(int argc, char** argv) { return csslab::cli_main(argc, argv, std::cout, std::cerr); }
