#include <iostream>

#include "vosteer/cli.hpp"

int main(int argc, char** argv) { return vosteer::cli::run(argc, argv, std::cout, std::cerr); }
