#include <iostream>

#include "ejoin/cli.hpp"

int main(int argc, char** argv) { return ejoin::cli::run(argc, argv, std::cout, std::cerr); }
