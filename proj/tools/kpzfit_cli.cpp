#include <iostream>

#include "kpzfit/cli.hpp"

int main(int argc, char** argv) { return kpzfit::cli::run(argc, argv, std::cout, std::cerr); }
