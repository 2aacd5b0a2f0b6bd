#include <iostream>

#include "lyapunov/cli.hpp"

int main(int argc, char** argv) { return lyapunov::cli::run(argc, argv, std::cout, std::cerr); }
