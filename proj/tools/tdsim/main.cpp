#include <iostream>

#include "tdsim/cli/run.hpp"

int main(int argc, char** argv) { return tdsim::cli::run(argc, argv, std::cout, std::cerr); }
