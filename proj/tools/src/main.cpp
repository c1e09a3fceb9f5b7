#include <iostream>

#include "evoconv_cli/app.hpp"

int main(int argc, char** argv) { return evoconv::cli::run(argc, argv, std::cout, std::cerr); }
