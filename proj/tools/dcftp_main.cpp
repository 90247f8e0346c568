#include <iostream>

#include "dcftp/cli.hpp"

int main(int argc, char** argv) { return dcftp::run_cli(argc, argv, std::cout, std::cerr); }
