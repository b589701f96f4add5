#include <iostream>

#include "gwsus/cli.hpp"

int main(int argc, char** argv) { return gwsus::cli::main_entry(argc, argv, std::cout, std::cerr); }
