#include "ivtrial/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ivtrial::run_cli(argc, argv, std::cout, std::cerr); }
