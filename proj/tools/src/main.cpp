#include <iostream>

#include "impact_game_cli/cli.hpp"

int main(int argc, char** argv) { return impact::cli::run(argc, argv, std::cout, std::cerr); }
