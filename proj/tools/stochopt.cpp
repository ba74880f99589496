#include "stochopt/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return stochopt::cli::run_cli(argc, argv, std::cout, std::cerr);
}
