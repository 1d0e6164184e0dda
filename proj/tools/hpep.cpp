#include "hpep/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return hpep::cli::run_cli(argc, argv, std::cout, std::cerr);
}
