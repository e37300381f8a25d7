#include "quadray/cli_io.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return quadray::run_command(argc, argv, std::cout, std::cerr);
}
