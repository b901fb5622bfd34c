#include "qosip/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return qosip::cli::main_entry(argc, argv, std::cout, std::cerr);
}
