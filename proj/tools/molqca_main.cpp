#include <iostream>

#include "molqca/cli.hpp"

int main(int argc, char** argv) {
    return molqca::run_cli(argc, argv, std::cout, std::cerr);
}
