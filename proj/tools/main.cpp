#include <iostream>

#include "flowfill/cli.hpp"

int main(int argc, char** argv) {
    return flowfill::cli::main(argc, argv, std::cout, std::cerr);
}
