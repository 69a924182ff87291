#include <iostream>

#include "vlnaug/cli.hpp"

int main(int argc, char** argv) {
    return vlnaug::cli::run(argc, argv, std::cout, std::cerr);
}
