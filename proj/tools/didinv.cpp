#include <string>
#include <vector>

#include "didinv/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return didinv::cli::run(args);
}
