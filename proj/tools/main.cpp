#include <string>
#include <vector>

#include "nct/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return nct::cli::main_entry(args);
}
