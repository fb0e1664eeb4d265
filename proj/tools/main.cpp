#include <string>
#include <vector>

#include "cleanbench/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cleanbench::run_command(args);
}
