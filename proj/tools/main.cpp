#include <string>
#include <vector>

#include "camref/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return camref::cli::run(args);
}
