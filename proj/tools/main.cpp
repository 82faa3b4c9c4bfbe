#include <string>
#include <vector>

#include "deepalign/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return deepalign::run_cli(args);
}
