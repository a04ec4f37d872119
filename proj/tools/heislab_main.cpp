#include "heislab/cli.hpp"

int main(int argc, char** argv) {
    return heislab::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
