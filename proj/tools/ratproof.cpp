#include <iostream>
#include <string>
#include <vector>

#include "cli/app.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    bool wrote_file = false;
    const ratproof::cli::CommandResult result = ratproof::cli::run_cli(args, &wrote_file);
    if (!wrote_file) std::cout << result.output;
    std::cerr << result.diagnostics;
    return result.exit_code;
}
