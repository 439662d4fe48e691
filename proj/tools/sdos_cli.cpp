#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "sdos/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const sdos::cli::RunConfig config = sdos::cli::parse_args(args);
        return sdos::cli::run_sweep(config);
    } catch (const sdos::cli::UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
