// Acceptance gate: runs every criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>

#include "simlab/harness.hpp"

int main(int argc, char** argv) {
    simlab::VerifyOptions opt;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--quick") {
            opt.quick = true;
        } else if (arg == "--seed" && i + 1 < argc) {
            opt.master_seed = std::strtoull(argv[++i], nullptr, 10);
        } else if (arg == "--out" && i + 1 < argc) {
            opt.out_dir = argv[++i];
        } else if (arg == "--criterion" && i + 1 < argc) {
            opt.only.push_back(std::atoi(argv[++i]));
        } else {
            std::fprintf(stderr,
                         "usage: %s [--quick] [--seed N] [--out DIR] "
                         "[--criterion N]...\n",
                         argv[0]);
            return 2;
        }
    }
    const auto outcomes = simlab::verify_acceptance(opt, std::cout);
    int failures = 0;
    for (const auto& o : outcomes)
        if (!o.pass) ++failures;
    return failures;
}
