// laplearn: config-driven front end for the estimation pipeline.
// Subcommands: gen, fit, sweep, path, diagnose, baseline.
#include <iostream>

int main() {
    std::cout << "placeholder\n";
    return 0;
}
