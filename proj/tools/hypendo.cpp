#include "hypendo/cli.hpp"

int main(int argc, char** argv) { return hypendo::cli::run(argc, argv); }
