#include "crown/cli.hpp"

int main(int argc, char** argv) { return crown::cli::run(argc, argv); }
