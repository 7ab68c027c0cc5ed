#include "lowtail/cli.hpp"

int main(int argc, char** argv) { return lowtail::cli::run(argc, argv); }
