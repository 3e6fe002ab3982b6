#include "stochgeom/cli.hpp"

int main(int argc, char** argv) { return stochgeom::cli::run(argc, argv); }
