#include "slicedim/cli.hpp"

int main(int argc, char** argv) { return slicedim::cli_main(argc, argv); }
