#include "mcbif/cli.hpp"

int main(int argc, char** argv) { return mcbif::run_cli(argc, argv); }
