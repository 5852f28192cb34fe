#include "cylgeo/cli.hpp"

int main(int argc, char** argv) { return cylgeo::run_cli(argc, argv); }
