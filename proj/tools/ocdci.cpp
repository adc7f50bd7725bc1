#include "ocd/cli.hpp"

int main(int argc, char** argv) { return ocd::cli_main(argc, argv); }
