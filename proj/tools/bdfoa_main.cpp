#include "bdfoa/cli.hpp"

int main(int argc, char** argv) { return bdfoa::run_cli(argc, argv); }
