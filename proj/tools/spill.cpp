#include "spill/cli.hpp"

int main(int argc, char** argv) { return spill::run_cli(argc, argv); }
