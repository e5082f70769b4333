#include "centrank/cli.hpp"

int main(int argc, char** argv) { return centrank::run_cli(argc, argv); }
