#include "fimsel/cli.hpp"

int main(int argc, char** argv) { return fimsel::run_cli(argc, argv); }
