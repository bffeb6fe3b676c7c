#include "twistcalc/cli.hpp"

int main(int argc, char** argv) { return twistcalc::run_cli(argc, argv); }
