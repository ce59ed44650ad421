#include "lt/cli.hpp"

int main(int argc, char** argv) { return lt::run_cli(argc, argv); }
