#include "valnet/cli.hpp"

int main(int argc, char** argv) { return valnet::run_cli(argc, argv); }
