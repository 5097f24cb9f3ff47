#include "nsp/cli.hpp"

int main(int argc, char** argv) { return nsp::cli_main(argc, argv); }
