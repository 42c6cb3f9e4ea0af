#include "kplab/cli.hpp"

int main(int argc, char** argv) { return kplab::cli_main(argc, argv); }
