#include "rdpca/cli.hpp"

int main(int argc, char** argv) { return rdpca::cli_main(argc, argv); }
