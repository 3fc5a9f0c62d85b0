#include "ltpolicy/cli.hpp"

int main(int argc, char** argv) { return ltp::cli::run_cli(argc, argv); }
