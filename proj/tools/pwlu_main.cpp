#include "pwlu/cli/config.hpp"

int main(int argc, char** argv) { return pwlu::cli::run_cli(argc, argv); }
