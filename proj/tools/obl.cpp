// Command-line experiment driver; subcommands are wired in cli_impl.hpp.
#include "cli_impl.hpp"

int main(int argc, char** argv) { return obl::cli_main(argc, argv); }
