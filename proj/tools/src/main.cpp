#include "reits/cli/commands.hpp"

int main(int argc, char** argv) { return reits::cli::run(argc, argv); }
