#include "ttrl/cli.hpp"

int main(int argc, char** argv) { return ttrl::cli::run(argc, argv); }
