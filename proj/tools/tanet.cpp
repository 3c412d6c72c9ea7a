#include "tanet/cli/main.hpp"

int main(int argc, char** argv) { return tanet::cli::run_main(argc, argv); }
