#pragma once

namespace tanet::cli {

// Full command-line entry point: subcommand parsing, dispatch, and the
// error contract. Returns the process exit code; failures print one
// machine-parsable "error: <category>: <message>" line on stderr and map
// the category to its stable code (argument/shape 2, not-found 3, format 4,
// io 5, everything else 1).
int run_main(int argc, const char* const* argv);

} // namespace tanet::cli
