#pragma once

#include <iosfwd>

namespace perplex::cli {

// Parses argv, runs one subcommand and commits its outputs.
// Returns 0 on success, 1 on I/O or format errors, 2 on invalid parameters.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace perplex::cli
