#pragma once

#include <iosfwd>

namespace costdiag {

// Exit codes: 0 success, 2 configuration/usage errors, 1 anything else.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace costdiag
