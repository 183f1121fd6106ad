#pragma once

#include <iosfwd>

namespace flowfill::cli {

enum ExitCode : int {
    kOk = 0,
    kInvalidFlow = 1,
    kBindFailure = 2,
    kTransportError = 3,
    kHttp4xx = 4,
    kHttp5xx = 5,
};

// Entry point of the `flowfill` tool: run, check, send, stub, scenario.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace flowfill::cli
