#pragma once

#include <iosfwd>

namespace dcftp {

/// Entry point of the `dcftp` tool: validate, sample, analyze, table1,
/// baseline. Returns the process exit code. DCFTP_LOG_LEVEL (quiet, info,
/// debug) controls progress messages on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dcftp
