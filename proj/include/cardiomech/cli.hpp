#pragma once

namespace cardiomech {

// Entry point behind the cardiomech binary; callable from tests.
// Exit codes: 0 success, 1 validation/usage error, 2 numerical failure.
int run_cli(int argc, const char* const* argv);

} // namespace cardiomech
