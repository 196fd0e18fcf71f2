#pragma once

namespace valnet {

// Entry point shared by the binary and the tests.
// Exit codes: 0 success, 1 usage error, 2 input error, 3 limit reached.
int run_cli(int argc, const char* const* argv);

}  // namespace valnet
