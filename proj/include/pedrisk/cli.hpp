// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace pedrisk {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

// Entry point of the pedrisk tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv);
// Same, with args excluding the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace pedrisk
