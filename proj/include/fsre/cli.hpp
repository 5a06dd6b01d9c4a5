#pragma once

#include <string>
#include <vector>

#include "fsre/types.hpp"

namespace fsre {

// Process exit codes, one per error category plus usage mistakes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitInternal = 5;

inline constexpr const char* kCliVersion = "0.1.0";

int exit_code_for(ErrorCategory category);

// Full command-line entry point; args exclude the program name. Parses a
// subcommand, reports failures on stderr, and returns the process exit code,
// so tests can drive the binary in-process.
int cli_main(const std::vector<std::string>& args);

}  // namespace fsre
