#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eoren::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs one command line (without the program name). Diagnostics go to
/// `err`, reports to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);

}  // namespace eoren::cli
