#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace eoren {

/// Whole-file binary read; throws IoError when the file cannot be opened.
std::vector<unsigned char> read_binary_file(const std::filesystem::path& path);

/// Writes `path` via a sibling temporary file and a rename, so readers never
/// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<unsigned char>& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace eoren
