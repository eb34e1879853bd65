#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sata::fs {

/// Writes to a sibling temporary file, flushes, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view bytes);

/// Whole-file read. Throws FormatError when the file cannot be opened.
std::string read_file(const std::filesystem::path& path);

void ensure_directory(const std::filesystem::path& dir);

}  // namespace sata::fs
