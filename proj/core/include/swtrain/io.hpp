#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace swtrain::io {

// Whole file as bytes. Throws Error{kIo}.
std::string read_file(const std::filesystem::path& path);
// Writes via a sibling temp file and rename. Throws Error{kIo}.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Lines without their terminators; a trailing newline does not add an empty line.
std::vector<std::string_view> split_lines(std::string_view text);

}  // namespace swtrain::io
