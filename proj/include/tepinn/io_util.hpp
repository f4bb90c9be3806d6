#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tepinn {

/// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Shortest decimal form of a double that parses back bit-exactly.
std::string format_double(double v);

}  // namespace tepinn
