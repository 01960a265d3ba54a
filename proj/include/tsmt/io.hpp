#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tsmt::io {

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal that round-trips the double.
std::string format_double(double v);

/// Parses a full decimal string; throws std::invalid_argument naming `what`.
double parse_double(std::string_view text, std::string_view what);

}  // namespace tsmt::io
