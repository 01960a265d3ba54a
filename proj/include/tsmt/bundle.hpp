#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tsmt/numerics/array.hpp"

namespace tsmt::bundle {

struct NamedArray {
  std::string name;
  Array value;
};

/// Binary container: 8-byte magic, u64 little-endian header length, JSON
/// header, then float64 little-endian arrays. The header gains an "arrays"
/// index of {name, shape, offset}. Written atomically.
void write(const std::filesystem::path& path, std::string_view magic, nlohmann::json header,
           const std::vector<NamedArray>& arrays);

struct Contents {
  nlohmann::json header;
  std::vector<NamedArray> arrays;
};

/// Throws std::runtime_error naming the file on a bad magic, truncation or
/// malformed header.
Contents read(const std::filesystem::path& path, std::string_view magic);
/// Header only, arrays left unparsed.
nlohmann::json read_header(const std::filesystem::path& path, std::string_view magic);

}  // namespace tsmt::bundle
