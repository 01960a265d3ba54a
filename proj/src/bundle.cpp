#include "tsmt/bundle.hpp"

#include <bit>
#include <cstdint>
#include <stdexcept>

#include "tsmt/io.hpp"

namespace tsmt::bundle {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

struct Raw {
  nlohmann::json header;
  std::string payload;
};

Raw split(const std::filesystem::path& path, std::string_view magic) {
  std::string raw;
  try {
    raw = io::read_file(path);
  } catch (const std::exception& e) {
    throw std::runtime_error(e.what());
  }
  if (raw.size() < 16 || std::string_view(raw).substr(0, 8) != magic) {
    throw std::runtime_error(path.string() + " is not a " + std::string(magic) + " file");
  }
  const std::uint64_t len = get_u64(raw, 8);
  if (len > raw.size() - 16) throw std::runtime_error("truncated header in " + path.string());
  Raw out;
  try {
    out.header = nlohmann::json::parse(raw.substr(16, len));
  } catch (const std::exception& e) {
    throw std::runtime_error("malformed header in " + path.string() + ": " + e.what());
  }
  out.payload = raw.substr(16 + len);
  return out;
}

}  // namespace

void write(const std::filesystem::path& path, std::string_view magic, nlohmann::json header,
           const std::vector<NamedArray>& arrays) {
  if (magic.size() != 8) throw std::invalid_argument("bundle: magic must be 8 bytes");
  nlohmann::json index = nlohmann::json::array();
  std::string payload;
  for (const NamedArray& a : arrays) {
    index.push_back({{"name", a.name}, {"shape", a.value.shape()}, {"offset", payload.size()}});
    for (double v : a.value.values()) put_u64(payload, std::bit_cast<std::uint64_t>(v));
  }
  header["arrays"] = std::move(index);
  const std::string text = header.dump(1);
  std::string out(magic);
  put_u64(out, text.size());
  out += text;
  out += payload;
  io::write_file_atomic(path, out);
}

nlohmann::json read_header(const std::filesystem::path& path, std::string_view magic) {
  return split(path, magic).header;
}

Contents read(const std::filesystem::path& path, std::string_view magic) {
  Raw raw = split(path, magic);
  Contents out;
  try {
    for (const auto& entry : raw.header.at("arrays")) {
      const std::string name = entry.at("name").get<std::string>();
      const Shape shape = entry.at("shape").get<Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      const std::size_t count = shape_size(shape);
      if (offset % 8 != 0 || offset > raw.payload.size() || count > (raw.payload.size() - offset) / 8) {
        throw std::runtime_error("array " + name + " lies outside the payload");
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<double>(get_u64(raw.payload, offset + 8 * i));
      out.arrays.push_back({name, Array(shape, std::move(values))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed array index in " + path.string() + ": " + e.what());
  }
  out.header = std::move(raw.header);
  return out;
}

}  // namespace tsmt::bundle
