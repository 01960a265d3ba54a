#include "tsmt/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

#include "tsmt/io.hpp"

namespace tsmt::audio {

namespace {

std::uint32_t u32(const std::string& b, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[off])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[off + 3])) << 24;
}

std::uint16_t u16(const std::string& b, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                    static_cast<unsigned char>(b[off + 1]) << 8);
}

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& b, std::uint16_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>(v >> 8));
}

}  // namespace

PcmAudio read_wav(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  const std::string where = path.string();
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw std::invalid_argument(where + ": not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;
  bool have_fmt = false;
  for (std::size_t off = 12; off + 8 <= bytes.size();) {
    const std::string id = bytes.substr(off, 4);
    const std::size_t len = u32(bytes, off + 4);
    const std::size_t body = off + 8;
    if (body + len > bytes.size()) {
      if (id == "data") {
        data_off = body;
        data_len = bytes.size() - body;
      }
      break;
    }
    if (id == "fmt " && len >= 16) {
      format = u16(bytes, body);
      channels = u16(bytes, body + 2);
      rate = u32(bytes, body + 4);
      bits = u16(bytes, body + 14);
      if (format == 0xFFFE && len >= 26) format = u16(bytes, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      data_off = body;
      data_len = len;
    }
    off = body + len + (len & 1);
  }
  if (!have_fmt || data_off == 0) throw std::invalid_argument(where + ": missing fmt or data chunk");
  if (channels == 0 || rate == 0) throw std::invalid_argument(where + ": invalid channel count or sample rate");
  const bool pcm16 = format == 1 && bits == 16;
  const bool pcm32 = format == 1 && bits == 32;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !pcm32 && !f32) {
    throw std::invalid_argument(where + ": unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                std::to_string(bits) + " bits)");
  }
  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  PcmAudio out;
  out.sample_rate = static_cast<int>(rate);
  out.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_off + (f * channels + c) * width;
      if (pcm16) {
        acc += static_cast<std::int16_t>(u16(bytes, at)) / 32768.0;
      } else if (pcm32) {
        acc += static_cast<std::int32_t>(u32(bytes, at)) / 2147483648.0;
      } else {
        const std::uint32_t raw = u32(bytes, at);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        acc += v;
      }
    }
    out.samples[f] = acc / channels;
  }
  return out;
}

void write_wav16(const std::filesystem::path& path, const PcmAudio& audio) {
  std::string b;
  const auto data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
  b += "RIFF";
  put_u32(b, 36 + data_len);
  b += "WAVEfmt ";
  put_u32(b, 16);
  put_u16(b, 1);
  put_u16(b, 1);
  put_u32(b, static_cast<std::uint32_t>(audio.sample_rate));
  put_u32(b, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put_u16(b, 2);
  put_u16(b, 16);
  b += "data";
  put_u32(b, data_len);
  for (double s : audio.samples) {
    const double clipped = std::clamp(s, -1.0, 1.0);
    put_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32767.0))));
  }
  io::write_file_atomic(path, b);
}

}  // namespace tsmt::audio
