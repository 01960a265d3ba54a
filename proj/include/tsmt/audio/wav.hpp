#pragma once

#include <filesystem>
#include <vector>

namespace tsmt::audio {

struct PcmAudio {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate = 44100;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Reads RIFF/WAVE with 16- or 32-bit integer PCM or 32-bit float samples.
/// Multi-channel audio is averaged to mono.
PcmAudio read_wav(const std::filesystem::path& path);

/// Writes 16-bit mono PCM (samples clipped to [-1, 1]).
void write_wav16(const std::filesystem::path& path, const PcmAudio& audio);

}  // namespace tsmt::audio
