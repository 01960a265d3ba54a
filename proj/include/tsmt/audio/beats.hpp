#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tsmt::audio {

/// Beat times in seconds, strictly increasing and non-negative.
struct BeatTrack {
  std::vector<double> times;
};

/// One beat time per line; blank lines are ignored. Negative or
/// non-increasing times throw std::invalid_argument naming the line.
BeatTrack load_beat_annotations(const std::filesystem::path& path);
BeatTrack parse_beat_annotations(const std::string& text, const std::string& source = "<beats>");

/// Frame round(time * fps) is set for each beat that falls before T.
std::vector<std::uint8_t> rasterize_beats(const BeatTrack& track, double fps, std::size_t frames);

}  // namespace tsmt::audio
