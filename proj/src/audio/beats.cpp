#include "tsmt/audio/beats.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "tsmt/io.hpp"

namespace tsmt::audio {

BeatTrack parse_beat_annotations(const std::string& text, const std::string& source) {
  BeatTrack track;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const double t = io::parse_double(line, where);
    if (!std::isfinite(t) || t < 0.0) throw std::invalid_argument(where + ": beat time must be non-negative");
    if (!track.times.empty() && t <= track.times.back()) {
      throw std::invalid_argument(where + ": beat times must be strictly increasing (line " +
                                  std::to_string(lineno) + ")");
    }
    track.times.push_back(t);
  }
  return track;
}

BeatTrack load_beat_annotations(const std::filesystem::path& path) {
  return parse_beat_annotations(io::read_file(path), path.string());
}

std::vector<std::uint8_t> rasterize_beats(const BeatTrack& track, double fps, std::size_t frames) {
  std::vector<std::uint8_t> out(frames, 0);
  for (double t : track.times) {
    const long long f = std::llround(t * fps);
    if (f >= 0 && static_cast<std::size_t>(f) < frames) out[static_cast<std::size_t>(f)] = 1;
  }
  return out;
}

}  // namespace tsmt::audio
