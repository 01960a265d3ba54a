#include "tsmt/audio/features.hpp"

#include <sstream>
#include <stdexcept>
#include <string>

#include "tsmt/io.hpp"

namespace tsmt::audio {

void AudioFeatureSequence::validate() const {
  if (mfcc.rank() != 2 || mfcc.dim(0) != beat.size()) {
    throw std::invalid_argument("audio features: " + shape_string(mfcc.shape()) + " rows vs " +
                                std::to_string(beat.size()) + " beat flags");
  }
  if (!mfcc.all_finite()) throw std::invalid_argument("audio features: non-finite value");
  for (auto b : beat)
    if (b > 1) throw std::invalid_argument("audio features: beat flag must be 0 or 1");
}

AudioFeatureSequence AudioFeatureSequence::slice(std::size_t start, std::size_t count) const {
  if (start + count > frame_count()) throw std::out_of_range("audio slice past end of sequence");
  const std::size_t d = mfcc.cols();
  AudioFeatureSequence out;
  out.fps = fps;
  out.mfcc = Array({count, d}, std::vector<double>(mfcc.data() + start * d, mfcc.data() + (start + count) * d));
  out.beat.assign(beat.begin() + static_cast<std::ptrdiff_t>(start),
                  beat.begin() + static_cast<std::ptrdiff_t>(start + count));
  return out;
}

void write_feature_cache(const std::filesystem::path& path, const AudioFeatureSequence& seq) {
  seq.validate();
  std::string out;
  const std::size_t d = seq.mfcc.cols();
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      out += io::format_double(seq.mfcc.at(t, c));
      out += ',';
    }
    out += seq.beat[t] ? '1' : '0';
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

AudioFeatureSequence read_feature_cache(const std::filesystem::path& path, double fps) {
  std::istringstream in(io::read_file(path));
  std::string line;
  std::vector<double> data;
  AudioFeatureSequence seq;
  seq.fps = fps;
  std::size_t row = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width || width < 2) {
      throw std::invalid_argument(path.string() + ": row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " columns");
    }
    const std::string where = path.string() + " row " + std::to_string(row);
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) data.push_back(io::parse_double(cells[c], where));
    const double b = io::parse_double(cells.back(), where);
    if (b != 0.0 && b != 1.0) throw std::invalid_argument(where + ": beat column must be 0 or 1");
    seq.beat.push_back(static_cast<std::uint8_t>(b));
  }
  seq.mfcc = Array({seq.beat.size(), width ? width - 1 : kFeatureDims}, std::move(data));
  seq.validate();
  return seq;
}

}  // namespace tsmt::audio
