#include "tsmt/motion/pose.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "tsmt/io.hpp"

namespace tsmt::motion {

using nlohmann::json;

const std::array<std::string_view, kJoints> kJointNames = {
    "pelvis",         "right_hip",   "right_knee", "right_ankle", "left_hip",       "left_knee",
    "left_ankle",     "spine",       "thorax",     "neck",        "head",           "left_shoulder",
    "left_elbow",     "left_wrist",  "right_shoulder", "right_elbow", "right_wrist",
};

const std::array<int, kJoints> kParents = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};

std::vector<std::string> default_joint_names() { return {kJointNames.begin(), kJointNames.end()}; }

PoseSequence PoseSequence::from_frames(Array frames, double fps) {
  PoseSequence s;
  s.fps = fps;
  s.joints = default_joint_names();
  s.frames = std::move(frames);
  return s;
}

void PoseSequence::validate() const {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw std::invalid_argument("pose: fps must be positive");
  if (joints.size() != kJoints) {
    throw std::invalid_argument("pose: expected 17 joints, got " + std::to_string(joints.size()));
  }
  if (frames.rank() != 2 || frames.dim(1) != kDims) {
    throw std::invalid_argument("pose: frames must be T x 51, got " + shape_string(frames.shape()));
  }
  if (frame_count() < 1) throw std::invalid_argument("pose: sequence has no frames");
  if (!frames.all_finite()) throw std::invalid_argument("pose: non-finite coordinate");
}

PoseSequence PoseSequence::slice(std::size_t start, std::size_t count) const {
  if (start + count > frame_count()) throw std::out_of_range("pose slice past end of sequence");
  const std::size_t d = dims();
  std::vector<double> data(frames.data() + start * d, frames.data() + (start + count) * d);
  PoseSequence s;
  s.fps = fps;
  s.joints = joints;
  s.frames = Array({count, d}, std::move(data));
  return s;
}

PoseSequence root_relative(const PoseSequence& seq) {
  PoseSequence out = seq;
  const std::size_t d = seq.dims();
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    double root[3];
    for (std::size_t a = 0; a < 3; ++a) root[a] = seq.frames.at(t, a);
    for (std::size_t c = 0; c < d; ++c) out.frames.at(t, c) -= root[c % 3];
  }
  return out;
}

PoseFile read_pose_file(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("frames") || !doc.contains("fps")) {
    throw std::invalid_argument(path.string() + ": pose file needs 'fps' and 'frames'");
  }
  PoseFile out;
  PoseSequence& seq = out.pose;
  seq.fps = doc.at("fps").get<double>();
  seq.joints = doc.contains("joints") ? doc.at("joints").get<std::vector<std::string>>() : default_joint_names();
  const json& frames = doc.at("frames");
  const std::size_t T = frames.size();
  std::vector<double> data;
  data.reserve(T * kDims);
  for (std::size_t t = 0; t < T; ++t) {
    const json& frame = frames[t];
    if (frame.size() != seq.joints.size()) {
      throw std::invalid_argument(path.string() + ": frame " + std::to_string(t) + " has " +
                                  std::to_string(frame.size()) + " joints, expected " +
                                  std::to_string(seq.joints.size()));
    }
    for (const json& joint : frame) {
      if (joint.size() != 3) throw std::invalid_argument(path.string() + ": joint without 3 coordinates");
      for (const json& v : joint) data.push_back(v.get<double>());
    }
  }
  seq.frames = Array({T, 3 * seq.joints.size()}, std::move(data));
  try {
    seq.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  json extras = doc;
  extras.erase("fps");
  extras.erase("joints");
  extras.erase("frames");
  out.extras_json = extras.dump();
  return out;
}

std::string pose_to_json(const PoseSequence& seq, const std::string& extras_json) {
  json doc = json::parse(extras_json);
  doc["fps"] = seq.fps;
  doc["joints"] = seq.joints;
  json frames = json::array();
  const std::size_t J = seq.dims() / 3;
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    json frame = json::array();
    for (std::size_t j = 0; j < J; ++j) frame.push_back({seq.at(t, j, 0), seq.at(t, j, 1), seq.at(t, j, 2)});
    frames.push_back(std::move(frame));
  }
  doc["frames"] = std::move(frames);
  return doc.dump() + "\n";
}

void write_pose_file(const std::filesystem::path& path, const PoseSequence& seq, const std::string& extras_json) {
  io::write_file_atomic(path, pose_to_json(seq, extras_json));
}

}  // namespace tsmt::motion
