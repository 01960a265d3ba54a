#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tsmt/numerics/array.hpp"

namespace tsmt::motion {

inline constexpr std::size_t kJoints = 17;
inline constexpr std::size_t kDims = 3 * kJoints;
inline constexpr double kCanonicalFps = 24.0;

// Human3.6M 17-joint ordering.
enum Joint : std::size_t {
  kPelvis = 0,
  kRightHip,
  kRightKnee,
  kRightAnkle,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kSpine,
  kThorax,
  kNeck,
  kHead,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
};

extern const std::array<std::string_view, kJoints> kJointNames;
/// Parent of each joint in the kinematic tree; -1 for the pelvis.
extern const std::array<int, kJoints> kParents;

using Warnings = std::vector<std::string>;

/// T frames of 17 root-relative joint positions, stored as a T x 51 array
/// (joint-major: x, y, z of joint 0, then joint 1, ...).
struct PoseSequence {
  double fps = kCanonicalFps;
  std::vector<std::string> joints;
  Array frames;

  static PoseSequence from_frames(Array frames, double fps = kCanonicalFps);

  std::size_t frame_count() const { return frames.rank() == 2 ? frames.dim(0) : 0; }
  std::size_t dims() const { return frames.rank() == 2 ? frames.dim(1) : 0; }
  double at(std::size_t t, std::size_t joint, std::size_t axis) const { return frames.at(t, 3 * joint + axis); }

  /// Throws std::invalid_argument unless T >= 1, fps > 0, 17 joints and all values finite.
  void validate() const;
  PoseSequence slice(std::size_t start, std::size_t count) const;
};

std::vector<std::string> default_joint_names();

/// Translates every frame so the pelvis sits at the origin.
PoseSequence root_relative(const PoseSequence& seq);

/// Pose file: {"fps": 24, "joints": [17 names], "frames": [[[x,y,z] x17] xT]}.
/// Extra top-level keys are preserved in `extras` on read.
struct PoseFile {
  PoseSequence pose;
  std::string extras_json = "{}";
};

PoseFile read_pose_file(const std::filesystem::path& path);
std::string pose_to_json(const PoseSequence& seq, const std::string& extras_json = "{}");
void write_pose_file(const std::filesystem::path& path, const PoseSequence& seq,
                     const std::string& extras_json = "{}");

}  // namespace tsmt::motion
