#pragma once

#include <array>
#include <string>
#include <vector>

#include "tsmt/motion/pose.hpp"

namespace tsmt::metrics {

inline constexpr std::size_t kInteriorJoints = 10;

/// A joint whose angle is measured between the bones to `from` and `to`.
struct InteriorJoint {
  std::string name;
  std::size_t joint, from, to;
};

/// Hips, knees, spine, neck, shoulders and elbows of the 17-joint skeleton.
const std::array<InteriorJoint, kInteriorJoints>& interior_joints();

struct JointLimit {
  double min_degrees = 0.0;
  double max_degrees = 180.0;
  double max_speed = 0.0;  // rad/s
};

/// Limits per interior joint, indexed like interior_joints().
struct JointLimitTable {
  std::array<JointLimit, kInteriorJoints> limits;

  /// Knee 5-180, elbow 30-180, hip 30-180, spine 90-180, neck 90-180,
  /// shoulder 10-180 degrees; every speed capped at 4 pi rad/s.
  static JointLimitTable defaults();
  /// Throws std::invalid_argument unless min < max and speeds are positive.
  void validate() const;
  /// Looks up a limit by interior joint name ("left_knee", ...).
  JointLimit& operator[](const std::string& name);
};

struct JointAngles {
  Array angles;                      // T x 10 radians; NaN where undefined
  std::vector<std::uint8_t> undefined;  // per frame: some bone had zero length
};

/// Interior angle of each joint from the normalised dot product of its two
/// bone vectors, clamped to [-1, 1] before arccos.
JointAngles joint_angles(const motion::PoseSequence& seq);

/// Fraction of frames whose every interior angle lies within its range
/// (bounds inclusive to 1e-9 degrees); undefined frames count as invalid.
double authenticity(const motion::PoseSequence& seq, const JointLimitTable& limits);
/// Fraction of the T-1 transitions where every |dtheta| * fps is within the
/// joint's speed cap. Requires T >= 2.
double coherence(const motion::PoseSequence& seq, const JointLimitTable& limits);

/// Motion beats: local minima of the aggregate angular speed
/// s_t = sum_j |dtheta_j/dt| (central differences, one-sided at the ends).
/// With a_t = s_{t+1} - s_t, frame t in [1, T-2] is a beat iff a_{t-1} < 0 <= a_t,
/// where |a| below 1e-9 of the peak speed (at least 1) counts as zero.
std::vector<std::size_t> extract_motion_beats(const motion::PoseSequence& seq);

/// A standing pose with arms lowered at the sides, root at the origin (metres).
motion::PoseSequence neutral_pose(std::size_t frames = 1, double fps = motion::kCanonicalFps);

}  // namespace tsmt::metrics
