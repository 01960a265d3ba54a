#include "tsmt/metrics/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tsmt::metrics {

using namespace motion;

const std::array<InteriorJoint, kInteriorJoints>& interior_joints() {
  static const std::array<InteriorJoint, kInteriorJoints> joints = {{
      {"right_hip", kRightHip, kPelvis, kRightKnee},
      {"right_knee", kRightKnee, kRightHip, kRightAnkle},
      {"left_hip", kLeftHip, kPelvis, kLeftKnee},
      {"left_knee", kLeftKnee, kLeftHip, kLeftAnkle},
      {"spine", kSpine, kPelvis, kThorax},
      {"neck", kNeck, kThorax, kHead},
      {"left_shoulder", kLeftShoulder, kThorax, kLeftElbow},
      {"left_elbow", kLeftElbow, kLeftShoulder, kLeftWrist},
      {"right_shoulder", kRightShoulder, kThorax, kRightElbow},
      {"right_elbow", kRightElbow, kRightShoulder, kRightWrist},
  }};
  return joints;
}

JointLimitTable JointLimitTable::defaults() {
  JointLimitTable t;
  const double cap = 4.0 * std::numbers::pi;
  for (std::size_t i = 0; i < kInteriorJoints; ++i) {
    const std::string& n = interior_joints()[i].name;
    double lo = 0.0;
    if (n.ends_with("knee")) lo = 5.0;
    else if (n.ends_with("elbow") || n.ends_with("hip")) lo = 30.0;
    else if (n == "spine" || n == "neck") lo = 90.0;
    else if (n.ends_with("shoulder")) lo = 10.0;
    t.limits[i] = {lo, 180.0, cap};
  }
  return t;
}

void JointLimitTable::validate() const {
  for (std::size_t i = 0; i < kInteriorJoints; ++i) {
    const JointLimit& l = limits[i];
    const std::string& n = interior_joints()[i].name;
    if (!(l.min_degrees < l.max_degrees)) throw std::invalid_argument("joint limits: " + n + " needs min < max");
    if (!(l.max_speed > 0.0)) throw std::invalid_argument("joint limits: " + n + " speed cap must be positive");
  }
}

JointLimit& JointLimitTable::operator[](const std::string& name) {
  for (std::size_t i = 0; i < kInteriorJoints; ++i)
    if (interior_joints()[i].name == name) return limits[i];
  throw std::invalid_argument("joint limits: unknown joint " + name);
}

JointAngles joint_angles(const PoseSequence& seq) {
  if (seq.dims() != kDims) {
    throw std::invalid_argument("joint_angles: expected a 17-joint skeleton, got " + std::to_string(seq.dims()) +
                                " dims");
  }
  const std::size_t T = seq.frame_count();
  JointAngles out{Array({T, kInteriorJoints}), std::vector<std::uint8_t>(T, 0)};
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < kInteriorJoints; ++j) {
      const InteriorJoint& ij = interior_joints()[j];
      double a[3], b[3], na = 0.0, nb = 0.0, dot = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        a[k] = seq.at(t, ij.from, k) - seq.at(t, ij.joint, k);
        b[k] = seq.at(t, ij.to, k) - seq.at(t, ij.joint, k);
        na += a[k] * a[k];
        nb += b[k] * b[k];
        dot += a[k] * b[k];
      }
      if (na == 0.0 || nb == 0.0) {
        out.angles.at(t, j) = std::numeric_limits<double>::quiet_NaN();
        out.undefined[t] = 1;
        continue;
      }
      out.angles.at(t, j) = std::acos(std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0));
    }
  }
  return out;
}

double authenticity(const PoseSequence& seq, const JointLimitTable& limits) {
  const JointAngles ja = joint_angles(seq);
  const std::size_t T = seq.frame_count();
  if (T == 0) throw std::invalid_argument("authenticity: empty sequence");
  std::size_t valid = 0;
  for (std::size_t t = 0; t < T; ++t) {
    bool ok = !ja.undefined[t];
    for (std::size_t j = 0; ok && j < kInteriorJoints; ++j) {
      const double deg = ja.angles.at(t, j) * 180.0 / std::numbers::pi;
      ok = deg >= limits.limits[j].min_degrees - 1e-9 && deg <= limits.limits[j].max_degrees + 1e-9;
    }
    valid += ok ? 1 : 0;
  }
  return static_cast<double>(valid) / static_cast<double>(T);
}

double coherence(const PoseSequence& seq, const JointLimitTable& limits) {
  const std::size_t T = seq.frame_count();
  if (T < 2) throw std::invalid_argument("coherence: needs at least 2 frames");
  const JointAngles ja = joint_angles(seq);
  std::size_t valid = 0;
  for (std::size_t t = 1; t < T; ++t) {
    bool ok = !ja.undefined[t] && !ja.undefined[t - 1];
    for (std::size_t j = 0; ok && j < kInteriorJoints; ++j) {
      const double speed = std::abs(ja.angles.at(t, j) - ja.angles.at(t - 1, j)) * seq.fps;
      ok = speed <= limits.limits[j].max_speed;
    }
    valid += ok ? 1 : 0;
  }
  return static_cast<double>(valid) / static_cast<double>(T - 1);
}

std::vector<std::size_t> extract_motion_beats(const PoseSequence& seq) {
  const std::size_t T = seq.frame_count();
  if (T < 3) throw std::invalid_argument("extract_motion_beats: needs at least 3 frames");
  const JointAngles ja = joint_angles(seq);
  std::vector<double> speed(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t lo = t == 0 ? 0 : t - 1, hi = t + 1 < T ? t + 1 : T - 1;
    for (std::size_t j = 0; j < kInteriorJoints; ++j) {
      const double d = (ja.angles.at(hi, j) - ja.angles.at(lo, j)) / static_cast<double>(hi - lo) * seq.fps;
      if (std::isfinite(d)) speed[t] += std::abs(d);
    }
  }
  // Differences below round-off of the speed scale count as zero.
  const double tol = 1e-9 * std::max(1.0, *std::max_element(speed.begin(), speed.end()));
  std::vector<std::size_t> beats;
  for (std::size_t t = 1; t + 1 < T; ++t) {
    const double before = speed[t] - speed[t - 1], after = speed[t + 1] - speed[t];
    if (before < -tol && after >= -tol) beats.push_back(t);
  }
  return beats;
}

PoseSequence neutral_pose(std::size_t frames, double fps) {
  // x: subject's left, y: up, z: forward.
  static const double joints[kJoints][3] = {
      {0.0, 0.0, 0.0},      // pelvis
      {-0.12, 0.0, 0.0},    // right hip
      {-0.13, -0.44, 0.02}, // right knee
      {-0.13, -0.86, 0.0},  // right ankle
      {0.12, 0.0, 0.0},     // left hip
      {0.13, -0.44, 0.02},  // left knee
      {0.13, -0.86, 0.0},   // left ankle
      {0.0, 0.23, 0.01},    // spine
      {0.0, 0.48, 0.0},     // thorax
      {0.0, 0.58, 0.02},    // neck
      {0.0, 0.70, 0.03},    // head
      {0.16, 0.46, 0.0},    // left shoulder
      {0.22, 0.20, 0.03},   // left elbow
      {0.24, -0.04, 0.08},  // left wrist
      {-0.16, 0.46, 0.0},   // right shoulder
      {-0.22, 0.20, 0.03},  // right elbow
      {-0.24, -0.04, 0.08}, // right wrist
  };
  Array f({frames, kDims});
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t j = 0; j < kJoints; ++j)
      for (std::size_t k = 0; k < 3; ++k) f.at(t, 3 * j + k) = joints[j][k];
  return PoseSequence::from_frames(std::move(f), fps);
}

}  // namespace tsmt::metrics
