#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>

#include "doctest.h"
#include "tsmt/metrics/classifier.hpp"
#include "tsmt/metrics/kinematics.hpp"
#include "tsmt/metrics/report.hpp"
#include "tsmt/metrics/scores.hpp"
#include "tsmt/numerics/rng.hpp"

using namespace tsmt;
using namespace tsmt::metrics;
using motion::PoseSequence;

namespace {

constexpr double kPi = std::numbers::pi;

void set_joint(PoseSequence& s, std::size_t t, std::size_t joint, double x, double y, double z) {
  s.frames.at(t, 3 * joint) = x;
  s.frames.at(t, 3 * joint + 1) = y;
  s.frames.at(t, 3 * joint + 2) = z;
}

// Upper arm hangs straight down from the left shoulder; the forearm makes
// interior angle theta with it.
void set_left_elbow(PoseSequence& s, std::size_t t, double theta) {
  const double sx = 0.16, sy = 0.46;
  set_joint(s, t, motion::kLeftShoulder, sx, sy, 0.0);
  set_joint(s, t, motion::kLeftElbow, sx, sy - 0.26, 0.0);
  set_joint(s, t, motion::kLeftWrist, sx + 0.24 * std::sin(theta), sy - 0.26 + 0.24 * std::cos(theta), 0.0);
}

// Folds the left ankle back onto the thigh: knee angle 0.
void fold_left_knee(PoseSequence& s, std::size_t t) { set_joint(s, t, motion::kLeftAnkle, 0.125, -0.22, 0.01); }

PoseSequence elbow_motion(std::size_t T, const std::function<double(std::size_t)>& theta, double fps = 24.0) {
  PoseSequence s = neutral_pose(T, fps);
  for (std::size_t t = 0; t < T; ++t) set_left_elbow(s, t, theta(t));
  return s;
}

PoseSequence random_pose(std::size_t T, Rng& rng, double noise = 0.05) {
  PoseSequence s = neutral_pose(T);
  for (double& v : s.frames.values()) v += noise * rng.normal();
  return s;
}

// Rigid motion applied to every frame: rotation about an arbitrary axis, then translation.
PoseSequence rigid_transform(const PoseSequence& s, double scale = 1.0) {
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, -0.5).normalized()).toRotationMatrix();
  const Eigen::Vector3d shift(0.3, -1.2, 2.5);
  PoseSequence out = s;
  for (std::size_t t = 0; t < s.frame_count(); ++t)
    for (std::size_t j = 0; j < motion::kJoints; ++j) {
      const Eigen::Vector3d p(s.at(t, j, 0), s.at(t, j, 1), s.at(t, j, 2));
      const Eigen::Vector3d q = scale * (R * p) + shift;
      set_joint(out, t, j, q.x(), q.y(), q.z());
    }
  return out;
}

// Maximum bipartite matching by augmenting paths.
std::size_t optimal_matches(const std::vector<std::size_t>& ref, const std::vector<std::size_t>& cand, std::size_t tol) {
  std::vector<int> owner(cand.size(), -1);
  std::function<bool(std::size_t, std::vector<char>&)> augment = [&](std::size_t r, std::vector<char>& seen) {
    for (std::size_t c = 0; c < cand.size(); ++c) {
      const std::size_t d = ref[r] > cand[c] ? ref[r] - cand[c] : cand[c] - ref[r];
      if (d > tol || seen[c]) continue;
      seen[c] = 1;
      if (owner[c] < 0 || augment(static_cast<std::size_t>(owner[c]), seen)) {
        owner[c] = static_cast<int>(r);
        return true;
      }
    }
    return false;
  };
  std::size_t m = 0;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    std::vector<char> seen(cand.size(), 0);
    if (augment(r, seen)) ++m;
  }
  return m;
}

std::vector<std::size_t> random_beats(Rng& rng, std::size_t horizon, double p) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < horizon; ++t)
    if (rng.uniform() < p) out.push_back(t);
  return out;
}

Array gaussian_set(std::size_t n, double mx, double my, Rng& rng) {
  Array a({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    a.at(i, 0) = mx + rng.normal();
    a.at(i, 1) = my + rng.normal();
  }
  return a;
}

// Frechet distance with Eigen's eigensolver in long double:
// tr(Sa^{1/2} Sb Sa^{1/2})^{1/2} in place of tr((Sa Sb)^{1/2}).
double frechet_oracle(const Array& fa, const Array& fb) {
  using M = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const auto moments = [](const Array& x, Eigen::Matrix<long double, Eigen::Dynamic, 1>& mu, M& cov) {
    const auto n = static_cast<Eigen::Index>(x.dim(0)), d = static_cast<Eigen::Index>(x.dim(1));
    M X(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index c = 0; c < d; ++c) X(i, c) = x.at(i, c);
    mu = X.colwise().mean().transpose();
    const M centred = X.rowwise() - mu.transpose();
    cov = centred.transpose() * centred / static_cast<long double>(n - 1);
  };
  Eigen::Matrix<long double, Eigen::Dynamic, 1> ma, mb;
  M sa, sb;
  moments(fa, ma, sa);
  moments(fb, mb, sb);
  const auto sqrt_psd = [](const M& m) {
    Eigen::SelfAdjointEigenSolver<M> es(m);
    return M(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0L).cwiseSqrt().asDiagonal() *
             es.eigenvectors().transpose());
  };
  const M ra = sqrt_psd(sa);
  const M inner = ra * sb * ra;
  return static_cast<double>((ma - mb).squaredNorm() + sa.trace() + sb.trace() -
                             2.0L * sqrt_psd((inner + inner.transpose()) / 2.0L).trace());
}

}  // namespace

TEST_CASE("interior joints cover hips, knees, spine, neck, shoulders and elbows") {
  std::set<std::string> names;
  for (const auto& j : interior_joints()) names.insert(j.name);
  CHECK(names == std::set<std::string>{"left_elbow", "left_hip", "left_knee", "left_shoulder", "neck",
                                       "right_elbow", "right_hip", "right_knee", "right_shoulder", "spine"});
  CHECK_NOTHROW(JointLimitTable::defaults().validate());
  JointLimitTable bad = JointLimitTable::defaults();
  bad["left_knee"].min_degrees = 200.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("left_knee"), std::invalid_argument);
  bad = JointLimitTable::defaults();
  bad["neck"].max_speed = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad["tail"], std::invalid_argument);
}

TEST_CASE("straight and right-angle elbows") {
  const std::size_t elbow = 7;
  REQUIRE(interior_joints()[elbow].name == "left_elbow");
  PoseSequence s = neutral_pose(2);
  set_left_elbow(s, 0, kPi);
  set_left_elbow(s, 1, kPi / 2);
  const JointAngles a = joint_angles(s);
  CHECK(a.angles.at(0, elbow) == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(a.angles.at(1, elbow) == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(a.undefined == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("joint angles match a long-double cross-product oracle on random poses") {
  Rng rng(11);
  const PoseSequence s = random_pose(200, rng, 0.1);
  const JointAngles a = joint_angles(s);
  double worst = 0.0;
  for (std::size_t t = 0; t < s.frame_count(); ++t)
    for (std::size_t j = 0; j < kInteriorJoints; ++j) {
      const auto& ij = interior_joints()[j];
      long double u[3], v[3];
      for (std::size_t k = 0; k < 3; ++k) {
        u[k] = static_cast<long double>(s.at(t, ij.from, k)) - s.at(t, ij.joint, k);
        v[k] = static_cast<long double>(s.at(t, ij.to, k)) - s.at(t, ij.joint, k);
      }
      const long double cx = u[1] * v[2] - u[2] * v[1], cy = u[2] * v[0] - u[0] * v[2], cz = u[0] * v[1] - u[1] * v[0];
      const long double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
      const long double expect = std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
      worst = std::max(worst, static_cast<double>(std::fabs(a.angles.at(t, j) - expect)));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("zero-length bones flag the frame and make it invalid") {
  PoseSequence s = neutral_pose(4);
  set_joint(s, 2, motion::kLeftElbow, 0.16, 0.46, 0.0);  // elbow on the shoulder
  const JointAngles a = joint_angles(s);
  CHECK(a.undefined == std::vector<std::uint8_t>{0, 0, 1, 0});
  CHECK(std::isnan(a.angles.at(2, 7)));
  CHECK(authenticity(s, JointLimitTable::defaults()) == 0.75);
  CHECK(coherence(s, JointLimitTable::defaults()) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(joint_angles(PoseSequence::from_frames(Array({2, 6}))), std::invalid_argument);
}

TEST_CASE("authenticity of a neutral pose and of one violating frame in ten") {
  const auto limits = JointLimitTable::defaults();
  CHECK(authenticity(neutral_pose(100), limits) == 1.0);
  CHECK(coherence(neutral_pose(100), limits) == 1.0);
  PoseSequence s = neutral_pose(10);
  fold_left_knee(s, 6);
  CHECK(authenticity(s, limits) == 0.9);
}

TEST_CASE("authenticity bounds are inclusive") {
  auto limits = JointLimitTable::defaults();
  limits["left_elbow"].min_degrees = 90.0;
  const PoseSequence s = elbow_motion(3, [](std::size_t t) { return t == 0 ? kPi / 2 : kPi / 2 - 0.01; });
  CHECK(authenticity(s, limits) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("coherence counts transitions") {
  const auto limits = JointLimitTable::defaults();
  CHECK_THROWS_AS(coherence(neutral_pose(1), limits), std::invalid_argument);
  // The elbow snaps from straight to a right angle between frames 5 and 6:
  // pi/2 rad in 1/24 s is far above the 4 pi rad/s cap.
  const PoseSequence s = elbow_motion(11, [](std::size_t t) { return t < 6 ? kPi : kPi / 2; });
  CHECK(authenticity(s, limits) == 1.0);
  CHECK(coherence(s, limits) == 0.9);
}

TEST_CASE("sinusoidal elbow swing under and over the speed cap") {
  const auto limits = JointLimitTable::defaults();
  const double cap = limits.limits[7].max_speed;
  const auto swing = [](double amp, double hz) {
    return elbow_motion(96, [=](std::size_t t) { return 2.0 + amp * std::sin(2.0 * kPi * hz * static_cast<double>(t) / 24.0); });
  };
  // Analytic bound A * 2 pi f on |dtheta/dt| dominates every discrete difference.
  const double amp = 0.5, hz = 1.5, bound = amp * 2.0 * kPi * hz;
  REQUIRE(bound < cap);
  const PoseSequence slow = swing(amp, hz);
  const JointAngles a = joint_angles(slow);
  double fastest = 0.0;
  for (std::size_t t = 1; t < slow.frame_count(); ++t)
    fastest = std::max(fastest, std::abs(a.angles.at(t, 7) - a.angles.at(t - 1, 7)) * 24.0);
  CHECK(fastest <= bound + 1e-9);
  CHECK(coherence(slow, limits) == 1.0);
  // 6 Hz with amplitude 1: every transition moves 1 rad, i.e. 24 rad/s.
  CHECK(coherence(swing(1.0, 6.0), limits) == 0.0);
}

TEST_CASE("plausibility is invariant under rigid motion") {
  Rng rng(5);
  const auto limits = JointLimitTable::defaults();
  for (int trial = 0; trial < 5; ++trial) {
    PoseSequence s = random_pose(30, rng, 0.08);
    fold_left_knee(s, 3);
    const PoseSequence moved = rigid_transform(s);
    CHECK(authenticity(moved, limits) == authenticity(s, limits));
    CHECK(coherence(moved, limits) == coherence(s, limits));
  }
}

TEST_CASE("motion beats of constant-speed and triangular motion") {
  CHECK_THROWS_AS(extract_motion_beats(neutral_pose(2)), std::invalid_argument);
  CHECK(extract_motion_beats(neutral_pose(20)).empty());
  CHECK(extract_motion_beats(elbow_motion(40, [](std::size_t t) { return 1.0 + 0.02 * static_cast<double>(t); })).empty());

  // Triangle wave with period 8: 0 1 2 3 4 3 2 1 0 ...
  const auto tri = [](std::size_t t) {
    const std::size_t p = t % 8;
    return static_cast<long>(p <= 4 ? p : 8 - p);
  };
  const std::size_t T = 25;
  const PoseSequence s = elbow_motion(T, [&](std::size_t t) { return 2.0 + 0.05 * static_cast<double>(tri(t)); });
  // Hand enumeration in integers: speed is |central difference| (one-sided at the ends),
  // beats where the speed difference turns from negative to non-negative.
  std::vector<long> speed(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (t == 0) speed[t] = 2 * std::labs(tri(1) - tri(0));
    else if (t == T - 1) speed[t] = 2 * std::labs(tri(t) - tri(t - 1));
    else speed[t] = std::labs(tri(t + 1) - tri(t - 1));
  }
  std::vector<std::size_t> expected;
  for (std::size_t t = 1; t + 1 < T; ++t)
    if (speed[t] - speed[t - 1] < 0 && speed[t + 1] - speed[t] >= 0) expected.push_back(t);
  CHECK(expected == std::vector<std::size_t>{4, 8, 12, 16, 20});
  CHECK(extract_motion_beats(s) == expected);
  CHECK(extract_motion_beats(rigid_transform(s, 2.5)) == expected);
}

TEST_CASE("concatenated identical motions repeat their beats") {
  const std::size_t L = 48;
  const auto theta = [&](std::size_t t) {
    const double x = static_cast<double>(t % L);
    return 2.0 + 0.3 * std::sin(2.0 * kPi * x / 12.0) + 0.1 * std::sin(2.0 * kPi * x / 16.0);
  };
  const auto beats = extract_motion_beats(elbow_motion(2 * L, theta));
  std::vector<std::size_t> first, second;
  for (std::size_t b : beats) {
    if (b >= 2 && b + 2 < L) first.push_back(b + L);
    if (b >= L + 2 && b + 2 < 2 * L) second.push_back(b);
  }
  CHECK_FALSE(first.empty());
  CHECK(first == second);
}

TEST_CASE("beat scores on the hand-enumerated case") {
  const std::vector<std::size_t> ref{10, 20, 30}, cand{11, 19, 35};
  const BeatScores s = beat_scores(ref, cand, 2);
  CHECK(s.matches == 2);
  CHECK(s.precision == 2.0 / 3.0);
  CHECK(s.recall == 2.0 / 3.0);
  CHECK(s.f_score == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  const BeatScores same = beat_scores(ref, ref);
  CHECK((same.precision == 1.0 && same.recall == 1.0 && same.f_score == 1.0));
  const std::vector<std::size_t> none;
  CHECK(beat_scores(ref, none).f_score == 0.0);
  CHECK(beat_scores(none, ref).f_score == 0.0);
  CHECK(beat_scores(none, ref).precision == 0.0);
  const BeatScores empty = beat_scores(none, none);
  CHECK((empty.precision == 1.0 && empty.recall == 1.0 && empty.f_score == 1.0));
  CHECK(beat_frames(std::vector<std::uint8_t>{0, 1, 0, 0, 1}) == std::vector<std::size_t>{1, 4});
}

TEST_CASE("greedy beat matching equals optimal matching for disjoint tolerance windows") {
  Rng rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t tol = rng.below(4);
    // References spaced more than 2 * tol apart so windows never overlap.
    std::vector<std::size_t> ref;
    for (std::size_t t = rng.below(5); t < 80; t += 2 * tol + 1 + rng.below(8)) ref.push_back(t);
    const auto cand = random_beats(rng, 80, rng.uniform(0.02, 0.3));
    const BeatScores s = beat_scores(ref, cand, tol);
    CHECK(s.matches == optimal_matches(ref, cand, tol));
    ++compared;
  }
  CHECK(compared == 1000);
}

TEST_CASE("beat scores are symmetric with precision and recall exchanged") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_beats(rng, 60, 0.15), b = random_beats(rng, 60, 0.15);
    const std::size_t tol = rng.below(4);
    const BeatScores ab = beat_scores(a, b, tol), ba = beat_scores(b, a, tol);
    CHECK(ab.matches == ba.matches);
    CHECK(ab.precision == ba.recall);
    CHECK(ab.recall == ba.precision);
    CHECK(ab.f_score == ba.f_score);
    CHECK(ab.matches <= optimal_matches(a, b, tol));
    CHECK((ab.f_score >= 0.0 && ab.f_score <= 1.0));
  }
}

TEST_CASE("fid of identical sets, exact moments and symmetry") {
  Rng rng(3);
  const Array a = gaussian_set(50, 0.0, 0.0, rng);
  CHECK(std::abs(fid(a, a)) < 1e-8);
  Moments ma{{0.0, 0.0}, Array({2, 2}, std::vector<double>{1, 0, 0, 1})};
  Moments mb{{3.0, 4.0}, Array({2, 2}, std::vector<double>{1, 0, 0, 1})};
  CHECK(frechet_distance(ma, mb) == 25.0);
  const Array b = gaussian_set(40, 1.0, -0.5, rng);
  CHECK(std::abs(fid(a, b) - fid(b, a)) < 1e-8);
  CHECK(fid(a, b) == doctest::Approx(frechet_oracle(a, b)).epsilon(1e-9));
}

TEST_CASE("fid of shifted Gaussian samples approaches 25") {
  Rng rng(77);
  const Array a = gaussian_set(10000, 0.0, 0.0, rng), b = gaussian_set(10000, 3.0, 4.0, rng);
  const double value = fid(a, b);
  CHECK(std::abs(value - 25.0) < 0.05 * 25.0);
  CHECK(value == doctest::Approx(frechet_oracle(a, b)).epsilon(1e-9));
}

TEST_CASE("fid stays non-negative and matches the oracle on random sets") {
  Rng rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 1 + rng.below(5), n = d + 2 + rng.below(30), m = d + 2 + rng.below(30);
    Array a({n, d}), b({m, d});
    for (double& v : a.values()) v = rng.normal() * 2.0;
    for (double& v : b.values()) v = rng.normal() + 0.5;
    const double value = fid(a, b);
    CHECK(value >= 0.0);
    CHECK(value == doctest::Approx(frechet_oracle(a, b)).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("fid argument checks and small-sample warning") {
  Rng rng(1);
  const Array a = gaussian_set(3, 0, 0, rng);
  std::vector<std::string> warnings;
  fid(a, gaussian_set(2, 0, 0, rng), &warnings);
  CHECK(warnings.size() == 1);
  CHECK_THROWS_AS(fid(a, Array({3, 3})), std::invalid_argument);
  CHECK_THROWS_AS(fid(Array({3, 0}), Array({3, 0})), std::invalid_argument);
  CHECK_THROWS_AS(fid(Array({1, 2}), a), std::invalid_argument);
  Array bad = a;
  bad.at(0, 0) = std::nan("");
  CHECK_THROWS_AS(fid(bad, a), std::invalid_argument);
}

TEST_CASE("diversity scores") {
  const std::vector<std::vector<double>> same(4, std::vector<double>{1.0, 2.0});
  CHECK(a_seq_d(same).value == 0.0);
  CHECK(a_seq_d(same).defined);
  const std::vector<std::string> one_music(4, "song");
  CHECK(s_music_d(same, one_music).value == 0.0);
  CHECK(s_music_d(same, one_music).defined);
  const std::vector<std::vector<std::vector<double>>> chunks(2, same);
  CHECK(i_seq_d(chunks).value == 0.0);

  const std::vector<std::vector<double>> pair{{0.0, 0.0}, {7.0, 0.0}};
  CHECK(a_seq_d(pair, 1000, 5).value == 7.0);
  CHECK_FALSE(a_seq_d(std::vector<std::vector<double>>{{1.0}}).defined);

  const std::vector<std::string> distinct{"a", "b"};
  const Score s = s_music_d(pair, distinct);
  CHECK_FALSE(s.defined);
  CHECK(s.value == 0.0);
  CHECK(s_music_d(pair, std::vector<std::string>{"a", "a"}).value == 7.0);
  CHECK_THROWS_AS(s_music_d(pair, one_music), std::invalid_argument);

  // Chunks at 0, 3 and 4: pairwise distances 3, 4, 1.
  const std::vector<std::vector<std::vector<double>>> seq_chunks{{{0.0}, {3.0}, {4.0}}, {{1.0}}};
  const Score i = i_seq_d(seq_chunks);
  CHECK(i.defined);
  CHECK(i.value == doctest::Approx(8.0 / 3.0));
  CHECK_FALSE(i_seq_d(std::vector<std::vector<std::vector<double>>>{{{1.0}}}).defined);
}

namespace {

struct ToyCorpus {
  std::vector<PoseSequence> sequences;
  std::vector<int> labels;
};

// Class k moves a different limb at a class-specific rate.
ToyCorpus toy_corpus(std::size_t per_class, std::size_t T, std::uint64_t seed) {
  static const std::size_t limbs[5] = {motion::kLeftWrist, motion::kRightWrist, motion::kLeftAnkle,
                                       motion::kRightAnkle, motion::kHead};
  Rng rng(seed);
  ToyCorpus c;
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t i = 0; i < per_class; ++i) {
      PoseSequence s = neutral_pose(T);
      const double phase = rng.uniform(0.0, 2.0 * kPi);
      for (std::size_t t = 0; t < T; ++t) {
        const double w = std::sin(phase + 0.4 * static_cast<double>((k + 1) * t));
        s.frames.at(t, 3 * limbs[k]) += 0.15 * w;
        s.frames.at(t, 3 * limbs[k] + 2) += 0.1 * w;
        for (std::size_t c2 = 0; c2 < motion::kDims; ++c2) s.frames.at(t, c2) += 0.005 * rng.normal();
      }
      c.sequences.push_back(std::move(s));
      c.labels.push_back(static_cast<int>(k));
    }
  return c;
}

ClassifierConfig toy_classifier_config() {
  ClassifierConfig c;
  c.stream = {16, 8, 2, 2};
  c.learning_rate = 3e-3;
  c.epochs = 120;
  c.batch_size = 10;
  return c;
}

const StyleClassifier& toy_classifier() {
  static const StyleClassifier clf = [] {
    const ToyCorpus c = toy_corpus(2, 16, 4);
    return train_style_classifier(c.sequences, c.labels, toy_classifier_config(), 9);
  }();
  return clf;
}

}  // namespace

TEST_CASE("style classifier overfits a 10-segment toy corpus") {
  const ToyCorpus c = toy_corpus(2, 16, 4);
  const StyleClassifier& clf = toy_classifier();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < c.sequences.size(); ++i) correct += classify(clf, c.sequences[i]) == c.labels[i];
  CHECK(correct == 10);
  CHECK(clf.epoch_loss.back() < clf.epoch_loss.front());
  CHECK(classifier_features(clf, c.sequences[0]).size() == 16);
  CHECK(classifier_logits(clf, c.sequences[0]).size() == 5);
  const auto m = confusion_matrix(clf, c.sequences, c.labels);
  for (std::size_t k = 0; k < 5; ++k) CHECK(m[k][k] == 2);
}

TEST_CASE("style classifier rejects single-class corpora and bad labels") {
  const ToyCorpus c = toy_corpus(1, 8, 1);
  const std::vector<int> single(c.sequences.size(), 2);
  CHECK_THROWS_WITH_AS(train_style_classifier(c.sequences, single, toy_classifier_config(), 0),
                       doctest::Contains("single class"), std::invalid_argument);
  std::vector<int> bad = c.labels;
  bad[0] = 5;
  CHECK_THROWS_AS(train_style_classifier(c.sequences, bad, toy_classifier_config(), 0), std::invalid_argument);
  CHECK_THROWS_AS(train_style_classifier(c.sequences, std::span(c.labels).first(2), toy_classifier_config(), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(classifier_features(toy_classifier(), PoseSequence::from_frames(Array({4, 6}))),
                  std::invalid_argument);
}

TEST_CASE("permuting labels and output units permutes the confusion matrix") {
  ToyCorpus noisy = toy_corpus(3, 16, 99);  // held-out draws give off-diagonal counts too
  noisy.labels[0] = 3;
  const StyleClassifier& clf = toy_classifier();
  const int perm[5] = {2, 0, 4, 1, 3};
  StyleClassifier permuted = clf;
  Array& w = permuted.params.at("cls.out.w");
  Array& b = permuted.params.at("cls.out.b");
  const Array w0 = clf.params.at("cls.out.w"), b0 = clf.params.at("cls.out.b");
  for (std::size_t k = 0; k < 5; ++k) {
    b[static_cast<std::size_t>(perm[k])] = b0[k];
    for (std::size_t r = 0; r < w.dim(0); ++r) w.at(r, static_cast<std::size_t>(perm[k])) = w0.at(r, k);
  }
  std::vector<int> labels2;
  for (int l : noisy.labels) labels2.push_back(perm[l]);
  const auto m = confusion_matrix(clf, noisy.sequences, noisy.labels);
  const auto m2 = confusion_matrix(permuted, noisy.sequences, labels2);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(m2[static_cast<std::size_t>(perm[i])][static_cast<std::size_t>(perm[j])] == m[i][j]);
}

TEST_CASE("style classifier save and load round trip") {
  const auto path = std::filesystem::temp_directory_path() / "tsmt_classifier_test.bin";
  const StyleClassifier& clf = toy_classifier();
  save_classifier(path, clf);
  const StyleClassifier back = load_classifier(path);
  CHECK(back.config == clf.config);
  CHECK(back.params == clf.params);
  CHECK(back.class_names == clf.class_names);
  CHECK(back.epoch_loss == clf.epoch_loss);
  const PoseSequence s = neutral_pose(16);
  CHECK(classifier_features(back, s) == classifier_features(clf, s));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_classifier(path), std::runtime_error);
}

namespace {

std::vector<EvalSequence> as_eval(const std::vector<PoseSequence>& poses, const std::string& prefix) {
  std::vector<EvalSequence> out;
  for (std::size_t i = 0; i < poses.size(); ++i)
    out.push_back({prefix + std::to_string(i), "music" + std::to_string(i / 2), "", poses[i], std::nullopt});
  return out;
}

}  // namespace

TEST_CASE("report of a reference set against itself") {
  Rng rng(12);
  std::vector<PoseSequence> poses;
  for (int i = 0; i < 6; ++i) poses.push_back(random_pose(40, rng, 0.03));
  auto ref = as_eval(poses, "ref");
  auto gen = ref;
  for (auto& g : gen) {
    g.reference_id = g.id;
    g.music_beats = extract_motion_beats(g.pose);
  }
  MetricOptions opts;
  opts.chunk_frames = 20;
  const MetricReport r = evaluate(gen, ref, &toy_classifier(), opts);
  CHECK(r.generated == 6);
  CHECK(r.fid.defined);
  CHECK(std::abs(r.fid.value) < 1e-8);
  CHECK(r.motion_vs_reference.pairs == 6);
  CHECK(r.motion_vs_reference.mean.f_score == 1.0);
  CHECK(r.music_vs_motion.mean.f_score == 1.0);
  CHECK(r.a_seq_d.defined);
  CHECK(r.a_seq_d.value > 0.0);
  CHECK(r.i_seq_d.defined);
  CHECK(r.s_music_d.defined);
  CHECK(r.feature_dim == 16);
  double auth = 0.0;
  for (const auto& p : poses) auth += authenticity(p, opts.limits) / 6.0;
  CHECK(r.authenticity == doctest::Approx(auth).epsilon(1e-14));

  const auto j = report_to_json(r);
  CHECK(j.at("fid").at("defined") == true);
  CHECK(j.at("config").at("joint_limits").size() == kInteriorJoints);
  const std::string table = report_table(r);
  CHECK(table.find("FID") != std::string::npos);
  CHECK(table.find("S-music-D") != std::string::npos);
}

TEST_CASE("single generated sequence reports plausibility and flags pairwise metrics") {
  const std::vector<EvalSequence> gen{{"g0", "", "", neutral_pose(30), std::nullopt}};
  const MetricReport r = evaluate(gen, {}, &toy_classifier());
  CHECK(r.authenticity == 1.0);
  CHECK(r.coherence == 1.0);
  CHECK_FALSE(r.fid.defined);
  CHECK_FALSE(r.a_seq_d.defined);
  CHECK_FALSE(r.i_seq_d.defined);
  CHECK_FALSE(r.s_music_d.defined);
  CHECK_FALSE(r.motion_vs_reference.defined());
  CHECK(r.warnings.size() >= 4);
  CHECK(report_table(r).find("n/a") != std::string::npos);
  CHECK(report_to_json(r).at("a_seq_d").at("value").is_null());
  const MetricReport bare = evaluate(gen, {}, nullptr);
  CHECK(bare.feature_dim == 0);
  CHECK_THROWS_AS(evaluate({}, {}, nullptr), std::invalid_argument);
  const std::vector<EvalSequence> wrong{{"w", "", "", PoseSequence::from_frames(Array({5, 6})), std::nullopt}};
  CHECK_THROWS_AS(evaluate(wrong, {}, nullptr), std::invalid_argument);
}

TEST_CASE("report scores stay in range for arbitrary valid inputs") {
  Rng rng(31);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<PoseSequence> poses;
    const std::size_t n = 1 + rng.below(5);
    for (std::size_t i = 0; i < n; ++i) poses.push_back(random_pose(3 + rng.below(40), rng, rng.uniform(0.0, 0.5)));
    auto gen = as_eval(poses, "g");
    for (auto& g : gen) g.music_beats = random_beats(rng, g.pose.frame_count(), 0.2);
    MetricOptions opts;
    opts.chunk_frames = 8;
    opts.diversity_pairs = 50;
    const MetricReport r = evaluate(gen, gen, &toy_classifier(), opts);
    CHECK((r.authenticity >= 0.0 && r.authenticity <= 1.0));
    CHECK((r.coherence >= 0.0 && r.coherence <= 1.0));
    for (const BeatSummary* b : {&r.motion_vs_reference, &r.music_vs_motion}) {
      CHECK((b->mean.precision >= 0.0 && b->mean.precision <= 1.0));
      CHECK((b->mean.recall >= 0.0 && b->mean.recall <= 1.0));
      CHECK((b->mean.f_score >= 0.0 && b->mean.f_score <= 1.0));
    }
    for (const Score* s : {&r.fid, &r.a_seq_d, &r.i_seq_d, &r.s_music_d}) CHECK(s->value >= 0.0);
  }
}

TEST_CASE("plausibility means of fully valid sets are exactly one") {
  for (std::size_t n = 1; n <= 40; ++n) {
    std::vector<PoseSequence> poses(n, neutral_pose(5));
    const MetricReport r = evaluate(as_eval(poses, "g"), {}, nullptr);
    CHECK(r.authenticity == 1.0);
    CHECK(r.coherence == 1.0);
  }
}
