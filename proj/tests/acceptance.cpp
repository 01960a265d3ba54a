// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "cli/commands.hpp"
#include "gradcheck.hpp"
#include "model_fixtures.hpp"
#include "tsmt/io.hpp"
#include "tsmt/metrics/kinematics.hpp"
#include "tsmt/metrics/scores.hpp"
#include "tsmt/model/inference.hpp"
#include "tsmt/model/train.hpp"
#include "tsmt/motion/filters.hpp"
#include "tsmt/motion/quantize.hpp"
#include "tsmt/sampler/sampler.hpp"

using namespace tsmt;
namespace fs = std::filesystem;
using testing::check_gradient;
using testing::project;
using testing::random_array;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

using OpCase = std::function<testing::GradCheck(Rng&, std::uint64_t)>;

std::size_t small(Rng& rng) { return 1 + rng.below(6); }

std::map<std::string, OpCase> op_cases() {
  std::map<std::string, OpCase> c;
  c["matmul"] = [](Rng& r, std::uint64_t t) {
    const std::size_t m = small(r), k = small(r), n = small(r);
    return check_gradient([t](ad::Graph& g, const auto& x) { return project(g, ad::matmul(x[0], x[1]), t); },
                          {random_array(r, {m, k}), random_array(r, {k, n})});
  };
  c["add/sub/mul/scale/add_row"] = [](Rng& r, std::uint64_t t) {
    const std::size_t m = small(r), n = small(r);
    return check_gradient(
        [t](ad::Graph& g, const auto& x) {
          return project(g, ad::add_row(ad::add(ad::mul(x[0], x[1]), ad::sub(x[0], ad::scale(x[1], 0.7))), x[2]), t);
        },
        {random_array(r, {m, n}), random_array(r, {m, n}), random_array(r, {n})});
  };
  c["relu"] = [](Rng& r, std::uint64_t t) {
    Array x = random_array(r, {small(r), small(r)});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += x[i] >= 0 ? 0.1 : -0.1;
    return check_gradient([t](ad::Graph& g, const auto& v) { return project(g, ad::relu(v[0]), t); }, {x});
  };
  c["softmax/log_softmax"] = [](Rng& r, std::uint64_t t) {
    return check_gradient(
        [t](ad::Graph& g, const auto& x) {
          return ad::add(project(g, ad::softmax(x[0]), t), project(g, ad::log_softmax(x[0]), t + 1));
        },
        {random_array(r, {small(r), small(r)}, -3, 3)});
  };
  c["layer_norm"] = [](Rng& r, std::uint64_t t) {
    const std::size_t m = small(r), n = 2 + r.below(6);
    return check_gradient(
        [t](ad::Graph& g, const auto& x) { return project(g, ad::layer_norm(x[0], x[1], x[2]), t); },
        {random_array(r, {m, n}, -2, 2), random_array(r, {n}), random_array(r, {n})});
  };
  c["conv1d_causal"] = [](Rng& r, std::uint64_t t) {
    const std::size_t T = small(r), cin = small(r), cout = small(r), K = 1 + r.below(3);
    return check_gradient(
        [t](ad::Graph& g, const auto& x) { return project(g, ad::conv1d_causal(x[0], x[1], x[2]), t); },
        {random_array(r, {T, cin}), random_array(r, {K, cin, cout}), random_array(r, {cout})});
  };
  c["embed"] = [](Rng& r, std::uint64_t t) {
    const std::size_t V = 2 + r.below(6), D = small(r), rows = small(r), cols = small(r);
    std::vector<int> toks(rows * cols);
    for (int& k : toks) k = static_cast<int>(r.below(V));
    const bool by_column = r.below(2) == 1;
    return check_gradient(
        [=](ad::Graph& g, const auto& x) { return project(g, ad::embed(x[0], toks, rows, cols, by_column), t); },
        {random_array(r, by_column ? Shape{D, V} : Shape{V, D})});
  };
  c["concat/slice/transpose/reshape"] = [](Rng& r, std::uint64_t t) {
    const std::size_t m = 2 + r.below(5), n = 2 + r.below(5);
    return check_gradient(
        [=](ad::Graph& g, const auto& x) {
          const ad::Var cols[] = {x[0], x[1]};
          const ad::Var rows[] = {ad::slice_cols(ad::concat_cols(cols), 1, n), ad::slice_rows(x[1], 0, 1)};
          ad::Var tr = ad::transpose(ad::concat_rows(rows));
          return project(g, ad::reshape(tr, {tr.value().size()}), t);
        },
        {random_array(r, {m, n}), random_array(r, {m, n})});
  };
  c["dropout (fixed mask)"] = [](Rng& r, std::uint64_t t) {
    return check_gradient(
        [t](ad::Graph& g, const auto& x) {
          g.training = true;
          return project(g, ad::dropout(x[0], 0.3), t);
        },
        {random_array(r, {small(r), small(r)})});
  };
  c["causal_mask/cross_entropy/nll/sum/mean"] = [](Rng& r, std::uint64_t) {
    const std::size_t T = small(r), d = small(r), C = 2 + r.below(6);
    std::vector<int> targets(T);
    for (int& k : targets) k = static_cast<int>(r.below(C));
    return check_gradient(
        [=](ad::Graph&, const auto& x) {
          ad::Var p = ad::softmax(ad::causal_mask(ad::scale(ad::matmul(x[0], ad::transpose(x[1])), 0.5)));
          ad::Var logits = ad::matmul(ad::matmul(p, x[2]), x[3]);
          return ad::add(ad::add(ad::cross_entropy(logits, targets), ad::nll(ad::log_softmax(logits), targets)),
                         ad::add(ad::mean(p), ad::scale(ad::sum(x[2]), 0.1)));
        },
        {random_array(r, {T, d}), random_array(r, {T, d}), random_array(r, {T, d}), random_array(r, {d, C})});
  };
  return c;
}

Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_op;
  std::uint64_t base = 1;
  for (const auto& [name, make] : op_cases()) {
    for (std::uint64_t trial = 0; trial < 25; ++trial) {
      Rng rng = Rng(base).split(trial);
      const double e = make(rng, trial).max_rel_error;
      if (e > worst) worst = e, worst_op = name;
    }
    ++base;
  }
  double model_err = 0.0;
  for (bool use_audio : {true, false}) {
    const model::TSMTConfig c = testing::micro_config(use_audio);
    const ParamMap p = testing::random_parameters(c, 21);
    Rng rng(22);
    const std::vector<model::Example> batch = {testing::random_example(c, 4, rng), testing::random_example(c, 4, rng)};
    const auto lg = model::loss_and_gradient(c, p, batch, 0, false);
    const auto check = testing::check_parameter_gradient(
        p, lg.gradients, [&](const ParamMap& q) { return model::training_loss(c, q, batch); });
    model_err = std::max(model_err, check.max_rel_error);
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && model_err < 1e-4 && secs < 120.0,
          fmt("worst op rel err %.2e (%s), micro model rel err %.2e, %.1f s", worst, worst_op.c_str(), model_err,
              secs)};
}

// ---------------------------------------------------------------------------

Outcome causality_suite() {
  const model::TSMTConfig c = testing::micro_config();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    const ParamMap p = testing::random_parameters(c, seed);
    const std::size_t T = 6;
    const model::Example ex = testing::random_example(c, T, rng);
    const std::size_t t = rng.below(T);
    model::Example pert = ex;
    for (std::size_t s = t; s < T; ++s)
      for (std::size_t d = 0; d < c.dims(); ++d) pert.tokens[s * c.dims() + d] = static_cast<int>(rng.below(c.bins));
    for (std::size_t s = t + 1; s < T; ++s) {
      for (std::size_t k = 0; k < c.audio_features; ++k) pert.audio.at(s, k) = rng.uniform(-3, 3);
      pert.beat[s] ^= 1;
    }
    const Array a = model::log_probs(c, p, ex), b = model::log_probs(c, p, pert);
    const std::size_t row = c.dims() * static_cast<std::size_t>(c.bins);
    for (std::size_t i = 0; i < (t + 1) * row; ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return {worst < 1e-12, fmt("max change of unaffected logits %.2e over 100 seeds", worst)};
}

// ---------------------------------------------------------------------------

Outcome overfit_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  model::TSMTConfig c;
  c.pose = {32, 16, 2, 2};
  c.audio = {16, 8, 2, 1};
  c.beat_embed_dim = 8;
  c.dropout = 0.0;
  c.max_context = 32;
  c.batch_size = 4;
  c.learning_rate = 3e-3;
  const std::size_t T = 32, sequences = 4;

  // Smooth joint trajectories with per-sequence frequencies and phases.
  Rng rng(99);
  std::vector<motion::PoseSequence> poses;
  std::vector<audio::AudioFeatureSequence> music;
  for (std::size_t s = 0; s < sequences; ++s) {
    Array frames({T, motion::kDims});
    std::vector<double> freq(motion::kDims), phase(motion::kDims), amp(motion::kDims);
    for (std::size_t d = 0; d < motion::kDims; ++d) {
      freq[d] = rng.uniform(0.3, 1.5);
      phase[d] = rng.uniform(0.0, 6.283185307179586);
      amp[d] = rng.uniform(0.1, 0.5);
    }
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < motion::kDims; ++d)
        frames.at(t, d) = amp[d] * std::sin(6.283185307179586 * freq[d] * static_cast<double>(t) / 24.0 + phase[d]);
    poses.push_back(motion::PoseSequence::from_frames(std::move(frames)));
    audio::AudioFeatureSequence a;
    a.mfcc = random_array(rng, {T, c.audio_features});
    for (std::size_t t = 0; t < T; ++t) a.beat.push_back(t % 8 == 0 ? 1 : 0);
    music.push_back(std::move(a));
  }
  model::Checkpoint state = model::initial_checkpoint(c, 5);
  state.quantization = motion::fit_quantization_spec(poses, c.bins);
  state.mean_pose.assign(c.dims(), 0.0);
  std::vector<model::Example> data;
  std::vector<motion::QuantizedPoseSequence> quantized;
  for (std::size_t s = 0; s < sequences; ++s) {
    quantized.push_back(motion::quantize(poses[s], state.quantization));
    data.push_back(model::make_example(quantized.back(), &music[s]));
  }

  double acc = 0.0;
  while (state.epochs_completed < 500) {
    model::train(state, data, {.epochs = state.epochs_completed + 25});
    acc = model::argmax_accuracy(c, state.params, data);
    if (acc >= 0.99) break;
  }

  std::size_t hit = 0, total = 0;
  for (std::size_t s = 0; s < sequences; ++s) {
    sampler::GenerationRequest req;
    req.audio = music[s];
    req.length = T;
    req.sampling.top_k = 1;
    req.seed_pose = motion::dequantize({std::vector<int>(quantized[s].frame(0).begin(), quantized[s].frame(0).end()),
                                        1, state.quantization, 0});
    const auto res = sampler::generate(req, state);
    for (std::size_t i = c.dims(); i < T * c.dims(); ++i) {
      hit += res.tokens.tokens[i] == quantized[s].tokens[i];
      ++total;
    }
  }
  const double reproduced = static_cast<double>(hit) / static_cast<double>(total);
  const double secs = seconds_since(start);
  return {acc >= 0.99 && reproduced >= 0.99 && secs < 900.0,
          fmt("teacher-forced argmax accuracy %.4f after %zu epochs, generated tokens reproduced %.4f, %.1f s", acc,
              state.epochs_completed, reproduced, secs)};
}

// ---------------------------------------------------------------------------

// Applies (I + lambda D^T D) to a trend directly from the second-difference definition.
std::vector<double> apply_normal_operator(const std::vector<double>& z, double lambda) {
  const std::size_t n = z.size();
  std::vector<double> out = z;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const double d = z[k] - 2.0 * z[k + 1] + z[k + 2];
    out[k] += lambda * d;
    out[k + 1] -= 2.0 * lambda * d;
    out[k + 2] += lambda * d;
  }
  return out;
}

Outcome hp_filter_checks() {
  Rng rng(4);
  double residual = 0.0, linear = 0.0;
  for (std::size_t n : {3u, 4u, 10u, 101u, 500u, 1000u}) {
    for (double lambda : {0.0, 1.0, 100.0, 1600.0}) {
      std::vector<double> x(n);
      for (double& v : x) v = rng.uniform(-1, 1);
      const auto r = motion::hp_filter(x, lambda);
      const auto lhs = apply_normal_operator(r.trend, lambda);
      for (std::size_t i = 0; i < n; ++i) residual = std::max(residual, std::abs(lhs[i] - x[i]));
    }
    for (double lambda : {0.0, 1.0, 100.0}) {
      std::vector<double> x(n);
      const double a = rng.uniform(-2, 2), b = rng.uniform(-0.1, 0.1);
      for (std::size_t i = 0; i < n; ++i) x[i] = a + b * static_cast<double>(i);
      const auto r = motion::hp_filter(x, lambda);
      for (std::size_t i = 0; i < n; ++i) linear = std::max(linear, std::abs(r.trend[i] - x[i]));
    }
  }
  return {residual < 1e-8 && linear < 1e-10,
          fmt("max normal-equation residual %.2e, max linear-input deviation %.2e", residual, linear)};
}

// ---------------------------------------------------------------------------

std::size_t optimal_matches(const std::vector<std::size_t>& ref, const std::vector<std::size_t>& cand,
                            std::size_t tol) {
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
    m += augment(r, seen);
  }
  return m;
}

Outcome beat_metric_oracle() {
  const std::vector<std::size_t> ref{10, 20, 30}, cand{11, 19, 35};
  const auto s = metrics::beat_scores(ref, cand, 2);
  const bool hand = s.precision == 2.0 / 3.0 && s.recall == 2.0 / 3.0 && std::abs(s.f_score - 2.0 / 3.0) < 1e-15;
  Rng rng(2024);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t tol = rng.below(4);
    std::vector<std::size_t> r, c;
    for (std::size_t t = rng.below(5); t < 80; t += 2 * tol + 1 + rng.below(8)) r.push_back(t);
    const double p = rng.uniform(0.02, 0.3);
    for (std::size_t t = 0; t < 80; ++t)
      if (rng.uniform() < p) c.push_back(t);
    agree += metrics::beat_scores(r, c, tol).matches == optimal_matches(r, c, tol);
  }
  return {hand && agree == 1000,
          fmt("hand case P=%.6f R=%.6f F=%.6f, %d/1000 fuzz cases match the optimal matching", s.precision, s.recall,
              s.f_score, agree)};
}

// ---------------------------------------------------------------------------

Array gaussian_set(std::size_t n, double mx, double my, Rng& rng) {
  Array a({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    a.at(i, 0) = mx + rng.normal();
    a.at(i, 1) = my + rng.normal();
  }
  return a;
}

Outcome fid_checks() {
  Rng rng(77);
  const Array x = gaussian_set(200, 0.5, -1.0, rng);
  const double same = metrics::fid(x, x);
  const metrics::Moments ma{{0.0, 0.0}, Array({2, 2}, std::vector<double>{1, 0, 0, 1})};
  const metrics::Moments mb{{3.0, 4.0}, Array({2, 2}, std::vector<double>{1, 0, 0, 1})};
  const double exact = metrics::frechet_distance(ma, mb);
  const double sampled = metrics::fid(gaussian_set(10000, 0, 0, rng), gaussian_set(10000, 3, 4, rng));
  return {std::abs(same) < 1e-8 && exact == 25.0 && std::abs(sampled - 25.0) < 0.05 * 25.0,
          fmt("identical %.2e, exact moments %.17g, N=1e4 samples %.4f", same, exact, sampled)};
}

// ---------------------------------------------------------------------------

Outcome plausibility() {
  const auto limits = metrics::JointLimitTable::defaults();
  const auto still = metrics::neutral_pose(100);
  const double a1 = metrics::authenticity(still, limits), c1 = metrics::coherence(still, limits);
  // One frame in ten with the left ankle folded back onto the thigh (knee angle 0).
  auto ten = metrics::neutral_pose(10);
  ten.frames.at(6, 3 * motion::kLeftAnkle) = 0.125;
  ten.frames.at(6, 3 * motion::kLeftAnkle + 1) = -0.22;
  ten.frames.at(6, 3 * motion::kLeftAnkle + 2) = 0.01;
  const double a2 = metrics::authenticity(ten, limits);
  return {a1 == 1.0 && c1 == 1.0 && a2 == 0.9,
          fmt("static authenticity %.17g coherence %.17g, one violating frame in ten %.17g", a1, c1, a2)};
}

// ---------------------------------------------------------------------------

Outcome sampling_checks() {
  model::Checkpoint ck;
  ck.config = testing::micro_config();
  ck.params = testing::random_parameters(ck.config, 3, 0.7);
  ck.quantization = {std::vector<double>(ck.config.dims(), -1.0), std::vector<double>(ck.config.dims(), 1.0),
                     ck.config.bins};
  ck.mean_pose.assign(ck.config.dims(), 0.1);
  Rng rng(4);
  const std::size_t L = 14, F = ck.config.audio_features;
  sampler::GenerationRequest req;
  req.length = L;
  req.seed = 5;
  req.audio.mfcc = random_array(rng, {L, F}, -2, 2);
  for (std::size_t t = 0; t < L; ++t) req.audio.beat.push_back(t % 4 == 0 ? 1 : 0);
  const auto res = sampler::generate(req, ck);

  double cache_diff = 0.0;
  for (std::size_t t = 0; t < L; ++t) {
    model::Example ex;
    ex.frames = t + 1;
    ex.tokens.assign(res.tokens.tokens.begin(), res.tokens.tokens.begin() + static_cast<std::ptrdiff_t>((t + 1) * ck.config.dims()));
    ex.audio = Array({t + 1, F}, std::vector<double>(req.audio.mfcc.data(), req.audio.mfcc.data() + (t + 1) * F));
    ex.beat.assign(req.audio.beat.begin(), req.audio.beat.begin() + static_cast<std::ptrdiff_t>(t + 1));
    const Array full = model::log_probs(ck.config, ck.params, ex);
    model::Decoder dec(ck.config, ck.params);
    for (std::size_t s = 0; s <= t; ++s) {
      dec.push_audio(std::span(req.audio.mfcc.data() + s * F, F), req.audio.beat[s]);
      if (s < t) dec.push_pose(std::span(res.tokens.tokens).subspan(s * ck.config.dims(), ck.config.dims()));
    }
    const Array cached = dec.next_log_probs();
    for (std::size_t i = 0; i < cached.size(); ++i)
      cache_diff = std::max(cache_diff, std::abs(cached[i] - full[t * cached.size() + i]));
  }

  const fs::path dir = fs::temp_directory_path() / "tsmt_acceptance_sampling";
  fs::create_directories(dir);
  motion::write_pose_file(dir / "a.pose.json", res.poses);
  motion::write_pose_file(dir / "b.pose.json", sampler::generate(req, ck).poses);
  const bool reproducible = io::read_file(dir / "a.pose.json") == io::read_file(dir / "b.pose.json");
  fs::remove_all(dir);

  Rng draw(2);
  const std::vector<double> lp(300, -std::log(300.0));
  std::vector<int> counts(300, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sampler::sample_categorical(lp, 1.0, 0, draw))];
  const double p = 1.0 / 300.0, sigma = std::sqrt(n * p * (1 - p));
  double worst_z = 0.0;
  for (int k : counts) worst_z = std::max(worst_z, std::abs(k - n * p) / sigma);

  return {cache_diff < 1e-6 && reproducible && worst_z < 5.0,
          fmt("cached vs full max diff %.2e, fixed-seed output %s, worst bin %.2f sigma", cache_diff,
              reproducible ? "byte-identical" : "DIFFERS", worst_z)};
}

// ---------------------------------------------------------------------------

struct CliResult {
  int code;
  std::string out, err;
};

CliResult tsmt_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

Outcome training_recipe() {
  const fs::path root = fs::path(TSMT_ACCEPTANCE_DIR) / "recipe";
  fs::remove_all(root);
  fs::create_directories(root);
  // Default recipe (lr 1e-4, decay 0.3 at epoch 200) on a tiny model and corpus.
  io::write_file_atomic(root / "recipe.toml",
                        "[model]\nbins = 30\npose_model_dim = 8\npose_head_dim = 4\npose_heads = 2\npose_blocks = 1\n"
                        "audio_model_dim = 8\naudio_head_dim = 4\naudio_heads = 2\naudio_blocks = 1\n"
                        "beat_embed_dim = 4\nmax_context = 12\nbatch_size = 32\n"
                        "[preprocess]\nsegment_length = 12\nsegment_stride = 12\n");
  const std::string cfg = (root / "recipe.toml").string();
  bool ok = tsmt_cli({"synth", "--out", (root / "raw").string(), "--sources", "1", "--seconds", "2", "--config", cfg})
                .code == 0;
  ok = ok && tsmt_cli({"preprocess", "--input", (root / "raw").string(), "--out", (root / "data").string(),
                       "--config", cfg})
                 .code == 0;
  ok = ok && tsmt_cli({"train", "--manifest", (root / "data" / "manifest.jsonl").string(), "--out",
                       (root / "run").string(), "--epochs", "201", "--config", cfg})
                 .code == 0;
  if (!ok) return {false, "tiny training run failed"};

  std::istringstream log(io::read_file(root / "run" / "train_log.csv"));
  std::string line;
  std::getline(log, line);
  std::map<std::size_t, double> lr;
  while (std::getline(log, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    lr[std::stoul(line.substr(0, a))] = io::parse_double(line.substr(b + 1), "learning_rate");
  }
  bool schedule = lr.size() == 201;
  for (const auto& [epoch, rate] : lr) schedule = schedule && rate == (epoch < 200 ? 1e-4 : 3e-5);

  // Untrained loss at the full default configuration.
  const model::TSMTConfig full;
  const ParamMap params = model::init_parameters(full, 1);
  Rng rng(2);
  const std::vector<model::Example> batch = {testing::random_example(full, 6, rng)};
  const double untrained = model::training_loss(full, params, batch);
  const double gap = std::abs(untrained - std::log(300.0));
  return {schedule && gap < 1e-6,
          fmt("logged lr at epochs 199/200: %.17g / %.17g over %zu epochs, |untrained loss - ln 300| = %.2e",
              lr.count(199) ? lr[199] : NAN, lr.count(200) ? lr[200] : NAN, lr.size(), gap)};
}

// ---------------------------------------------------------------------------

double incremental_mean_nll(const model::TSMTConfig& c, const ParamMap& p, const model::Example& ex) {
  model::Decoder dec(c, p);
  double total = 0.0;
  for (std::size_t t = 0; t < ex.frames; ++t) {
    if (c.use_audio) dec.push_audio(std::span(ex.audio.data() + t * c.audio_features, c.audio_features), ex.beat[t]);
    const Array lp = dec.next_log_probs();
    for (std::size_t d = 0; d < c.dims(); ++d) total -= lp.at(d, static_cast<std::size_t>(ex.tokens[t * c.dims() + d]));
    dec.push_pose(std::span(ex.tokens).subspan(t * c.dims(), c.dims()));
  }
  return total / static_cast<double>(ex.frames * c.dims());
}

Outcome parallel_incremental() {
  double worst = 0.0;
  for (bool use_audio : {true, false}) {
    const model::TSMTConfig c = testing::micro_config(use_audio);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const ParamMap p = testing::random_parameters(c, 25 + seed);
      Rng rng(100 + seed);
      const model::Example ex = testing::random_example(c, 1 + rng.below(c.max_context), rng);
      const std::vector<model::Example> one = {ex};
      worst = std::max(worst, std::abs(model::training_loss(c, p, one) - incremental_mean_nll(c, p, ex)));
    }
  }
  return {worst < 1e-10, fmt("max |parallel - incremental| = %.2e over 20 sequences", worst)};
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  return files;
}

bool pipeline_once(const fs::path& root, std::string& failure) {
  fs::remove_all(root);
  const std::string cfg = (fs::path(TSMT_SOURCE_DIR) / "configs" / "toy.toml").string();
  const std::vector<std::vector<std::string>> steps = {
      {"synth", "--out", (root / "raw").string(), "--sources", "3", "--seconds", "8"},
      {"preprocess", "--input", (root / "raw").string(), "--out", (root / "data").string()},
      {"train", "--manifest", (root / "data" / "manifest.jsonl").string(), "--out", (root / "model").string(),
       "--epochs", "5"},
      {"train-classifier", "--manifest", (root / "data" / "manifest.jsonl").string(), "--out",
       (root / "model" / "classifier.bin").string()},
      {"generate", "--checkpoint", (root / "model" / "checkpoint.tsmt").string(), "--audio",
       (root / "raw" / "src000.wav").string(), "--beats", (root / "raw" / "src000.beats.txt").string(), "--out",
       (root / "gen").string(), "--samples", "2", "--quiet"},
      {"evaluate", "--generated", (root / "gen").string(), "--reference", (root / "data" / "segments").string(),
       "--classifier", (root / "model" / "classifier.bin").string(), "--out", (root / "eval").string()},
  };
  for (auto args : steps) {
    args.insert(args.end(), {"--config", cfg, "--seed", "11"});
    const auto r = tsmt_cli(args);
    if (r.code != 0) {
      failure = args[0] + ": " + r.err;
      return false;
    }
  }
  return true;
}

Outcome pipeline_determinism() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path base = fs::path(TSMT_ACCEPTANCE_DIR) / "pipeline";
  std::string failure;
  if (!pipeline_once(base / "a", failure) || !pipeline_once(base / "b", failure)) return {false, failure};
  const auto a = snapshot(base / "a"), b = snapshot(base / "b");
  std::size_t differ = 0;
  for (const auto& [name, bytes] : a) differ += !b.contains(name) || b.at(name) != bytes;
  return {differ == 0 && a.size() == b.size(),
          fmt("%zu files compared, %zu differ, %.1f s", a.size(), differ, seconds_since(start))};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "gradient suite", gradient_suite},
      {2, "causality suite", causality_suite},
      {3, "overfit reproduction", overfit_reproduction},
      {4, "hp filter", hp_filter_checks},
      {5, "beat metric oracle", beat_metric_oracle},
      {6, "fid", fid_checks},
      {7, "plausibility", plausibility},
      {8, "sampling", sampling_checks},
      {9, "training-recipe conformance", training_recipe},
      {10, "parallel/incremental equivalence", parallel_incremental},
      {11, "pipeline determinism", pipeline_determinism},
  };
  // Optional argument: run a single criterion by number.
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %-34s %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
