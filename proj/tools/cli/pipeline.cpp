#include <omp.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "cli/commands.hpp"
#include "json.hpp"
#include "tsmt/audio/beats.hpp"
#include "tsmt/audio/mfcc.hpp"
#include "tsmt/audio/wav.hpp"
#include "tsmt/io.hpp"
#include "tsmt/metrics/classifier.hpp"
#include "tsmt/metrics/kinematics.hpp"
#include "tsmt/model/train.hpp"
#include "tsmt/motion/filters.hpp"
#include "tsmt/motion/quantize.hpp"
#include "tsmt/motion/segment.hpp"
#include "tsmt/numerics/rng.hpp"

namespace tsmt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kStyleNames[5] = {"sway", "bounce", "arms", "kick", "twist"};
constexpr double kPi = std::numbers::pi;

void shift_joint(Array& f, std::size_t t, std::size_t joint, double dx, double dy, double dz) {
  f.at(t, 3 * joint) += dx;
  f.at(t, 3 * joint + 1) += dy;
  f.at(t, 3 * joint + 2) += dz;
}

// Rotates a joint about the vertical axis through the thorax.
void twist_joint(Array& f, std::size_t t, std::size_t joint, double angle) {
  const double x = f.at(t, 3 * joint), z = f.at(t, 3 * joint + 2);
  f.at(t, 3 * joint) = std::cos(angle) * x + std::sin(angle) * z;
  f.at(t, 3 * joint + 2) = -std::sin(angle) * x + std::cos(angle) * z;
}

motion::PoseSequence synth_pose(int style, std::size_t frames, double fps, double offset, double period, Rng& rng) {
  using namespace motion;
  PoseSequence seq = metrics::neutral_pose(frames, fps);
  Array& f = seq.frames;
  const std::size_t upper[] = {kSpine, kThorax, kNeck, kHead, kLeftShoulder, kLeftElbow, kLeftWrist,
                               kRightShoulder, kRightElbow, kRightWrist};
  for (std::size_t t = 0; t < frames; ++t) {
    const double time = static_cast<double>(t) / fps;
    const double phase = 2.0 * kPi * (time - offset) / period;
    const double lift = 0.5 * (1.0 - std::cos(phase));  // 0 on the beat, 1 between beats
    switch (style) {
      case 0:
        for (std::size_t j : upper) shift_joint(f, t, j, 0.06 * std::sin(phase / 2.0), 0.0, 0.0);
        break;
      case 1:
        for (std::size_t j = 0; j < kJoints; ++j)
          if (j != kRightAnkle && j != kLeftAnkle) shift_joint(f, t, j, 0.0, -0.05 * (1.0 - lift), 0.0);
        shift_joint(f, t, kRightKnee, 0.0, 0.0, 0.06 * (1.0 - lift));
        shift_joint(f, t, kLeftKnee, 0.0, 0.0, 0.06 * (1.0 - lift));
        break;
      case 2:
        for (std::size_t j : {kLeftWrist, kRightWrist}) shift_joint(f, t, j, 0.0, 0.3 * lift, 0.12 * lift);
        for (std::size_t j : {kLeftElbow, kRightElbow}) shift_joint(f, t, j, 0.0, 0.08 * lift, 0.06 * lift);
        break;
      case 3: {
        const bool left = static_cast<long>(std::floor((time - offset) / period)) % 2 == 0;
        const double kick = std::max(0.0, std::sin(phase));
        shift_joint(f, t, left ? kLeftAnkle : kRightAnkle, 0.0, 0.15 * kick, 0.25 * kick);
        shift_joint(f, t, left ? kLeftKnee : kRightKnee, 0.0, 0.05 * kick, 0.12 * kick);
        break;
      }
      default:
        for (std::size_t j : upper) twist_joint(f, t, j, 0.45 * std::sin(phase / 2.0));
        break;
    }
    // Wandering root, removed again by preprocessing, plus sensor jitter.
    const double drift = 0.2 * std::sin(0.3 * time);
    for (std::size_t j = 0; j < kJoints; ++j) {
      shift_joint(f, t, j, drift + 0.003 * rng.normal(), 0.003 * rng.normal(), 0.1 * time + 0.003 * rng.normal());
    }
  }
  return seq;
}

audio::PcmAudio synth_audio(int style, double seconds, int rate, const std::vector<double>& beats, Rng& rng) {
  audio::PcmAudio a;
  a.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  a.samples.resize(n);
  const double tone = 220.0 * (1.0 + 0.25 * style);
  for (std::size_t i = 0; i < n; ++i) {
    a.samples[i] = 0.1 * std::sin(2.0 * kPi * tone * static_cast<double>(i) / rate) + 0.01 * rng.normal();
  }
  const auto click = static_cast<std::size_t>(0.08 * rate);
  for (double b : beats) {
    const auto start = static_cast<std::size_t>(std::llround(b * rate));
    for (std::size_t k = 0; k < click && start + k < n; ++k) {
      const double u = static_cast<double>(k) / rate;
      a.samples[start + k] += 0.6 * std::exp(-u / 0.01) * std::sin(2.0 * kPi * 1000.0 * u);
    }
  }
  return a;
}

std::string beats_text(const std::vector<double>& beats) {
  std::string out;
  for (double b : beats) out += io::format_double(b) + "\n";
  return out;
}

std::string strip_suffix(const std::string& name, const std::string& suffix) {
  return name.ends_with(suffix) ? name.substr(0, name.size() - suffix.size()) : name;
}

struct Prepared {
  std::string id;
  motion::PoseSequence pose;
  audio::AudioFeatureSequence audio;
  int style = -1;
  std::string error;
  motion::Warnings warnings;
};

Prepared prepare_source(const fs::path& pose_path, const RunConfig& c) {
  Prepared p;
  p.id = strip_suffix(pose_path.filename().string(), ".pose.json");
  try {
    const fs::path dir = pose_path.parent_path();
    const fs::path wav = dir / (p.id + ".wav"), beats = dir / (p.id + ".beats.txt");
    if (!fs::is_regular_file(wav)) throw std::invalid_argument("missing audio " + wav.string());
    const motion::PoseFile file = motion::read_pose_file(pose_path);
    const auto extras = json::parse(file.extras_json);
    p.style = extras.value("style", -1);
    const audio::PcmAudio pcm = audio::read_wav(wav);
    const double pose_seconds = static_cast<double>(file.pose.frame_count()) / file.pose.fps;
    if (std::abs(pose_seconds - pcm.duration()) > 1.0 / motion::kCanonicalFps) {
      throw std::invalid_argument("pose lasts " + io::format_double(pose_seconds) + " s but audio " +
                                  io::format_double(pcm.duration()) + " s (more than one frame apart)");
    }
    motion::PoseSequence pose = motion::hp_filter_sequence(file.pose, c.preprocess.hp_lambda, &p.warnings);
    pose = motion::resample_to_fps(pose, motion::kCanonicalFps, &p.warnings);
    p.pose = motion::root_relative(pose);

    audio::MfccOptions opts = c.audio;
    opts.fps = motion::kCanonicalFps;
    const std::size_t T = p.pose.frame_count();
    p.audio.fps = motion::kCanonicalFps;
    p.audio.mfcc = audio::append_deltas(audio::compute_mfcc(pcm.samples, pcm.sample_rate, opts, T));
    if (fs::is_regular_file(beats)) {
      p.audio.beat = audio::rasterize_beats(audio::load_beat_annotations(beats), motion::kCanonicalFps, T);
    } else {
      p.audio.beat.assign(T, 0);
      p.warnings.push_back("no beat file " + beats.string() + "; beat signal left empty");
    }
  } catch (const std::exception& e) {
    p.error = e.what();
  }
  return p;
}

std::vector<fs::path> pose_files(const std::string& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename().string().ends_with(".pose.json")) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

struct LoadedSegment {
  ManifestRecord record;
  motion::PoseSequence pose;
  audio::AudioFeatureSequence audio;
};

std::vector<LoadedSegment> load_segments(const std::string& manifest, bool (*keep)(const ManifestRecord&)) {
  const fs::path base = fs::path(manifest).parent_path();
  std::vector<LoadedSegment> out;
  for (auto& r : read_manifest(manifest)) {
    if (!keep(r)) continue;
    LoadedSegment s;
    s.pose = motion::read_pose_file(base / r.pose).pose;
    s.audio = audio::read_feature_cache(base / r.features, s.pose.fps);
    if (s.pose.frame_count() != s.audio.frame_count()) {
      throw std::invalid_argument("segment " + r.id + ": pose and feature frame counts differ");
    }
    s.record = std::move(r);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

void cmd_synth(const SynthOptions& o, const RunConfig& c, std::ostream& out) {
  fs::create_directories(o.out);
  const Rng root(c.seed);
  for (std::size_t i = 0; i < o.sources; ++i) {
    Rng rng = root.split(i);
    const int style = static_cast<int>(i % 5);
    const double bpm = 80.0 + 12.0 * style + rng.uniform(0.0, 6.0);
    const double period = 60.0 / bpm, offset = rng.uniform(0.1, 0.4);
    std::vector<double> beats;
    for (double b = offset; b < o.seconds; b += period) beats.push_back(b);
    const auto frames = static_cast<std::size_t>(std::llround(o.seconds * o.fps));
    char id[32];
    std::snprintf(id, sizeof id, "src%03zu", i);
    const fs::path dir(o.out);
    const json extras = {{"style", style}, {"style_name", kStyleNames[style]}};
    motion::write_pose_file(dir / (std::string(id) + ".pose.json"),
                            synth_pose(style, frames, o.fps, offset, period, rng), extras.dump());
    audio::write_wav16(dir / (std::string(id) + ".wav"), synth_audio(style, o.seconds, o.sample_rate, beats, rng));
    io::write_file_atomic(dir / (std::string(id) + ".beats.txt"), beats_text(beats));
  }
  out << "wrote " << o.sources << " sources to " << o.out << '\n';
}

void cmd_preprocess(const PreprocessOptions& o, const RunConfig& c, std::ostream& out, std::ostream& err) {
  c.validate();
  require_dir(o.input, "input directory");
  const auto files = pose_files(o.input);
  if (files.empty()) throw std::invalid_argument("no *.pose.json files in " + o.input);

  std::vector<Prepared> prepared(files.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < files.size(); ++i) prepared[i] = prepare_source(files[i], c);

  std::vector<motion::SourcePair> sources;
  std::map<std::string, int> styles;
  json skipped = json::array(), warnings = json::array();
  for (auto& p : prepared) {
    for (const auto& w : p.warnings) warnings.push_back(p.id + ": " + w);
    if (!p.error.empty()) {
      skipped.push_back({{"id", p.id}, {"reason", p.error}});
      continue;
    }
    styles[p.id] = p.style;
    sources.push_back({p.id, std::move(p.pose), std::move(p.audio)});
  }
  if (sources.empty()) throw std::invalid_argument("every source in " + o.input + " was skipped");

  motion::SegmentOptions seg;
  seg.length = c.preprocess.segment_length;
  seg.stride = c.preprocess.segment_stride;
  seg.train_ratio = c.preprocess.train_ratio;
  seg.seed = c.seed;
  const motion::SegmentSet set = motion::segment_dataset(sources, seg);
  for (const auto& id : set.skipped) skipped.push_back({{"id", id}, {"reason", "shorter than one segment"}});
  if (set.segments.empty()) throw std::invalid_argument("no source is long enough for one segment");

  const fs::path dir(o.out);
  std::string manifest;
  for (const auto& s : set.segments) {
    char id[96];
    std::snprintf(id, sizeof id, "%s_%06zu", s.source_id.c_str(), s.start_frame);
    ManifestRecord r{id, s.source_id, s.start_frame, s.pose.frame_count(), motion::split_name(s.split),
                     "segments/" + std::string(id) + ".pose.json", "segments/" + std::string(id) + ".features.csv",
                     styles[s.source_id]};
    json extras = {{"source_id", r.source_id}, {"start_frame", r.start_frame}};
    if (r.style >= 0) extras["style"] = r.style;
    motion::write_pose_file(dir / r.pose, s.pose, extras.dump());
    audio::write_feature_cache(dir / r.features, s.audio);
    manifest += manifest_line(r) + "\n";
  }
  io::write_file_atomic(dir / "manifest.jsonl", manifest);
  const json summary = {{"sources", files.size()},
                        {"used", sources.size()},
                        {"skipped", skipped},
                        {"segments",
                         {{"train", set.count(motion::Split::kTrain)},
                          {"validation", set.count(motion::Split::kValidation)}}},
                        {"warnings", warnings}};
  io::write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
  echo_config(o.out, c);

  out << "sources: " << files.size() << " (" << sources.size() << " used)\n"
      << "segments: " << set.count(motion::Split::kTrain) << " train, "
      << set.count(motion::Split::kValidation) << " validation\n";
  for (const auto& s : skipped) err << "skipped " << s["id"].get<std::string>() << ": " << s["reason"].get<std::string>() << '\n';
  for (const auto& w : warnings) err << "warning: " << w.get<std::string>() << '\n';
}

void cmd_train(const TrainCommandOptions& o, RunConfig c, std::ostream& out) {
  const std::string manifest = o.manifest.empty() ? c.paths.manifest : o.manifest;
  const std::string out_dir = o.out.empty() ? c.paths.output : o.out;
  require_file(manifest, "manifest");
  if (out_dir.empty()) throw std::invalid_argument("output directory not given");
  if (!o.resume.empty()) require_file(o.resume, "resume checkpoint");
  if (o.no_audio) c.model.use_audio = false;
  if (o.epochs) c.train.epochs = *o.epochs;
  c.validate();

  const auto segments = load_segments(manifest, [](const ManifestRecord& r) { return r.split == "train"; });
  if (segments.empty()) throw std::invalid_argument("manifest " + manifest + " has no train segments");

  model::Checkpoint state;
  if (!o.resume.empty()) {
    state = model::load_checkpoint(o.resume);
    if (o.no_audio && state.config.use_audio) {
      throw std::invalid_argument("--no-audio conflicts with the audio-enabled checkpoint " + o.resume);
    }
    c.model = state.config;
  } else {
    std::vector<motion::PoseSequence> poses;
    std::vector<audio::AudioFeatureSequence> feats;
    for (const auto& s : segments) {
      poses.push_back(s.pose);
      feats.push_back(s.audio);
    }
    state = model::initial_checkpoint(c.model, c.seed);
    state.quantization = motion::fit_quantization_spec(poses, c.model.bins);
    if (c.model.use_audio && c.train.standardize) state.feature_stats = audio::fit_feature_stats(feats);
    state.mean_pose.assign(motion::kDims, 0.0);
    std::size_t frames = 0;
    for (const auto& p : poses) {
      for (std::size_t t = 0; t < p.frame_count(); ++t)
        for (std::size_t d = 0; d < motion::kDims; ++d) state.mean_pose[d] += p.frames.at(t, d);
      frames += p.frame_count();
    }
    for (double& v : state.mean_pose) v /= static_cast<double>(frames);
  }

  std::vector<model::Example> examples;
  std::size_t clamped = 0;
  for (const auto& s : segments) {
    const auto q = motion::quantize(s.pose, state.quantization);
    clamped += q.clamped;
    if (state.config.use_audio) {
      const auto a = state.feature_stats.empty() ? s.audio : audio::standardize(s.audio, state.feature_stats);
      examples.push_back(model::make_example(q, &a));
    } else {
      examples.push_back(model::make_example(q, nullptr));
    }
  }
  out << "train segments: " << examples.size() << ", clamped values: " << clamped << '\n';

  const fs::path ckpt_path = fs::path(out_dir) / "checkpoint.tsmt";
  model::TrainOptions opts;
  opts.epochs = state.epochs_completed + c.train.epochs;
  opts.checkpoint_every = c.train.checkpoint_every;
  opts.checkpoint_path = ckpt_path;
  auto last = std::chrono::steady_clock::now();
  opts.on_epoch = [&](const model::TrainingLogEntry& e) {
    const auto now = std::chrono::steady_clock::now();
    out << "epoch " << e.epoch << "  loss " << io::format_double(e.loss) << "  lr "
        << io::format_double(e.learning_rate) << "  "
        << std::chrono::duration<double>(now - last).count() << " s\n";
    last = now;
  };
  fs::create_directories(out_dir);
  model::train(state, examples, opts);
  if (!fs::exists(ckpt_path)) model::save_checkpoint(ckpt_path, state);

  std::string log = "epoch,loss,learning_rate\n";
  for (const auto& e : state.log) {
    log += std::to_string(e.epoch) + "," + io::format_double(e.loss) + "," + io::format_double(e.learning_rate) + "\n";
  }
  io::write_file_atomic(fs::path(out_dir) / "train_log.csv", log);
  echo_config(out_dir, c);
  out << "checkpoint: " << ckpt_path.string() << " (" << state.epochs_completed << " epochs)\n";
}

void cmd_train_classifier(const ClassifierCommandOptions& o, const RunConfig& c, std::ostream& out) {
  c.validate();
  const auto segments = load_segments(o.manifest, [](const ManifestRecord& r) { return r.style >= 0; });
  if (segments.empty()) throw std::invalid_argument("manifest " + o.manifest + " has no style-labelled segments");
  std::vector<motion::PoseSequence> poses;
  std::vector<int> labels;
  for (const auto& s : segments) {
    poses.push_back(s.pose);
    labels.push_back(s.record.style);
  }
  const std::vector<std::string> names(std::begin(kStyleNames), std::end(kStyleNames));
  const auto clf = metrics::train_style_classifier(poses, labels, c.classifier, c.seed, names);
  metrics::save_classifier(o.out, clf);
  const auto m = metrics::confusion_matrix(clf, poses, labels);
  std::size_t correct = 0;
  for (std::size_t k = 0; k < m.size(); ++k) correct += m[k][k];
  out << "segments: " << poses.size() << ", training accuracy " << correct << "/" << poses.size() << '\n';
  out << "final loss " << io::format_double(clf.epoch_loss.back()) << '\n';
  out << "confusion (rows true, columns predicted):\n";
  for (std::size_t k = 0; k < m.size(); ++k) {
    out << "  " << names[k];
    for (std::size_t v : m[k]) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace tsmt::cli
