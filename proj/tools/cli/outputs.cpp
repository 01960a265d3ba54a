#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "cli/commands.hpp"
#include "json.hpp"
#include "tsmt/audio/beats.hpp"
#include "tsmt/audio/mfcc.hpp"
#include "tsmt/audio/wav.hpp"
#include "tsmt/io.hpp"
#include "tsmt/metrics/report.hpp"
#include "tsmt/model/checkpoint.hpp"
#include "tsmt/motion/filters.hpp"
#include "tsmt/numerics/rng.hpp"
#include "tsmt/sampler/sampler.hpp"

namespace tsmt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

audio::AudioFeatureSequence load_music(const GenerateOptions& o, const RunConfig& c) {
  require_file(o.audio, "audio");
  const double fps = motion::kCanonicalFps;
  if (o.audio.ends_with(".csv")) {
    if (!o.beats.empty()) throw std::invalid_argument("--beats applies to .wav input; a feature cache carries its beats");
    return audio::read_feature_cache(o.audio, fps);
  }
  const audio::PcmAudio pcm = audio::read_wav(o.audio);
  const auto frames = static_cast<std::size_t>(std::floor(pcm.duration() * fps + 1e-9));
  audio::MfccOptions opts = c.audio;
  opts.fps = fps;
  audio::AudioFeatureSequence a;
  a.fps = fps;
  a.mfcc = audio::append_deltas(audio::compute_mfcc(pcm.samples, pcm.sample_rate, opts, frames));
  if (!o.beats.empty()) {
    require_file(o.beats, "beat file");
    a.beat = audio::rasterize_beats(audio::load_beat_annotations(o.beats), fps, frames);
  } else {
    a.beat.assign(frames, 0);
  }
  return a;
}

std::string tokens_csv(const motion::QuantizedPoseSequence& q) {
  std::string out;
  for (std::size_t t = 0; t < q.frames; ++t) {
    for (std::size_t d = 0; d < q.dims(); ++d) {
      if (d) out += ',';
      out += std::to_string(q.at(t, d));
    }
    out += '\n';
  }
  return out;
}

std::string strip_pose_suffix(const std::string& name) {
  const std::string suffix = ".pose.json";
  return name.ends_with(suffix) ? name.substr(0, name.size() - suffix.size()) : name;
}

std::vector<metrics::EvalSequence> load_eval_dir(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename().string().ends_with(".pose.json")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<metrics::EvalSequence> out;
  for (const auto& f : files) {
    const motion::PoseFile pf = motion::read_pose_file(f);
    const json extras = json::parse(pf.extras_json);
    metrics::EvalSequence s;
    s.id = strip_pose_suffix(f.filename().string());
    s.music = extras.value("music", std::string());
    s.reference_id = extras.value("reference", std::string());
    if (extras.contains("music_beats")) s.music_beats = extras.at("music_beats").get<std::vector<std::size_t>>();
    s.pose = pf.pose;
    out.push_back(std::move(s));
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void cmd_generate(const GenerateOptions& o, RunConfig c, std::ostream& out) {
  const std::string ckpt_path = o.checkpoint.empty() ? c.paths.checkpoint : o.checkpoint;
  const std::string out_dir = o.out.empty() ? c.paths.output : o.out;
  require_file(ckpt_path, "checkpoint");
  if (out_dir.empty()) throw std::invalid_argument("output directory not given");
  if (!o.seed_pose.empty()) require_file(o.seed_pose, "seed pose");
  if (o.length) c.generate.length = *o.length;
  if (o.temperature) c.generate.temperature = *o.temperature;
  if (o.top_k) c.generate.top_k = *o.top_k;
  if (o.samples) c.generate.samples = *o.samples;
  if (!(c.generate.temperature > 0.0)) {
    throw std::invalid_argument("temperature must be > 0 (use --top-k 1 for argmax decoding)");
  }

  const model::Checkpoint ckpt = model::load_checkpoint(ckpt_path);
  c.model = ckpt.config;
  c.validate();
  const std::size_t length = c.generate.length;

  sampler::GenerationRequest req;
  req.length = length;
  req.sampling = {c.generate.temperature, c.generate.top_k};
  std::vector<std::size_t> music_beats;
  std::string music;
  if (!o.audio.empty() || ckpt.config.use_audio) {
    audio::AudioFeatureSequence a = load_music(o, c);
    if (a.frame_count() < length) {
      throw std::invalid_argument("audio provides " + std::to_string(a.frame_count()) + " frames but " +
                                  std::to_string(length) + " were requested");
    }
    a = a.slice(0, length);
    for (std::size_t t = 0; t < length; ++t)
      if (a.beat[t]) music_beats.push_back(t);
    music = strip_pose_suffix(fs::path(o.audio).stem().string());
    if (music.ends_with(".features")) music.resize(music.size() - 9);
    if (ckpt.config.use_audio) req.audio = std::move(a);
  }
  if (!o.seed_pose.empty()) {
    motion::PoseSequence seed = motion::read_pose_file(o.seed_pose).pose;
    seed = motion::root_relative(motion::resample_to_fps(seed, motion::kCanonicalFps));
    req.seed_pose = std::move(seed);
  }

  fs::create_directories(out_dir);
  for (std::size_t k = 0; k < c.generate.samples; ++k) {
    req.seed = c.generate.samples == 1 ? c.seed : Rng(c.seed).split(k).next_u64();
    const std::string name = c.generate.samples == 1 ? o.name : o.name + "_" + std::to_string(k);
    const sampler::GenerationResult r = sampler::generate(req, ckpt);

    json extras = {{"music", music}, {"music_beats", music_beats}, {"seed", req.seed},
                   {"temperature", req.sampling.temperature}, {"top_k", req.sampling.top_k},
                   {"seed_frames", r.seed_frames}};
    if (!o.reference.empty()) extras["reference"] = o.reference;
    const fs::path base = fs::path(out_dir) / name;
    motion::write_pose_file(base.string() + ".pose.json", r.poses, extras.dump());
    io::write_file_atomic(base.string() + ".tokens.csv", tokens_csv(r.tokens));
    std::string steps = "step,log_likelihood\n";
    for (std::size_t t = 0; t < r.log_likelihood.size(); ++t) {
      steps += std::to_string(t) + "," + io::format_double(r.log_likelihood[t]) + "\n";
    }
    io::write_file_atomic(base.string() + ".steps.csv", steps);

    if (!o.quiet) {
      for (std::size_t t = 0; t < r.step_seconds.size(); ++t) {
        out << name << " step " << t << ": " << fixed(1e3 * r.step_seconds[t], 3) << " ms\n";
      }
    }
    const double total = std::accumulate(r.step_seconds.begin(), r.step_seconds.end(), 0.0);
    const double worst = r.step_seconds.empty() ? 0.0 : *std::max_element(r.step_seconds.begin(), r.step_seconds.end());
    const double mean = r.step_seconds.empty() ? 0.0 : total / static_cast<double>(r.step_seconds.size());
    out << name << ": " << r.poses.frame_count() << " frames (" << r.seed_frames << " seed), "
        << fixed(1e3 * mean, 3) << " ms/step mean, " << fixed(1e3 * worst, 3) << " ms/step max\n";
  }
  echo_config(out_dir, c);
}

void cmd_evaluate(const EvaluateOptions& o, const RunConfig& c, std::ostream& out, std::ostream& err) {
  c.validate();
  const std::string out_dir = o.out.empty() ? c.paths.output : o.out;
  require_dir(o.generated, "generated directory");
  if (!o.reference.empty()) require_dir(o.reference, "reference directory");
  if (!o.classifier.empty()) require_file(o.classifier, "classifier");
  if (out_dir.empty()) throw std::invalid_argument("output directory not given");

  const auto generated = load_eval_dir(o.generated);
  if (generated.empty()) throw std::invalid_argument("no *.pose.json files in " + o.generated);
  const auto reference = o.reference.empty() ? std::vector<metrics::EvalSequence>{} : load_eval_dir(o.reference);
  std::optional<metrics::StyleClassifier> clf;
  if (!o.classifier.empty()) clf = metrics::load_classifier(o.classifier);

  metrics::MetricOptions opts = c.metrics;
  opts.seed = c.seed;
  const auto report = metrics::evaluate(generated, reference, clf ? &*clf : nullptr, opts);
  const std::string table = metrics::report_table(report);
  io::write_file_atomic(fs::path(out_dir) / "report.json", metrics::report_to_json(report).dump(2) + "\n");
  io::write_file_atomic(fs::path(out_dir) / "report.txt", table);
  echo_config(out_dir, c);
  out << table;
  for (const auto& w : report.warnings) err << "warning: " << w << '\n';
}

void cmd_render(const RenderOptions& o, const RunConfig& c, std::ostream& out) {
  require_file(o.poses, "pose file");
  if (!o.beats.empty()) require_file(o.beats, "beat file");
  const motion::PoseSequence seq = motion::read_pose_file(o.poses).pose;
  const double fps = o.fps.value_or(seq.fps);
  const std::size_t T = seq.frame_count();
  std::vector<std::uint8_t> beat(T, 0);
  if (!o.beats.empty()) beat = audio::rasterize_beats(audio::load_beat_annotations(o.beats), fps, T);

  // Screen axes per view: horizontal and vertical world axes (x left, y up, z forward).
  std::size_t h = 0, v = 1;
  if (o.view == "side") h = 2;
  else if (o.view == "top") v = 2;
  double lo_h = 0, hi_h = 0, lo_v = 0, hi_v = 0;
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t j = 0; j < motion::kJoints; ++j) {
      const double a = seq.at(t, j, h), b = seq.at(t, j, v);
      if (t == 0 && j == 0) {
        lo_h = hi_h = a;
        lo_v = hi_v = b;
      }
      lo_h = std::min(lo_h, a), hi_h = std::max(hi_h, a), lo_v = std::min(lo_v, b), hi_v = std::max(hi_v, b);
    }
  const double size = 320.0, margin = 24.0;
  const double extent = std::max({hi_h - lo_h, hi_v - lo_v, 1e-9});
  const double scale = (size - 2 * margin) / extent;
  const double ch = 0.5 * (lo_h + hi_h), cv = 0.5 * (lo_v + hi_v);
  const auto px = [&](double a) { return fixed(size / 2 + (a - ch) * scale); };
  const auto py = [&](double b) { return fixed(size / 2 - (b - cv) * scale); };

  fs::create_directories(o.out);
  for (std::size_t t = 0; t < T; ++t) {
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"320\" height=\"320\" viewBox=\"0 0 320 320\">\n";
    svg += std::string("<rect width=\"320\" height=\"320\" fill=\"") + (beat[t] ? "#ffe9b0" : "#ffffff") + "\"/>\n";
    for (std::size_t j = 1; j < motion::kJoints; ++j) {
      const auto p = static_cast<std::size_t>(motion::kParents[j]);
      svg += "<line x1=\"" + px(seq.at(t, p, h)) + "\" y1=\"" + py(seq.at(t, p, v)) + "\" x2=\"" +
             px(seq.at(t, j, h)) + "\" y2=\"" + py(seq.at(t, j, v)) + "\" stroke=\"#203040\" stroke-width=\"3\"/>\n";
    }
    for (std::size_t j = 0; j < motion::kJoints; ++j) {
      svg += "<circle cx=\"" + px(seq.at(t, j, h)) + "\" cy=\"" + py(seq.at(t, j, v)) + "\" r=\"3\" fill=\"#c03020\"/>\n";
    }
    svg += "<text x=\"8\" y=\"18\" font-family=\"monospace\" font-size=\"12\">frame " + std::to_string(t) +
           (beat[t] ? " beat" : "") + "</text>\n</svg>\n";
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.svg", t);
    io::write_file_atomic(fs::path(o.out) / name, svg);
  }

  if (!o.beats.empty() && T >= 3) {
    // Timeline: music beats as bars above the axis, motion beats as dots below.
    const auto motion_beats = metrics::extract_motion_beats(seq);
    const double width = 640.0;
    const auto x = [&](std::size_t t) { return fixed(20.0 + (width - 40.0) * static_cast<double>(t) / static_cast<double>(T - 1)); };
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"120\" viewBox=\"0 0 640 120\">\n";
    svg += "<line x1=\"20\" y1=\"60\" x2=\"620\" y2=\"60\" stroke=\"#808080\"/>\n";
    for (std::size_t t = 0; t < T; ++t)
      if (beat[t]) svg += "<line x1=\"" + x(t) + "\" y1=\"25\" x2=\"" + x(t) + "\" y2=\"58\" stroke=\"#d08000\" stroke-width=\"2\"/>\n";
    for (std::size_t t : motion_beats) svg += "<circle cx=\"" + x(t) + "\" cy=\"80\" r=\"4\" fill=\"#2060c0\"/>\n";
    svg += "<text x=\"20\" y=\"15\" font-family=\"monospace\" font-size=\"11\">music beats</text>\n";
    svg += "<text x=\"20\" y=\"110\" font-family=\"monospace\" font-size=\"11\">motion beats</text>\n</svg>\n";
    io::write_file_atomic(fs::path(o.out) / "beats.svg", svg);
  }
  (void)c;
  out << "rendered " << T << " frames to " << o.out << '\n';
}

void cmd_inspect_checkpoint(const std::string& path, std::ostream& out) {
  require_file(path, "checkpoint");
  json header = json::parse(model::read_checkpoint_header(path));
  std::size_t params = 0, values = 0;
  for (const auto& a : header.at("arrays")) {
    std::size_t n = 1;
    for (const auto& d : a.at("shape")) n *= d.get<std::size_t>();
    values += n;
    if (a.at("name").get<std::string>().starts_with("param/")) params += n;
  }
  header["arrays"] = {{"count", header.at("arrays").size()}, {"values", values}, {"parameters", params}};
  out << header.dump(2) << '\n';
}

}  // namespace tsmt::cli
