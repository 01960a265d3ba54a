#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "json.hpp"
#include "tsmt/io.hpp"

namespace tsmt::cli {

namespace fs = std::filesystem;

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw std::invalid_argument(what + " not given");
  if (!fs::is_regular_file(path)) throw std::invalid_argument(what + " not found: " + path);
}

void require_dir(const std::string& path, const std::string& what) {
  if (path.empty()) throw std::invalid_argument(what + " not given");
  if (!fs::is_directory(path)) throw std::invalid_argument(what + " is not a directory: " + path);
}

void echo_config(const std::string& dir, const RunConfig& c) {
  io::write_file_atomic(fs::path(dir) / "config.toml", "# effective configuration\n" + to_toml(c));
}

std::string manifest_line(const ManifestRecord& r) {
  nlohmann::ordered_json j = {{"id", r.id},         {"source_id", r.source_id}, {"start_frame", r.start_frame},
                              {"frames", r.frames}, {"split", r.split},         {"pose", r.pose},
                              {"features", r.features}};
  if (r.style >= 0) j["style"] = r.style;
  return j.dump();
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  require_file(path, "manifest");
  std::istringstream in(io::read_file(path));
  std::vector<ManifestRecord> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ManifestRecord r;
      r.id = j.at("id").get<std::string>();
      r.source_id = j.at("source_id").get<std::string>();
      r.start_frame = j.at("start_frame").get<std::size_t>();
      r.frames = j.at("frames").get<std::size_t>();
      r.split = j.at("split").get<std::string>();
      r.pose = j.at("pose").get<std::string>();
      r.features = j.at("features").get<std::string>();
      r.style = j.value("style", -1);
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": bad manifest record: " + e.what());
    }
  }
  if (out.empty()) throw std::invalid_argument("manifest " + path + " has no records");
  return out;
}

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Run config file (default: $" + std::string(kConfigEnv) + ")");
  cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
  cmd->add_option("--jobs", c.jobs, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
}

RunConfig resolve(const Common& c) {
  std::string path = c.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') path = env;
  }
  RunConfig config = path.empty() ? RunConfig{} : load_run_config(path);
  if (c.seed) config.seed = *c.seed;
  if (c.jobs > 0) omp_set_num_threads(c.jobs);
  return config;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stream transformer for music-conditioned dance generation"};
  app.name("tsmt");
  app.require_subcommand(1);
  Common common;

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Write a small synthetic corpus (poses, audio, beats)");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--sources", synth.sources, "Number of source recordings")->check(CLI::PositiveNumber);
  c_synth->add_option("--seconds", synth.seconds, "Duration of each source")->check(CLI::PositiveNumber);
  c_synth->add_option("--fps", synth.fps, "Pose frame rate")->check(CLI::PositiveNumber);
  c_synth->add_option("--sample-rate", synth.sample_rate, "Audio sample rate")->check(CLI::PositiveNumber);
  add_common(c_synth, common);

  PreprocessOptions pre;
  auto* c_pre = app.add_subcommand("preprocess", "Filter, resample, extract features and segment a corpus");
  c_pre->add_option("--input", pre.input, "Directory of <id>.pose.json, <id>.wav and <id>.beats.txt")->required();
  c_pre->add_option("--out", pre.out, "Output directory")->required();
  add_common(c_pre, common);

  TrainCommandOptions train;
  auto* c_train = app.add_subcommand("train", "Train the model on a segment manifest");
  c_train->add_option("--manifest", train.manifest, "Segment manifest (default: paths.manifest)");
  c_train->add_option("--out", train.out, "Output directory (default: paths.output)");
  c_train->add_option("--resume", train.resume, "Checkpoint to continue from");
  c_train->add_option("--epochs", train.epochs, "Epochs to run in this invocation");
  c_train->add_flag("--no-audio", train.no_audio, "Train the pose-only variant");
  add_common(c_train, common);

  ClassifierCommandOptions cls;
  auto* c_cls = app.add_subcommand("train-classifier", "Train the style classifier used by evaluate");
  c_cls->add_option("--manifest", cls.manifest, "Segment manifest with style labels")->required();
  c_cls->add_option("--out", cls.out, "Classifier file")->required();
  add_common(c_cls, common);

  GenerateOptions gen;
  auto* c_gen = app.add_subcommand("generate", "Sample dance sequences from a checkpoint");
  c_gen->add_option("--checkpoint", gen.checkpoint, "Model checkpoint (default: paths.checkpoint)");
  c_gen->add_option("--audio", gen.audio, "Music as .wav or a feature cache .csv");
  c_gen->add_option("--beats", gen.beats, "Beat annotation file for .wav input");
  c_gen->add_option("--seed-pose", gen.seed_pose, "Pose file whose frames prime the generation");
  c_gen->add_option("--out", gen.out, "Output directory (default: paths.output)");
  c_gen->add_option("--name", gen.name, "Output file stem");
  c_gen->add_option("--reference", gen.reference, "Ground-truth sequence id recorded for evaluation");
  c_gen->add_option("--length", gen.length, "Frames to produce, seed frames included");
  c_gen->add_option("--temperature", gen.temperature, "Softmax temperature (> 0)");
  c_gen->add_option("--top-k", gen.top_k, "Sample among the k most likely bins (0 = all)");
  c_gen->add_option("--samples", gen.samples, "Sequences to draw for the same music");
  c_gen->add_flag("--quiet", gen.quiet, "Print only the per-sequence timing summary");
  add_common(c_gen, common);

  EvaluateOptions eval;
  auto* c_eval = app.add_subcommand("evaluate", "Compute the metric report");
  c_eval->add_option("--generated", eval.generated, "Directory of generated *.pose.json")->required();
  c_eval->add_option("--reference", eval.reference, "Directory of ground-truth *.pose.json");
  c_eval->add_option("--classifier", eval.classifier, "Style classifier for FID and diversity");
  c_eval->add_option("--out", eval.out, "Output directory (default: paths.output)");
  add_common(c_eval, common);

  RenderOptions rend;
  auto* c_rend = app.add_subcommand("render", "Draw pose frames as SVG stick figures");
  c_rend->add_option("--poses", rend.poses, "Pose file")->required();
  c_rend->add_option("--out", rend.out, "Output directory")->required();
  c_rend->add_option("--view", rend.view, "Projection")->check(CLI::IsMember({"front", "side", "top"}));
  c_rend->add_option("--fps", rend.fps, "Frame rate used to place beats (default: the file's)")
      ->check(CLI::PositiveNumber);
  c_rend->add_option("--beats", rend.beats, "Beat annotation file; beat frames are tinted");
  add_common(c_rend, common);

  std::string inspect_path;
  auto* c_inspect = app.add_subcommand("inspect-checkpoint", "Print a checkpoint's header");
  c_inspect->add_option("checkpoint", inspect_path, "Checkpoint file")->required();
  add_common(c_inspect, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig config = resolve(common);
    if (c_synth->parsed()) cmd_synth(synth, config, out);
    else if (c_pre->parsed()) cmd_preprocess(pre, config, out, err);
    else if (c_train->parsed()) cmd_train(train, config, out);
    else if (c_cls->parsed()) cmd_train_classifier(cls, config, out);
    else if (c_gen->parsed()) cmd_generate(gen, config, out);
    else if (c_eval->parsed()) cmd_evaluate(eval, config, out, err);
    else if (c_rend->parsed()) cmd_render(rend, config, out);
    else if (c_inspect->parsed()) cmd_inspect_checkpoint(inspect_path, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace tsmt::cli
