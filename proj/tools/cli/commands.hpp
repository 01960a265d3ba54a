#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cli/run_config.hpp"

namespace tsmt::cli {

/// Runs the `tsmt` command line (args exclude the program name). Returns the
/// process exit code; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct SynthOptions {
  std::string out;
  std::size_t sources = 5;
  double seconds = 12.0;
  double fps = 30.0;
  int sample_rate = 16000;
};

struct PreprocessOptions {
  std::string input;
  std::string out;
};

struct TrainCommandOptions {
  std::string manifest;
  std::string out;
  std::string resume;
  std::optional<std::size_t> epochs;
  bool no_audio = false;
};

struct ClassifierCommandOptions {
  std::string manifest;
  std::string out;
};

struct GenerateOptions {
  std::string checkpoint;
  std::string audio;
  std::string beats;
  std::string seed_pose;
  std::string out;
  std::string name = "generated";
  std::string reference;
  std::optional<std::size_t> length;
  std::optional<double> temperature;
  std::optional<int> top_k;
  std::optional<std::size_t> samples;
  bool quiet = false;
};

struct EvaluateOptions {
  std::string generated;
  std::string reference;
  std::string classifier;
  std::string out;
};

struct RenderOptions {
  std::string poses;
  std::string out;
  std::string view = "front";
  std::optional<double> fps;
  std::string beats;
};

// Each command throws on error; run() turns exceptions into exit code 1.
void cmd_synth(const SynthOptions& o, const RunConfig& c, std::ostream& out);
void cmd_preprocess(const PreprocessOptions& o, const RunConfig& c, std::ostream& out, std::ostream& err);
void cmd_train(const TrainCommandOptions& o, RunConfig c, std::ostream& out);
void cmd_train_classifier(const ClassifierCommandOptions& o, const RunConfig& c, std::ostream& out);
void cmd_generate(const GenerateOptions& o, RunConfig c, std::ostream& out);
void cmd_evaluate(const EvaluateOptions& o, const RunConfig& c, std::ostream& out, std::ostream& err);
void cmd_render(const RenderOptions& o, const RunConfig& c, std::ostream& out);
void cmd_inspect_checkpoint(const std::string& path, std::ostream& out);

// Shared helpers.
void require_file(const std::string& path, const std::string& what);
void require_dir(const std::string& path, const std::string& what);
/// Writes the effective configuration as `config.toml` into `dir`.
void echo_config(const std::string& dir, const RunConfig& c);

struct ManifestRecord {
  std::string id;
  std::string source_id;
  std::size_t start_frame = 0;
  std::size_t frames = 0;
  std::string split;
  std::string pose;      // relative to the manifest directory
  std::string features;  // relative to the manifest directory
  int style = -1;        // -1 when the source carries no style label
};

std::vector<ManifestRecord> read_manifest(const std::string& path);
std::string manifest_line(const ManifestRecord& r);

}  // namespace tsmt::cli
