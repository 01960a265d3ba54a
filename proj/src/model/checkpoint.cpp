#include "tsmt/model/checkpoint.hpp"

#include <stdexcept>

#include "tsmt/bundle.hpp"
#include "tsmt/model/model.hpp"

namespace tsmt::model {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "TSMTCKPT";

json stream_to_json(const StreamConfig& s) {
  return {{"model_dim", s.model_dim}, {"head_dim", s.head_dim}, {"heads", s.heads}, {"blocks", s.blocks}};
}

StreamConfig stream_from_json(const json& j) {
  return {j.at("model_dim").get<std::size_t>(), j.at("head_dim").get<std::size_t>(), j.at("heads").get<std::size_t>(),
          j.at("blocks").get<std::size_t>()};
}

json config_to_json(const TSMTConfig& c) {
  return {{"joints", c.joints},
          {"bins", c.bins},
          {"embed_dim", c.embed_dim},
          {"pose", stream_to_json(c.pose)},
          {"audio", stream_to_json(c.audio)},
          {"audio_features", c.audio_features},
          {"beat_embed_dim", c.beat_embed_dim},
          {"conv_kernel", c.conv_kernel},
          {"ff_multiplier", c.ff_multiplier},
          {"dropout", c.dropout},
          {"use_audio", c.use_audio},
          {"causal_audio", c.causal_audio},
          {"max_context", c.max_context},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"decay_epoch", c.decay_epoch},
          {"decay_factor", c.decay_factor}};
}

TSMTConfig config_from_json(const json& j) {
  TSMTConfig c;
  c.joints = j.at("joints").get<std::size_t>();
  c.bins = j.at("bins").get<int>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.pose = stream_from_json(j.at("pose"));
  c.audio = stream_from_json(j.at("audio"));
  c.audio_features = j.at("audio_features").get<std::size_t>();
  c.beat_embed_dim = j.at("beat_embed_dim").get<std::size_t>();
  c.conv_kernel = j.at("conv_kernel").get<std::size_t>();
  c.ff_multiplier = j.at("ff_multiplier").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.use_audio = j.at("use_audio").get<bool>();
  c.causal_audio = j.at("causal_audio").get<bool>();
  c.max_context = j.at("max_context").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.decay_epoch = j.at("decay_epoch").get<std::size_t>();
  c.decay_factor = j.at("decay_factor").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  validate_parameters(ckpt.config, ckpt.params);
  std::vector<bundle::NamedArray> arrays;
  for (const auto& [name, a] : ckpt.params) arrays.push_back({"param/" + name, a});
  for (const auto& [name, a] : ckpt.adam.first_moment) arrays.push_back({"adam.m/" + name, a});
  for (const auto& [name, a] : ckpt.adam.second_moment) arrays.push_back({"adam.v/" + name, a});
  auto vec = [](const std::vector<double>& v) { return Array({v.size()}, v); };
  arrays.push_back({"mean_pose", vec(ckpt.mean_pose)});
  arrays.push_back({"quantization.min", vec(ckpt.quantization.min)});
  arrays.push_back({"quantization.max", vec(ckpt.quantization.max)});
  arrays.push_back({"feature_stats.mean", vec(ckpt.feature_stats.mean)});
  arrays.push_back({"feature_stats.stddev", vec(ckpt.feature_stats.stddev)});

  json log = json::array();
  for (const TrainingLogEntry& e : ckpt.log)
    log.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"learning_rate", e.learning_rate}});
  json header = {
      {"format", "tsmt-checkpoint"},
      {"version", kCheckpointVersion},
      {"config", config_to_json(ckpt.config)},
      {"quantization", {{"bins", ckpt.quantization.bins}, {"min", ckpt.quantization.min}, {"max", ckpt.quantization.max}}},
      {"feature_stats", {{"mean", ckpt.feature_stats.mean}, {"stddev", ckpt.feature_stats.stddev}}},
      {"seed", ckpt.seed},
      {"epochs_completed", ckpt.epochs_completed},
      {"adam",
       {{"learning_rate", ckpt.adam.learning_rate},
        {"beta1", ckpt.adam.beta1},
        {"beta2", ckpt.adam.beta2},
        {"epsilon", ckpt.adam.epsilon},
        {"step", ckpt.adam.step}}},
      {"training_log", log},
      {"parameter_count", parameter_count(ckpt.params)}};
  bundle::write(path, kMagic, std::move(header), arrays);
}

std::string read_checkpoint_header(const std::filesystem::path& path) {
  try {
    return bundle::read_header(path, kMagic).dump(2);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint ckpt;
  try {
    bundle::Contents contents = bundle::read(path, kMagic);
    const json& header = contents.header;
    if (!header.contains("version")) throw std::runtime_error("missing version field");
    const int version = header.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw std::runtime_error("unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kCheckpointVersion) + ")");
    }
    ckpt.config = config_from_json(header.at("config"));
    ckpt.quantization.bins = header.at("quantization").at("bins").get<int>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.epochs_completed = header.at("epochs_completed").get<std::size_t>();
    const json& adam = header.at("adam");
    ckpt.adam.learning_rate = adam.at("learning_rate").get<double>();
    ckpt.adam.beta1 = adam.at("beta1").get<double>();
    ckpt.adam.beta2 = adam.at("beta2").get<double>();
    ckpt.adam.epsilon = adam.at("epsilon").get<double>();
    ckpt.adam.step = adam.at("step").get<std::uint64_t>();
    for (const json& e : header.at("training_log")) {
      ckpt.log.push_back({e.at("epoch").get<std::size_t>(), e.at("loss").get<double>(),
                          e.at("learning_rate").get<double>()});
    }
    for (bundle::NamedArray& entry : contents.arrays) {
      const std::string& name = entry.name;
      auto take = [&](const std::string& prefix, ParamMap& into) {
        if (name.rfind(prefix, 0) != 0) return false;
        into.emplace(name.substr(prefix.size()), std::move(entry.value));
        return true;
      };
      if (take("param/", ckpt.params) || take("adam.m/", ckpt.adam.first_moment) ||
          take("adam.v/", ckpt.adam.second_moment)) {
        continue;
      }
      std::vector<double>& values = entry.value.storage();
      if (name == "mean_pose") ckpt.mean_pose = std::move(values);
      else if (name == "quantization.min") ckpt.quantization.min = std::move(values);
      else if (name == "quantization.max") ckpt.quantization.max = std::move(values);
      else if (name == "feature_stats.mean") ckpt.feature_stats.mean = std::move(values);
      else if (name == "feature_stats.stddev") ckpt.feature_stats.stddev = std::move(values);
      else throw std::runtime_error("unknown array " + name);
    }
    ckpt.config.validate();
    validate_parameters(ckpt.config, ckpt.params);
    if (!ckpt.quantization.min.empty()) ckpt.quantization.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint " + path.string() + ": " + e.what());
  }
  return ckpt;
}

}  // namespace tsmt::model
