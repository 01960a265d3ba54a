#include "cli/run_config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <variant>
#include <vector>

#include "tsmt/io.hpp"

namespace tsmt::cli {

namespace {

struct Value {
  enum class Kind { kString, kBool, kNumber, kArray } kind = Kind::kNumber;
  std::string text;                // string contents or number token
  std::vector<std::string> items;  // number tokens of an array
};

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seed is stored through a size_t field");
using Target = std::variant<std::string*, bool*, double*, std::size_t*, int*, metrics::JointLimit*>;

struct Field {
  std::string key;  // "section.name"
  Target target;
};

std::vector<Field> fields(RunConfig& c) {
  std::vector<Field> f = {
      {"seed", &c.seed},
      {"paths.manifest", &c.paths.manifest},
      {"paths.checkpoint", &c.paths.checkpoint},
      {"paths.output", &c.paths.output},
      {"model.bins", &c.model.bins},
      {"model.embed_dim", &c.model.embed_dim},
      {"model.pose_model_dim", &c.model.pose.model_dim},
      {"model.pose_head_dim", &c.model.pose.head_dim},
      {"model.pose_heads", &c.model.pose.heads},
      {"model.pose_blocks", &c.model.pose.blocks},
      {"model.audio_model_dim", &c.model.audio.model_dim},
      {"model.audio_head_dim", &c.model.audio.head_dim},
      {"model.audio_heads", &c.model.audio.heads},
      {"model.audio_blocks", &c.model.audio.blocks},
      {"model.beat_embed_dim", &c.model.beat_embed_dim},
      {"model.conv_kernel", &c.model.conv_kernel},
      {"model.ff_multiplier", &c.model.ff_multiplier},
      {"model.dropout", &c.model.dropout},
      {"model.use_audio", &c.model.use_audio},
      {"model.causal_audio", &c.model.causal_audio},
      {"model.max_context", &c.model.max_context},
      {"model.learning_rate", &c.model.learning_rate},
      {"model.batch_size", &c.model.batch_size},
      {"model.decay_epoch", &c.model.decay_epoch},
      {"model.decay_factor", &c.model.decay_factor},
      {"audio.window", &c.audio.window},
      {"audio.mel_filters", &c.audio.mel_filters},
      {"audio.log_floor", &c.audio.log_floor},
      {"preprocess.hp_lambda", &c.preprocess.hp_lambda},
      {"preprocess.segment_length", &c.preprocess.segment_length},
      {"preprocess.segment_stride", &c.preprocess.segment_stride},
      {"preprocess.train_ratio", &c.preprocess.train_ratio},
      {"train.epochs", &c.train.epochs},
      {"train.checkpoint_every", &c.train.checkpoint_every},
      {"train.standardize", &c.train.standardize},
      {"generate.length", &c.generate.length},
      {"generate.temperature", &c.generate.temperature},
      {"generate.top_k", &c.generate.top_k},
      {"generate.samples", &c.generate.samples},
      {"metrics.beat_tolerance", &c.metrics.beat_tolerance},
      {"metrics.diversity_pairs", &c.metrics.diversity_pairs},
      {"metrics.chunk_frames", &c.metrics.chunk_frames},
      {"classifier.model_dim", &c.classifier.stream.model_dim},
      {"classifier.head_dim", &c.classifier.stream.head_dim},
      {"classifier.heads", &c.classifier.stream.heads},
      {"classifier.blocks", &c.classifier.stream.blocks},
      {"classifier.learning_rate", &c.classifier.learning_rate},
      {"classifier.epochs", &c.classifier.epochs},
      {"classifier.batch_size", &c.classifier.batch_size},
  };
  for (std::size_t j = 0; j < metrics::kInteriorJoints; ++j) {
    f.push_back({"metrics.limits." + metrics::interior_joints()[j].name, &c.metrics.limits.limits[j]});
  }
  return f;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

Value parse_value(const std::string& raw, const std::string& where) {
  Value v;
  if (raw.empty()) throw std::invalid_argument(where + ": missing value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') throw std::invalid_argument(where + ": unterminated string");
    v.kind = Value::Kind::kString;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size()) {
        const char n = raw[++i];
        v.text += n == 'n' ? '\n' : n == 't' ? '\t' : n;
      } else {
        v.text += raw[i];
      }
    }
  } else if (raw == "true" || raw == "false") {
    v.kind = Value::Kind::kBool;
    v.text = raw;
  } else if (raw.front() == '[') {
    if (raw.back() != ']') throw std::invalid_argument(where + ": unterminated array");
    v.kind = Value::Kind::kArray;
    std::stringstream ss(raw.substr(1, raw.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) v.items.push_back(item);
    }
  } else {
    v.kind = Value::Kind::kNumber;
    v.text = raw;
  }
  return v;
}

template <typename T>
T parse_integer(const std::string& text, const std::string& where) {
  T out{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument(where + ": expected a non-negative integer, got '" + text + "'");
  }
  return out;
}

void assign(const Field& field, const Value& v, const std::string& where) {
  using K = Value::Kind;
  const auto need = [&](K kind, const char* what) {
    if (v.kind != kind) throw std::invalid_argument(where + ": " + field.key + " expects " + what);
  };
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) {
          need(K::kString, "a string");
          *p = v.text;
        } else if constexpr (std::is_same_v<T, bool>) {
          need(K::kBool, "true or false");
          *p = v.text == "true";
        } else if constexpr (std::is_same_v<T, double>) {
          need(K::kNumber, "a number");
          *p = io::parse_double(v.text, where + ": " + field.key);
        } else if constexpr (std::is_same_v<T, metrics::JointLimit>) {
          need(K::kArray, "[min_degrees, max_degrees, max_speed]");
          if (v.items.size() != 3) throw std::invalid_argument(where + ": " + field.key + " needs 3 numbers");
          *p = {io::parse_double(v.items[0], field.key), io::parse_double(v.items[1], field.key),
                io::parse_double(v.items[2], field.key)};
        } else {
          need(K::kNumber, "an integer");
          *p = parse_integer<T>(v.text, where + ": " + field.key);
        }
      },
      field.target);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    if (ch == '\n') {
      out += "\\n";
      continue;
    }
    out += ch;
  }
  return out + "\"";
}

std::string render(const Target& t) {
  return std::visit(
      [](auto* p) -> std::string {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::string>) return quote(*p);
        else if constexpr (std::is_same_v<T, bool>) return *p ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>) return io::format_double(*p);
        else if constexpr (std::is_same_v<T, metrics::JointLimit>)
          return "[" + io::format_double(p->min_degrees) + ", " + io::format_double(p->max_degrees) + ", " +
                 io::format_double(p->max_speed) + "]";
        else return std::to_string(*p);
      },
      t);
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  metrics.limits.validate();
  if (!(preprocess.hp_lambda >= 0.0)) throw std::invalid_argument("preprocess.hp_lambda must be >= 0");
  if (preprocess.segment_length == 0 || preprocess.segment_stride == 0) {
    throw std::invalid_argument("preprocess.segment_length and segment_stride must be positive");
  }
  if (!(preprocess.train_ratio > 0.0 && preprocess.train_ratio <= 1.0)) {
    throw std::invalid_argument("preprocess.train_ratio must lie in (0, 1]");
  }
  if (!(generate.temperature > 0.0)) {
    throw std::invalid_argument("generate.temperature must be > 0 (use top_k = 1 for argmax)");
  }
  if (generate.top_k < 0) throw std::invalid_argument("generate.top_k must be >= 0");
  if (generate.samples == 0) throw std::invalid_argument("generate.samples must be positive");
  if (metrics.chunk_frames == 0) throw std::invalid_argument("metrics.chunk_frames must be positive");
  if (audio.window == 0 || (audio.window & (audio.window - 1)) != 0) {
    throw std::invalid_argument("audio.window must be a power of two");
  }
  if (classifier.stream.model_dim % 2 != 0) throw std::invalid_argument("classifier.model_dim must be even");
}

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  RunConfig config;
  std::map<std::string, Field> index;
  for (Field& f : fields(config)) index.emplace(f.key, f);
  std::set<std::string> sections;
  for (const auto& [key, _] : index) {
    for (std::size_t dot = key.find('.'); dot != std::string::npos; dot = key.find('.', dot + 1)) {
      sections.insert(key.substr(0, dot));
    }
  }

  std::stringstream in(text);
  std::string line, section;
  std::set<std::string> seen;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const std::string where = source + ":" + std::to_string(lineno);
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.contains(section)) throw std::invalid_argument(where + ": unknown config section '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    const std::string name = trim(line.substr(0, eq));
    const std::string key = section.empty() ? name : section + "." + name;
    const auto it = index.find(key);
    if (it == index.end()) throw std::invalid_argument(where + ": unknown config key '" + key + "'");
    if (!seen.insert(key).second) throw std::invalid_argument(where + ": duplicate config key '" + key + "'");
    assign(it->second, parse_value(trim(line.substr(eq + 1)), where), where);
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw std::invalid_argument("config file not found: " + path.string());
  return parse_run_config(io::read_file(path), path.string());
}

std::string to_toml(const RunConfig& config) {
  RunConfig copy = config;
  std::string out, section;
  for (const Field& f : fields(copy)) {
    const auto dot = f.key.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : f.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? f.key : f.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + render(f.target) + "\n";
  }
  return out;
}

}  // namespace tsmt::cli
