#include "tsmt/metrics/classifier.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "tsmt/bundle.hpp"
#include "tsmt/model/model.hpp"
#include "tsmt/numerics/rng.hpp"

namespace tsmt::metrics {

namespace {

constexpr std::string_view kMagic = "TSMTCLSF";

std::vector<model::ParamSpec> layout(const ClassifierConfig& c) {
  using model::Init;
  const std::size_t D = c.stream.model_dim;
  std::vector<model::ParamSpec> out;
  out.push_back({"cls.in.w", {c.input_dims, D}, Init::kGlorot, c.input_dims, D});
  out.push_back({"cls.in.b", {D}, Init::kZeros});
  model::append_stream_layout(out, "cls", c.stream, c.ff_multiplier);
  out.push_back({"cls.out.w", {D, c.classes}, Init::kGlorot, D, c.classes});
  out.push_back({"cls.out.b", {c.classes}, Init::kZeros});
  return out;
}

struct Outputs {
  ad::Var feature;  // 1 x D
  ad::Var logits;   // 1 x classes
};

Outputs forward(ad::Graph& g, const model::BoundParameters& p, const ClassifierConfig& c, const motion::PoseSequence& s) {
  if (s.dims() != c.input_dims || s.frame_count() == 0) {
    throw std::invalid_argument("style classifier: expected T x " + std::to_string(c.input_dims) +
                                " poses, got " + shape_string(s.frames.shape()));
  }
  static const model::TSMTConfig unused;
  const model::ForwardContext ctx{g, p, unused, 0.0};
  const std::size_t T = s.frame_count();
  ad::Var x = ad::add_row(ad::matmul(g.constant(s.frames), p["cls.in.w"]), p["cls.in.b"]);
  x = ad::add(x, g.constant(model::positional_encoding(T, c.stream.model_dim)));
  x = model::stream_forward(ctx, "cls", c.stream, x, false);
  ad::Var pooled = ad::matmul(g.constant(Array({1, T}, 1.0 / static_cast<double>(T))), x);
  return {pooled, ad::add_row(ad::matmul(pooled, p["cls.out.w"]), p["cls.out.b"])};
}

}  // namespace

StyleClassifier train_style_classifier(std::span<const motion::PoseSequence> sequences, std::span<const int> labels,
                                       const ClassifierConfig& config, std::uint64_t seed,
                                       std::vector<std::string> class_names) {
  if (sequences.size() != labels.size() || sequences.empty()) {
    throw std::invalid_argument("train_style_classifier: need one label per sequence");
  }
  std::set<int> present;
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= config.classes) {
      throw std::invalid_argument("train_style_classifier: label " + std::to_string(l) + " outside [0, " +
                                  std::to_string(config.classes) + ")");
    }
    present.insert(l);
  }
  if (present.size() < 2) throw std::invalid_argument("train_style_classifier: corpus has a single class");
  if (class_names.empty())
    for (std::size_t k = 0; k < config.classes; ++k) class_names.push_back("class" + std::to_string(k));
  if (class_names.size() != config.classes) throw std::invalid_argument("train_style_classifier: class name count");

  StyleClassifier clf{config, model::init_from_layout(layout(config), seed), std::move(class_names), seed, {}};
  AdamState adam;
  adam.learning_rate = config.learning_rate;
  const Rng root(seed);
  const std::size_t n = sequences.size(), B = std::max<std::size_t>(1, config.batch_size);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = root.split(epoch);
    shuffle.shuffle(order.begin(), order.end());
    double total = 0.0;
    for (std::size_t begin = 0; begin < n; begin += B) {
      const std::size_t end = std::min(begin + B, n);
      std::vector<ParamMap> grads(end - begin);
      std::vector<double> losses(end - begin);
#pragma omp parallel for schedule(dynamic, 1)
      for (std::size_t i = begin; i < end; ++i) {
        ad::Graph g;
        model::BoundParameters p(g, clf.params);
        const int target[] = {labels[order[i]]};
        ad::Var loss = ad::cross_entropy(forward(g, p, config, sequences[order[i]]).logits, target);
        g.backward(loss);
        losses[i - begin] = loss.value().item();
        grads[i - begin] = p.gradients();
      }
      ParamMap sum = std::move(grads[0]);
      for (std::size_t k = 1; k < grads.size(); ++k)
        for (auto& [name, a] : sum) {
          const Array& gk = grads[k].at(name);
          for (std::size_t j = 0; j < a.size(); ++j) a[j] += gk[j];
        }
      for (auto& [_, a] : sum)
        for (double& v : a.values()) v /= static_cast<double>(grads.size());
      adam_step(clf.params, sum, adam);
      for (double l : losses) total += l;
    }
    clf.epoch_loss.push_back(total / static_cast<double>(n));
  }
  return clf;
}

std::vector<double> classifier_features(const StyleClassifier& clf, const motion::PoseSequence& seq) {
  ad::Graph g;
  model::BoundParameters p(g, clf.params);
  return forward(g, p, clf.config, seq).feature.value().storage();
}

std::vector<double> classifier_logits(const StyleClassifier& clf, const motion::PoseSequence& seq) {
  ad::Graph g;
  model::BoundParameters p(g, clf.params);
  return forward(g, p, clf.config, seq).logits.value().storage();
}

int classify(const StyleClassifier& clf, const motion::PoseSequence& seq) {
  const auto logits = classifier_logits(clf, seq);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::vector<std::vector<std::size_t>> confusion_matrix(const StyleClassifier& clf,
                                                       std::span<const motion::PoseSequence> sequences,
                                                       std::span<const int> labels) {
  const std::size_t K = clf.config.classes;
  std::vector<std::vector<std::size_t>> m(K, std::vector<std::size_t>(K, 0));
  for (std::size_t i = 0; i < sequences.size(); ++i)
    ++m.at(static_cast<std::size_t>(labels[i])).at(static_cast<std::size_t>(classify(clf, sequences[i])));
  return m;
}

void save_classifier(const std::filesystem::path& path, const StyleClassifier& clf) {
  const ClassifierConfig& c = clf.config;
  nlohmann::json header = {{"format", "tsmt-style-classifier"},
                           {"version", 1},
                           {"config",
                            {{"model_dim", c.stream.model_dim},
                             {"head_dim", c.stream.head_dim},
                             {"heads", c.stream.heads},
                             {"blocks", c.stream.blocks},
                             {"classes", c.classes},
                             {"input_dims", c.input_dims},
                             {"ff_multiplier", c.ff_multiplier},
                             {"learning_rate", c.learning_rate},
                             {"epochs", c.epochs},
                             {"batch_size", c.batch_size}}},
                           {"class_names", clf.class_names},
                           {"seed", clf.seed},
                           {"epoch_loss", clf.epoch_loss}};
  std::vector<bundle::NamedArray> arrays;
  for (const auto& [name, a] : clf.params) arrays.push_back({name, a});
  bundle::write(path, kMagic, std::move(header), arrays);
}

StyleClassifier load_classifier(const std::filesystem::path& path) {
  try {
    bundle::Contents contents = bundle::read(path, kMagic);
    const auto& h = contents.header;
    if (h.at("version").get<int>() != 1) throw std::runtime_error("unsupported version");
    const auto& j = h.at("config");
    StyleClassifier clf;
    clf.config.stream = {j.at("model_dim").get<std::size_t>(), j.at("head_dim").get<std::size_t>(),
                         j.at("heads").get<std::size_t>(), j.at("blocks").get<std::size_t>()};
    clf.config.classes = j.at("classes").get<std::size_t>();
    clf.config.input_dims = j.at("input_dims").get<std::size_t>();
    clf.config.ff_multiplier = j.at("ff_multiplier").get<std::size_t>();
    clf.config.learning_rate = j.at("learning_rate").get<double>();
    clf.config.epochs = j.at("epochs").get<std::size_t>();
    clf.config.batch_size = j.at("batch_size").get<std::size_t>();
    clf.class_names = h.at("class_names").get<std::vector<std::string>>();
    clf.seed = h.at("seed").get<std::uint64_t>();
    clf.epoch_loss = h.at("epoch_loss").get<std::vector<double>>();
    for (auto& a : contents.arrays) clf.params.emplace(a.name, std::move(a.value));
    for (const auto& spec : layout(clf.config)) {
      const auto it = clf.params.find(spec.name);
      if (it == clf.params.end() || it->second.shape() != spec.shape) {
        throw std::runtime_error("array " + spec.name + " missing or misshapen");
      }
    }
    return clf;
  } catch (const std::exception& e) {
    throw std::runtime_error("classifier " + path.string() + ": " + e.what());
  }
}

}  // namespace tsmt::metrics
