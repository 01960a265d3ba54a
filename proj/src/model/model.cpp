#include "tsmt/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tsmt/numerics/rng.hpp"

namespace tsmt::model {

namespace {

ad::Var add_constant(ad::Var x, Array c) { return ad::add(x, x.graph->constant(std::move(c))); }

ad::Var linear(const ForwardContext& ctx, ad::Var x, const std::string& w, const std::string& b) {
  return ad::add_row(ad::matmul(x, ctx.params[w]), ctx.params[b]);
}

}  // namespace

void Example::validate(const TSMTConfig& config) const {
  if (frames == 0) throw std::invalid_argument("example: no frames");
  if (tokens.size() != frames * config.dims()) {
    throw std::invalid_argument("example: " + std::to_string(tokens.size()) + " tokens for " +
                                std::to_string(frames) + " frames of " + std::to_string(config.dims()) + " dims");
  }
  for (int t : tokens)
    if (t < 0 || t >= config.bins) {
      throw std::invalid_argument("example: token " + std::to_string(t) + " outside [0, " +
                                  std::to_string(config.bins) + ")");
    }
  if (config.use_audio) {
    if (audio.rank() != 2 || audio.dim(0) < frames || audio.dim(1) != config.audio_features) {
      throw std::invalid_argument("example: audio features " + shape_string(audio.shape()) + " do not cover " +
                                  std::to_string(frames) + " frames of " + std::to_string(config.audio_features) +
                                  " channels");
    }
    if (beat.size() < frames) throw std::invalid_argument("example: beat flags shorter than the pose");
    if (!audio.all_finite()) throw std::invalid_argument("example: non-finite audio features");
  }
}

void append_stream_layout(std::vector<ParamSpec>& out, const std::string& prefix, const StreamConfig& s,
                          std::size_t ff_multiplier) {
  const std::size_t D = s.model_dim, A = s.attention_dim(), F = ff_multiplier * D;
  for (std::size_t b = 0; b < s.blocks; ++b) {
    const std::string p = prefix + ".block" + std::to_string(b) + ".";
    out.push_back({p + "wq", {D, A}, Init::kGlorot, D, A});
    out.push_back({p + "wk", {D, A}, Init::kGlorot, D, A});
    out.push_back({p + "wv", {D, A}, Init::kGlorot, D, A});
    out.push_back({p + "wo", {A, D}, Init::kGlorot, A, D});
    out.push_back({p + "bo", {D}, Init::kZeros});
    out.push_back({p + "ln1.g", {D}, Init::kOnes});
    out.push_back({p + "ln1.b", {D}, Init::kZeros});
    out.push_back({p + "ff1.w", {D, F}, Init::kGlorot, D, F});
    out.push_back({p + "ff1.b", {F}, Init::kZeros});
    out.push_back({p + "ff2.w", {F, D}, Init::kGlorot, F, D});
    out.push_back({p + "ff2.b", {D}, Init::kZeros});
    out.push_back({p + "ln2.g", {D}, Init::kOnes});
    out.push_back({p + "ln2.b", {D}, Init::kZeros});
  }
}

std::vector<ParamSpec> parameter_layout(const TSMTConfig& c) {
  std::vector<ParamSpec> out;
  const std::size_t bins = static_cast<std::size_t>(c.bins);
  const std::size_t D = c.pose.model_dim;
  out.push_back({"pose.embed", {c.embed_dim, bins}, Init::kNormal});
  out.push_back({"pose.in.w", {c.dims() * c.embed_dim, D}, Init::kGlorot, c.dims() * c.embed_dim, D});
  out.push_back({"pose.in.b", {D}, Init::kZeros});
  append_stream_layout(out, "pose", c.pose, c.ff_multiplier);
  if (c.use_audio) {
    const std::size_t cin = c.audio_features + c.beat_embed_dim, DA = c.audio.model_dim;
    out.push_back({"audio.beat_embed", {2, c.beat_embed_dim}, Init::kNormal});
    out.push_back({"audio.conv.w", {c.conv_kernel, cin, DA}, Init::kGlorot, c.conv_kernel * cin, DA});
    out.push_back({"audio.conv.b", {DA}, Init::kZeros});
    append_stream_layout(out, "audio", c.audio, c.ff_multiplier);
  }
  out.push_back({"fuse.start", {D}, Init::kZeros});
  out.push_back({"fuse.wx", {D, c.logits()}, Init::kZeros});
  if (c.use_audio) out.push_back({"fuse.wa", {c.audio.model_dim, c.logits()}, Init::kZeros});
  out.push_back({"fuse.b", {c.logits()}, Init::kZeros});
  return out;
}

ParamMap init_parameters(const TSMTConfig& config, std::uint64_t seed) {
  config.validate();
  return init_from_layout(parameter_layout(config), seed);
}

ParamMap init_from_layout(const std::vector<ParamSpec>& layout, std::uint64_t seed) {
  Rng rng(seed);
  ParamMap params;
  for (const ParamSpec& spec : layout) {
    Array a(spec.shape);
    switch (spec.init) {
      case Init::kZeros:
        break;
      case Init::kOnes:
        for (double& v : a.values()) v = 1.0;
        break;
      case Init::kNormal:
        for (double& v : a.values()) v = rng.normal();
        break;
      case Init::kGlorot: {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.fan_in + spec.fan_out));
        for (double& v : a.values()) v = rng.uniform(-limit, limit);
        break;
      }
    }
    params.emplace(spec.name, std::move(a));
  }
  return params;
}

void validate_parameters(const TSMTConfig& config, const ParamMap& params) {
  const auto layout = parameter_layout(config);
  for (const ParamSpec& spec : layout) {
    const auto it = params.find(spec.name);
    if (it == params.end()) throw std::invalid_argument("parameters: missing " + spec.name);
    if (it->second.shape() != spec.shape) {
      throw std::invalid_argument("parameters: " + spec.name + " has shape " + shape_string(it->second.shape()) +
                                  ", expected " + shape_string(spec.shape));
    }
    if (!it->second.all_finite()) throw std::invalid_argument("parameters: " + spec.name + " is not finite");
  }
  if (params.size() != layout.size()) {
    for (const auto& [name, _] : params) {
      bool known = false;
      for (const ParamSpec& spec : layout) known = known || spec.name == name;
      if (!known) throw std::invalid_argument("parameters: unexpected array " + name);
    }
  }
}

std::size_t parameter_count(const ParamMap& params) {
  std::size_t n = 0;
  for (const auto& [_, a] : params) n += a.size();
  return n;
}

std::vector<double> positional_encoding_row(std::size_t t, std::size_t dim) {
  if (dim % 2 != 0) throw std::invalid_argument("positional_encoding: dimension " + std::to_string(dim) + " is odd");
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double angle =
        static_cast<double>(t) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
    row[2 * i] = std::sin(angle);
    row[2 * i + 1] = std::cos(angle);
  }
  return row;
}

Array positional_encoding(std::size_t frames, std::size_t dim) {
  if (dim % 2 != 0) throw std::invalid_argument("positional_encoding: dimension " + std::to_string(dim) + " is odd");
  Array pe({frames, dim});
  for (std::size_t t = 0; t < frames; ++t) {
    const std::vector<double> row = positional_encoding_row(t, dim);
    std::copy(row.begin(), row.end(), pe.data() + t * dim);
  }
  return pe;
}

BoundParameters::BoundParameters(ad::Graph& graph, const ParamMap& params) {
  for (const auto& [name, value] : params) vars_.emplace(name, graph.parameter(value));
}

ad::Var BoundParameters::operator[](const std::string& name) const {
  const auto it = vars_.find(name);
  if (it == vars_.end()) throw std::invalid_argument("parameters: missing " + name);
  return it->second;
}

ParamMap BoundParameters::gradients() const {
  ParamMap out;
  for (const auto& [name, var] : vars_) out.emplace(name, var.grad());
  return out;
}

ad::Var embed_pose(const ForwardContext& ctx, std::span<const int> tokens, std::size_t frames) {
  const TSMTConfig& c = ctx.config;
  ad::Var e = ad::embed(ctx.params["pose.embed"], tokens, frames, c.dims(), true);
  ad::Var x = linear(ctx, e, "pose.in.w", "pose.in.b");
  return add_constant(x, positional_encoding(frames, c.pose.model_dim));
}

ad::Var embed_audio(const ForwardContext& ctx, const Array& features, std::span<const std::uint8_t> beat) {
  const TSMTConfig& c = ctx.config;
  const std::size_t T = features.rows();
  if (features.cols() != c.audio_features || beat.size() != T) {
    throw std::invalid_argument("embed_audio: features " + shape_string(features.shape()) + " with " +
                                std::to_string(beat.size()) + " beat flags");
  }
  std::vector<int> flags(beat.begin(), beat.end());
  for (int& f : flags) f = f ? 1 : 0;
  ad::Var beats = ad::embed(ctx.params["audio.beat_embed"], flags, T, 1, false);
  const ad::Var parts[] = {ctx.graph.constant(features), beats};
  ad::Var x = ad::conv1d_causal(ad::concat_cols(parts), ctx.params["audio.conv.w"], ctx.params["audio.conv.b"]);
  return add_constant(x, positional_encoding(T, c.audio.model_dim));
}

ad::Var attention_layer(const ForwardContext& ctx, const std::string& p, const StreamConfig& s, ad::Var x,
                        bool causal) {
  const std::size_t Di = s.head_dim;
  ad::Var q = ad::matmul(x, ctx.params[p + "wq"]);
  ad::Var k = ad::matmul(x, ctx.params[p + "wk"]);
  ad::Var v = ad::matmul(x, ctx.params[p + "wv"]);
  const double scale = 1.0 / std::sqrt(static_cast<double>(Di));
  std::vector<ad::Var> heads;
  for (std::size_t h = 0; h < s.heads; ++h) {
    ad::Var qh = ad::slice_cols(q, h * Di, Di);
    ad::Var kh = ad::slice_cols(k, h * Di, Di);
    ad::Var vh = ad::slice_cols(v, h * Di, Di);
    ad::Var scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), scale);
    if (causal) scores = ad::causal_mask(scores);
    ad::Var probs = ad::softmax(scores);
    if (!probs.value().all_finite()) {
      throw std::runtime_error("attention: non-finite probabilities in " + p + "head" + std::to_string(h) +
                               " (input finite: " + (x.value().all_finite() ? "yes" : "no") + ")");
    }
    heads.push_back(ad::matmul(ad::dropout(probs, ctx.dropout), vh));
  }
  ad::Var attended = linear(ctx, ad::concat_cols(heads), p + "wo", p + "bo");
  ad::Var x1 = ad::layer_norm(ad::add(x, attended), ctx.params[p + "ln1.g"], ctx.params[p + "ln1.b"]);
  ad::Var f = ad::relu(linear(ctx, x1, p + "ff1.w", p + "ff1.b"));
  f = ad::dropout(linear(ctx, f, p + "ff2.w", p + "ff2.b"), ctx.dropout);
  return ad::layer_norm(ad::add(x1, f), ctx.params[p + "ln2.g"], ctx.params[p + "ln2.b"]);
}

ad::Var stream_forward(const ForwardContext& ctx, const std::string& prefix, const StreamConfig& stream, ad::Var x,
                       bool causal) {
  if (x.value().cols() != stream.model_dim) {
    throw std::invalid_argument("stream_forward: input " + shape_string(x.shape()) + " for model dim " +
                                std::to_string(stream.model_dim));
  }
  for (std::size_t b = 0; b < stream.blocks; ++b)
    x = attention_layer(ctx, prefix + ".block" + std::to_string(b) + ".", stream, x, causal);
  return x;
}

ad::Var fuse_logits(const ForwardContext& ctx, std::optional<ad::Var> zx, std::optional<ad::Var> za,
                    std::size_t frames) {
  const TSMTConfig& c = ctx.config;
  if (frames == 0) throw std::invalid_argument("fuse_logits: no frames");
  ad::Var start = ad::reshape(ctx.params["fuse.start"], {1, c.pose.model_dim});
  ad::Var shifted = start;
  if (frames > 1) {
    if (!zx || zx->value().rows() + 1 < frames || zx->value().cols() != c.pose.model_dim) {
      throw std::invalid_argument("fuse_logits: pose stream output does not cover " + std::to_string(frames - 1) +
                                  " steps");
    }
    const ad::Var rows[] = {start, ad::slice_rows(*zx, 0, frames - 1)};
    shifted = ad::concat_rows(rows);
  }
  ad::Var logits = ad::add_row(ad::matmul(shifted, ctx.params["fuse.wx"]), ctx.params["fuse.b"]);
  if (c.use_audio) {
    if (!za || za->value().rows() < frames || za->value().cols() != c.audio.model_dim) {
      throw std::invalid_argument("fuse_logits: audio stream output does not cover " + std::to_string(frames) +
                                  " steps");
    }
    ad::Var a = za->value().rows() == frames ? *za : ad::slice_rows(*za, 0, frames);
    logits = ad::add(logits, ad::matmul(a, ctx.params["fuse.wa"]));
  }
  return ad::log_softmax(ad::reshape(logits, {frames * c.dims(), static_cast<std::size_t>(c.bins)}));
}

ad::Var sequence_log_probs(const ForwardContext& ctx, const Example& ex) {
  const TSMTConfig& c = ctx.config;
  ex.validate(c);
  const std::size_t T = ex.frames;
  std::optional<ad::Var> zx, za;
  if (T > 1) {
    // The last frame is only ever a target, never history.
    ad::Var x = embed_pose(ctx, std::span(ex.tokens).first((T - 1) * c.dims()), T - 1);
    zx = stream_forward(ctx, "pose", c.pose, x, true);
  }
  if (c.use_audio) {
    Array feats = ex.audio.rows() == T ? ex.audio : Array({T, c.audio_features},
                                                          std::vector<double>(ex.audio.data(),
                                                                              ex.audio.data() + T * c.audio_features));
    ad::Var a = embed_audio(ctx, feats, std::span(ex.beat).first(T));
    za = stream_forward(ctx, "audio", c.audio, a, c.causal_audio);
  }
  return fuse_logits(ctx, zx, za, T);
}

ad::Var example_loss(const ForwardContext& ctx, const Example& ex) {
  return ad::nll(sequence_log_probs(ctx, ex), std::span(ex.tokens).first(ex.frames * ctx.config.dims()));
}

Array log_probs(const TSMTConfig& config, const ParamMap& params, const Example& example) {
  ad::Graph g;
  BoundParameters bound(g, params);
  const ForwardContext ctx{g, bound, config, 0.0};
  Array out = sequence_log_probs(ctx, example).value();
  return out.reshaped({example.frames, config.dims(), static_cast<std::size_t>(config.bins)});
}

double training_loss(const TSMTConfig& config, const ParamMap& params, std::span<const Example> batch) {
  if (batch.empty()) throw std::invalid_argument("training_loss: empty batch");
  double total = 0.0;
  for (const Example& ex : batch) {
    ad::Graph g;
    BoundParameters bound(g, params);
    const ForwardContext ctx{g, bound, config, 0.0};
    total += example_loss(ctx, ex).value().item();
  }
  return total / static_cast<double>(batch.size());
}

LossAndGradient loss_and_gradient(const TSMTConfig& config, const ParamMap& params, std::span<const Example> batch,
                                  std::uint64_t dropout_seed, bool training) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
  const std::size_t n = batch.size();
  std::vector<double> losses(n);
  std::vector<ParamMap> grads(n);
  std::vector<std::string> errors(n);
  const Rng root(dropout_seed);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      ad::Graph g;
      g.training = training;
      g.rng = root.split(i);
      BoundParameters bound(g, params);
      const ForwardContext ctx{g, bound, config, config.dropout};
      ad::Var loss = example_loss(ctx, batch[i]);
      g.backward(loss);
      losses[i] = loss.value().item();
      grads[i] = bound.gradients();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const std::string& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  LossAndGradient out;
  const double inv = 1.0 / static_cast<double>(n);
  out.gradients = std::move(grads[0]);
  out.loss = losses[0];
  for (std::size_t i = 1; i < n; ++i) {
    out.loss += losses[i];
    for (auto& [name, g] : out.gradients) {
      const Array& gi = grads[i].at(name);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += gi[j];
    }
  }
  out.loss *= inv;
  for (auto& [_, g] : out.gradients)
    for (double& v : g.values()) v *= inv;
  return out;
}

}  // namespace tsmt::model
