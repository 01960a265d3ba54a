#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsmt/model/config.hpp"
#include "tsmt/numerics/adam.hpp"
#include "tsmt/numerics/autodiff.hpp"

namespace tsmt::model {

/// A sequence in model units: pose tokens plus (standardised) audio features.
struct Example {
  std::vector<int> tokens;         // frames x dims, row-major
  std::size_t frames = 0;
  Array audio;                     // frames x audio_features
  std::vector<std::uint8_t> beat;  // frames flags

  /// Throws std::invalid_argument on any size or range mismatch with `config`.
  void validate(const TSMTConfig& config) const;
};

enum class Init { kZeros, kOnes, kNormal, kGlorot };

struct ParamSpec {
  std::string name;
  Shape shape;
  Init init;
  std::size_t fan_in = 0, fan_out = 0;
};

/// Every parameter of the model in a fixed order. Names:
///   pose.embed [E, bins], pose.in.w/b, pose.block{i}.{wq,wk,wv,wo,bo,ln1.g,ln1.b,ff1.w,ff1.b,ff2.w,ff2.b,ln2.g,ln2.b},
///   audio.beat_embed [2, beat], audio.conv.w [K, features+beat, D^A], audio.conv.b, audio.block{i}.*,
///   fuse.start [D^M], fuse.wx [D^M, dims*bins], fuse.wa [D^A, dims*bins], fuse.b.
std::vector<ParamSpec> parameter_layout(const TSMTConfig& config);
/// Appends `prefix`.block{i}.* entries for one attention stack.
void append_stream_layout(std::vector<ParamSpec>& out, const std::string& prefix, const StreamConfig& stream,
                          std::size_t ff_multiplier);
/// Draws every entry of `layout` from Rng(seed) in order.
ParamMap init_from_layout(const std::vector<ParamSpec>& layout, std::uint64_t seed);

/// Glorot-uniform projections, N(0, 1) embeddings, unit layer-norm gains and
/// a zero fusion head, so an untrained model predicts the uniform distribution.
ParamMap init_parameters(const TSMTConfig& config, std::uint64_t seed);

/// Checks names, shapes and finiteness against the layout.
void validate_parameters(const TSMTConfig& config, const ParamMap& params);
std::size_t parameter_count(const ParamMap& params);

/// PE(t, 2i) = sin(t / 10000^(2i/D)), PE(t, 2i+1) = cos(same), t from 0.
Array positional_encoding(std::size_t frames, std::size_t dim);
/// Row t of the encoding above.
std::vector<double> positional_encoding_row(std::size_t t, std::size_t dim);

/// Parameters placed on a graph as trainable leaves viewing the ParamMap.
class BoundParameters {
 public:
  BoundParameters(ad::Graph& graph, const ParamMap& params);
  ad::Var operator[](const std::string& name) const;
  /// Gradients of every parameter after backward().
  ParamMap gradients() const;

 private:
  std::map<std::string, ad::Var> vars_;
};

struct ForwardContext {
  ad::Graph& graph;
  const BoundParameters& params;
  const TSMTConfig& config;
  double dropout = 0.0;  // only applied while graph.training
};

/// tokens (frames x dims) -> frames x D^M.
ad::Var embed_pose(const ForwardContext& ctx, std::span<const int> tokens, std::size_t frames);
/// features (frames x audio_features) and beat flags -> frames x D^A.
ad::Var embed_audio(const ForwardContext& ctx, const Array& features, std::span<const std::uint8_t> beat);
/// One block: masked multi-head attention and a position-wise feed-forward,
/// each followed by a residual add and layer norm.
ad::Var attention_layer(const ForwardContext& ctx, const std::string& prefix, const StreamConfig& stream, ad::Var x,
                        bool causal);
/// Stacked blocks `prefix`.block0 .. block{n-1}; zero blocks is the identity.
ad::Var stream_forward(const ForwardContext& ctx, const std::string& prefix, const StreamConfig& stream, ad::Var x,
                       bool causal);
/// Per-step log-probabilities, (frames * dims) x bins. Step t combines pose
/// stream row t-1 (the learned start vector at t = 0) with audio row t.
/// `zx` must hold at least frames-1 rows (it may be absent when frames == 1);
/// `za` is ignored when audio is disabled.
ad::Var fuse_logits(const ForwardContext& ctx, std::optional<ad::Var> zx, std::optional<ad::Var> za,
                    std::size_t frames);

/// Teacher-forced log-probabilities of one example, (frames * dims) x bins.
ad::Var sequence_log_probs(const ForwardContext& ctx, const Example& example);
/// Mean negative log-likelihood over frames and dims.
ad::Var example_loss(const ForwardContext& ctx, const Example& example);

/// Evaluation-mode log-probabilities, frames x dims x bins.
Array log_probs(const TSMTConfig& config, const ParamMap& params, const Example& example);
/// Mean NLL over a batch of examples (evaluation mode, no dropout).
double training_loss(const TSMTConfig& config, const ParamMap& params, std::span<const Example> batch);

struct LossAndGradient {
  double loss = 0.0;
  ParamMap gradients;
};

/// Mean loss and its gradient over a batch. Each element runs on its own
/// graph (in parallel when OpenMP is available) with dropout drawn from
/// Rng(dropout_seed).split(i); gradients are reduced in element order.
LossAndGradient loss_and_gradient(const TSMTConfig& config, const ParamMap& params, std::span<const Example> batch,
                                  std::uint64_t dropout_seed, bool training = true);

}  // namespace tsmt::model
