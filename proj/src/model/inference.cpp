#include "tsmt/model/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsmt/numerics/kernels.hpp"

namespace tsmt::model {

namespace {

const Array& param(const ParamMap& params, const std::string& name) {
  const auto it = params.find(name);
  if (it == params.end()) throw std::invalid_argument("parameters: missing " + name);
  return it->second;
}

// y (n) = x (k) W (k x n) [+ b]
std::vector<double> matvec(std::span<const double> x, const Array& w, const Array* b = nullptr) {
  const std::size_t n = w.cols();
  std::vector<double> y(n, 0.0);
  if (b) std::copy(b->data(), b->data() + n, y.data());
  kernels::gemm({1, n, x.size(), false, false, b != nullptr}, x.data(), w.data(), y.data());
  return y;
}

void layer_norm(std::vector<double>& x, const Array& g, const Array& b) {
  const double n = static_cast<double>(x.size());
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= n;
  const double is = 1.0 / std::sqrt(var + 1e-5);
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - mu) * is * g[c] + b[c];
}

void add_positional(std::vector<double>& x, std::size_t t) {
  const std::vector<double> pe = positional_encoding_row(t, x.size());
  for (std::size_t c = 0; c < x.size(); ++c) x[c] += pe[c];
}

}  // namespace

StreamCache::StreamCache(const ParamMap& params, std::string prefix, const StreamConfig& stream,
                         std::size_t ff_multiplier, std::size_t capacity)
    : stream_(stream), ff_dim_(ff_multiplier * stream.model_dim), capacity_(capacity) {
  for (std::size_t b = 0; b < stream.blocks; ++b) {
    const std::string p = prefix + ".block" + std::to_string(b) + ".";
    Block blk{&param(params, p + "wq"),    &param(params, p + "wk"),    &param(params, p + "wv"),
              &param(params, p + "wo"),    &param(params, p + "bo"),    &param(params, p + "ln1.g"),
              &param(params, p + "ln1.b"), &param(params, p + "ff1.w"), &param(params, p + "ff1.b"),
              &param(params, p + "ff2.w"), &param(params, p + "ff2.b"), &param(params, p + "ln2.g"),
              &param(params, p + "ln2.b"), Array({capacity, stream.attention_dim()}),
              Array({capacity, stream.attention_dim()})};
    blocks_.push_back(std::move(blk));
  }
}

std::vector<double> StreamCache::push(std::vector<double> x) {
  if (size_ >= capacity_) {
    throw std::out_of_range("stream cache: context of " + std::to_string(capacity_) + " positions exhausted");
  }
  if (x.size() != stream_.model_dim) throw std::invalid_argument("stream cache: row width mismatch");
  const std::size_t D = stream_.model_dim, A = stream_.attention_dim(), Di = stream_.head_dim;
  const std::size_t t = size_, len = t + 1;
  const double scale = 1.0 / std::sqrt(static_cast<double>(Di));
  std::vector<double> scores(len), heads(A);
  std::uint64_t flops = 0;
  for (Block& blk : blocks_) {
    const std::vector<double> q = matvec(x, *blk.wq);
    const std::vector<double> k = matvec(x, *blk.wk);
    const std::vector<double> v = matvec(x, *blk.wv);
    std::copy(k.begin(), k.end(), blk.keys.data() + t * A);
    std::copy(v.begin(), v.end(), blk.values.data() + t * A);
    for (std::size_t h = 0; h < stream_.heads; ++h) {
      kernels::attend_one(q.data() + h * Di, blk.keys.data() + h * Di, blk.values.data() + h * Di, len, Di, A, scale,
                          scores.data(), heads.data() + h * Di);
    }
    std::vector<double> o = matvec(heads, *blk.wo, blk.bo);
    for (std::size_t c = 0; c < D; ++c) o[c] += x[c];
    layer_norm(o, *blk.ln1g, *blk.ln1b);
    std::vector<double> f = matvec(o, *blk.ff1w, blk.ff1b);
    for (double& val : f) val = std::max(val, 0.0);
    std::vector<double> y = matvec(f, *blk.ff2w, blk.ff2b);
    for (std::size_t c = 0; c < D; ++c) y[c] += o[c];
    layer_norm(y, *blk.ln2g, *blk.ln2b);
    x = std::move(y);
    flops += 4 * D * A + 2 * D * ff_dim_ + 2 * len * A;
  }
  last_flops_ = flops;
  ++size_;
  return x;
}

Decoder::Decoder(const TSMTConfig& config, const ParamMap& params)
    : config_(config), params_(params), pose_(params, "pose", config.pose, config.ff_multiplier, config.max_context) {
  if (config.use_audio && config.causal_audio) {
    audio_.emplace(params, "audio", config.audio, config.ff_multiplier, config.max_context);
  }
}

void Decoder::push_audio(std::span<const double> features, std::uint8_t beat) {
  if (!config_.use_audio) throw std::logic_error("decoder: audio is disabled for this model");
  if (!audio_) throw std::logic_error("decoder: bidirectional audio needs set_audio_context()");
  if (features.size() != config_.audio_features) throw std::invalid_argument("decoder: audio frame width mismatch");
  const Array& table = param(params_, "audio.beat_embed");
  std::vector<double> row(features.begin(), features.end());
  const std::size_t B = config_.beat_embed_dim;
  const double* e = table.data() + (beat ? 1 : 0) * B;
  row.insert(row.end(), e, e + B);
  conv_history_.push_back(std::move(row));
  const std::size_t K = config_.conv_kernel;
  if (conv_history_.size() > K) conv_history_.erase(conv_history_.begin());

  const Array& w = param(params_, "audio.conv.w");
  const Array& b = param(params_, "audio.conv.b");
  const std::size_t cin = w.dim(1), cout = w.dim(2);
  std::vector<double> y(b.data(), b.data() + cout);
  // Tap k reads the frame K-1-k steps back; missing history is zero padding.
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t back = K - 1 - k;
    if (back >= conv_history_.size()) continue;
    const std::vector<double>& xin = conv_history_[conv_history_.size() - 1 - back];
    kernels::gemm({1, cout, cin, false, false, true}, xin.data(), w.data() + k * cin * cout, y.data());
  }
  add_positional(y, audio_->size());
  audio_rows_.push_back(audio_->push(std::move(y)));
}

void Decoder::set_audio_context(const Array& features, std::span<const std::uint8_t> beat) {
  if (!config_.use_audio) throw std::logic_error("decoder: audio is disabled for this model");
  if (audio_) throw std::logic_error("decoder: causal audio is pushed frame by frame");
  if (features.rows() > config_.max_context) throw std::out_of_range("decoder: audio context exceeds max_context");
  ad::Graph g;
  BoundParameters bound(g, params_);
  const ForwardContext ctx{g, bound, config_, 0.0};
  const Array z = stream_forward(ctx, "audio", config_.audio, embed_audio(ctx, features, beat), false).value();
  audio_rows_.clear();
  for (std::size_t t = 0; t < z.rows(); ++t) audio_rows_.emplace_back(z.data() + t * z.cols(), z.data() + (t + 1) * z.cols());
}

void Decoder::push_pose(std::span<const int> tokens) {
  const std::size_t dims = config_.dims(), E = config_.embed_dim, bins = static_cast<std::size_t>(config_.bins);
  if (tokens.size() != dims) throw std::invalid_argument("decoder: pose frame has the wrong number of tokens");
  const Array& table = param(params_, "pose.embed");
  std::vector<double> e(dims * E);
  for (std::size_t d = 0; d < dims; ++d) {
    const int tok = tokens[d];
    if (tok < 0 || static_cast<std::size_t>(tok) >= bins) {
      throw std::invalid_argument("decoder: token " + std::to_string(tok) + " out of range");
    }
    for (std::size_t i = 0; i < E; ++i) e[d * E + i] = table[i * bins + static_cast<std::size_t>(tok)];
  }
  std::vector<double> x = matvec(e, param(params_, "pose.in.w"), &param(params_, "pose.in.b"));
  add_positional(x, pose_.size());
  last_pose_ = pose_.push(std::move(x));
  ++pose_steps_;
}

Array Decoder::next_log_probs() const {
  const std::size_t t = pose_steps_;
  if (t >= config_.max_context) {
    throw std::out_of_range("decoder: step " + std::to_string(t) + " is beyond the context of " +
                            std::to_string(config_.max_context));
  }
  if (config_.use_audio && audio_rows_.size() <= t) {
    throw std::logic_error("decoder: audio frame " + std::to_string(t) + " has not been provided");
  }
  const Array& start = param(params_, "fuse.start");
  std::span<const double> zx = t == 0 ? std::span<const double>(start.data(), start.size())
                                      : std::span<const double>(last_pose_);
  std::vector<double> logits = matvec(zx, param(params_, "fuse.wx"), &param(params_, "fuse.b"));
  if (config_.use_audio) {
    const Array& wa = param(params_, "fuse.wa");
    kernels::gemm({1, wa.cols(), wa.rows(), false, false, true}, audio_rows_[t].data(), wa.data(), logits.data());
  }
  Array out({config_.dims(), static_cast<std::size_t>(config_.bins)}, std::move(logits));
  kernels::log_softmax_rows(out.data(), out.rows(), out.cols());
  return out;
}

}  // namespace tsmt::model
