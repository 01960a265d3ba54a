#include "tsmt/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "tsmt/numerics/kernels.hpp"

namespace tsmt::ad {

const Array& Var::value() const { return graph->value(id); }
const Array& Var::grad() const { return graph->grad(id); }

Var Graph::constant(Array value) {
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::variable(Array value) {
  Node n;
  n.own = std::move(value);
  n.requires_grad = true;
  n.trainable = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Graph::parameter(const Array& value) {
  Node n;
  n.external = &value;
  n.requires_grad = true;
  n.trainable = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Array& Graph::value(std::size_t id) const { return node_value(nodes_.at(id)); }

const Array& Graph::grad(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.grad.size() == node_value(n).size() && n.grad.shape() == node_value(n).shape()) return n.grad;
  zero_cache_ = Array(node_value(n).shape());
  return zero_cache_;
}

Array& Graph::grad_accumulator(std::size_t id) {
  Node& n = nodes_[id];
  const Array& v = node_value(n);
  if (n.grad.shape() != v.shape() || n.grad.size() != v.size()) n.grad = Array(v.shape());
  return n.grad;
}

Var Graph::record(Array value, std::span<const Var> inputs, BackwardFn fn) {
  Node n;
  n.own = std::move(value);
  for (const Var& in : inputs) {
    if (in.graph != this) throw std::invalid_argument("autodiff: operands live on different graphs");
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw std::invalid_argument("backward: loss belongs to another graph");
  if (loss.value().size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                shape_string(loss.value().shape()));
  }
  if (backward_done_) throw std::logic_error("backward: already run on this graph; call zero_grad first");
  backward_done_ = true;
  grad_accumulator(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

void Graph::zero_grad() {
  for (Node& n : nodes_) n.grad = Array();
  backward_done_ = false;
}

namespace {

using kernels::Gemm;

void require_rank2(const Array& a, const char* what) {
  if (a.rank() != 2) {
    throw std::invalid_argument(std::string(what) + ": expected a matrix, got shape " +
                                shape_string(a.shape()));
  }
}

bool wants(Graph& g, std::size_t id) { return g.requires_grad(id); }

template <typename Fn>
Var unary_elementwise(Var a, Fn f, std::function<double(double x, double y)> dydx) {
  const Array& av = a.value();
  Array out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  const Var ins[] = {a};
  return a.graph->record(std::move(out), ins, [a, dydx](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    const Array& x = g.value(a.id);
    const Array& y = g.value(self);
    Array& gx = g.grad_accumulator(a.id);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * dydx(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Array& av = a.value();
  const Array& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.dim(1) != bv.dim(0)) {
    throw std::invalid_argument("matmul: shape mismatch " + shape_string(av.shape()) + " x " +
                                shape_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Array out({m, n});
  kernels::gemm({m, n, k, false, false, false}, av.data(), bv.data(), out.data());
  const Var ins[] = {a, b};
  return a.graph->record(std::move(out), ins, [a, b, m, k, n](Graph& g, std::size_t self) {
    const Array& gc = g.grad(self);
    if (wants(g, a.id)) {
      // dA = dC * B^T
      kernels::gemm({m, k, n, false, true, true}, gc.data(), g.value(b.id).data(),
                    g.grad_accumulator(a.id).data());
    }
    if (wants(g, b.id)) {
      // dB = A^T * dC
      kernels::gemm({k, n, m, true, false, true}, g.value(a.id).data(), gc.data(),
                    g.grad_accumulator(b.id).data());
    }
  });
}

namespace {

Var binary_same_shape(Var a, Var b, const char* what, double sign_b, bool product) {
  const Array& av = a.value();
  const Array& bv = b.value();
  require_same_shape(av.shape(), bv.shape(), what);
  Array out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = product ? av[i] * bv[i] : av[i] + sign_b * bv[i];
  const Var ins[] = {a, b};
  return a.graph->record(std::move(out), ins, [a, b, sign_b, product](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    if (wants(g, a.id)) {
      Array& ga = g.grad_accumulator(a.id);
      const Array& bv = g.value(b.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += product ? gy[i] * bv[i] : gy[i];
    }
    if (wants(g, b.id)) {
      Array& gb = g.grad_accumulator(b.id);
      const Array& av = g.value(a.id);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += product ? gy[i] * av[i] : sign_b * gy[i];
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return binary_same_shape(a, b, "add", 1.0, false); }
Var sub(Var a, Var b) { return binary_same_shape(a, b, "sub", -1.0, false); }
Var mul(Var a, Var b) { return binary_same_shape(a, b, "mul", 0.0, true); }

Var scale(Var a, double s) {
  return unary_elementwise(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_row(Var a, Var bias) {
  const Array& av = a.value();
  const Array& bv = bias.value();
  if (bv.size() != av.cols()) {
    throw std::invalid_argument("add_row: shape mismatch " + shape_string(av.shape()) + " + " +
                                shape_string(bv.shape()));
  }
  Array out = av;
  const std::size_t rows = av.rows(), cols = av.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  const Var ins[] = {a, bias};
  return a.graph->record(std::move(out), ins, [a, bias, rows, cols](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    if (wants(g, a.id)) {
      Array& ga = g.grad_accumulator(a.id);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
    }
    if (wants(g, bias.id)) {
      Array& gb = g.grad_accumulator(bias.id);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += gy[r * cols + c];
    }
  });
}

Var relu(Var a) {
  return unary_elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var transpose(Var a) {
  const Array& av = a.value();
  require_rank2(av, "transpose");
  const std::size_t r = av.dim(0), c = av.dim(1);
  Array out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  const Var ins[] = {a};
  return a.graph->record(std::move(out), ins, [a, r, c](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    Array& ga = g.grad_accumulator(a.id);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += gy[j * r + i];
  });
}

Var reshape(Var a, Shape shape) {
  Array out = a.value().reshaped(std::move(shape));
  const Var ins[] = {a};
  return a.graph->record(std::move(out), ins, [a](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    Array& ga = g.grad_accumulator(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
  });
}

Var softmax(Var a) {
  Array out = a.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  kernels::softmax_rows(out.data(), rows, cols);
  const Var ins[] = {a};
  return a.graph->record(std::move(out), ins, [a, rows, cols](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    const Array& y = g.value(self);
    Array& ga = g.grad_accumulator(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += gy[o + c] * y[o + c];
      for (std::size_t c = 0; c < cols; ++c) ga[o + c] += y[o + c] * (gy[o + c] - dot);
    }
  });
}

Var log_softmax(Var a) {
  Array out = a.value();
  const std::size_t rows = out.rows(), cols = out.cols();
  kernels::log_softmax_rows(out.data(), rows, cols);
  const Var ins[] = {a};
  return a.graph->record(std::move(out), ins, [a, rows, cols](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    const Array& y = g.value(self);
    Array& ga = g.grad_accumulator(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t o = r * cols;
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += gy[o + c];
      for (std::size_t c = 0; c < cols; ++c) ga[o + c] += gy[o + c] - std::exp(y[o + c]) * total;
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Array& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (gain.value().size() != cols || bias.value().size() != cols) {
    throw std::invalid_argument("layer_norm: shape mismatch " + shape_string(xv.shape()) + " with gain " +
                                shape_string(gain.value().shape()) + " / bias " +
                                shape_string(bias.value().shape()));
  }
  const Array& gv = gain.value();
  const Array& bv = bias.value();
  Array out(xv.shape());
  // Normalised activations and inverse std are kept for the backward pass.
  auto xhat = std::make_shared<std::vector<double>>(xv.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xv.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < cols; ++c) {
      const double h = (row[c] - mu) * is;
      (*xhat)[r * cols + c] = h;
      out[r * cols + c] = h * gv[c] + bv[c];
    }
  }
  const Var ins[] = {x, gain, bias};
  return x.graph->record(std::move(out), ins, [x, gain, bias, rows, cols, xhat, inv_std](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    const Array& gv = g.value(gain.id);
    if (wants(g, gain.id) || wants(g, bias.id)) {
      Array* gg = wants(g, gain.id) ? &g.grad_accumulator(gain.id) : nullptr;
      Array* gb = wants(g, bias.id) ? &g.grad_accumulator(bias.id) : nullptr;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t i = r * cols + c;
          if (gg) (*gg)[c] += gy[i] * (*xhat)[i];
          if (gb) (*gb)[c] += gy[i];
        }
      }
    }
    if (!wants(g, x.id)) return;
    Array& gx = g.grad_accumulator(x.id);
    const double n = static_cast<double>(cols);
    for (std::size_t r = 0; r < rows; ++r) {
      double mean_d = 0.0, mean_dh = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        const double d = gy[i] * gv[c];
        mean_d += d;
        mean_dh += d * (*xhat)[i];
      }
      mean_d /= n;
      mean_dh /= n;
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        const double d = gy[i] * gv[c];
        gx[i] += (*inv_std)[r] * (d - mean_d - (*xhat)[i] * mean_dh);
      }
    }
  });
}

Var conv1d_causal(Var x, Var w, Var bias) {
  const Array& xv = x.value();
  const Array& wv = w.value();
  require_rank2(xv, "conv1d_causal");
  if (wv.rank() != 3 || wv.dim(1) != xv.dim(1) || bias.value().size() != wv.dim(2)) {
    throw std::invalid_argument("conv1d_causal: shape mismatch input " + shape_string(xv.shape()) +
                                " kernel " + shape_string(wv.shape()) + " bias " +
                                shape_string(bias.value().shape()));
  }
  const std::size_t T = xv.dim(0), cin = xv.dim(1), K = wv.dim(0), cout = wv.dim(2);
  Array out({T, cout});
  const Array& bv = bias.value();
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t o = 0; o < cout; ++o) out[t * cout + o] = bv[o];
  // Tap k reads input row t - (K-1) + k.
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t shift = K - 1 - k;
    if (shift >= T) continue;
    const std::size_t len = T - shift;
    kernels::gemm({len, cout, cin, false, false, true}, xv.data(), wv.data() + k * cin * cout,
                  out.data() + shift * cout);
  }
  const Var ins[] = {x, w, bias};
  return x.graph->record(std::move(out), ins, [x, w, bias, T, cin, K, cout](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    if (wants(g, bias.id)) {
      Array& gb = g.grad_accumulator(bias.id);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t o = 0; o < cout; ++o) gb[o] += gy[t * cout + o];
    }
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t shift = K - 1 - k;
      if (shift >= T) continue;
      const std::size_t len = T - shift;
      if (wants(g, w.id)) {
        kernels::gemm({cin, cout, len, true, false, true}, g.value(x.id).data(), gy.data() + shift * cout,
                      g.grad_accumulator(w.id).data() + k * cin * cout);
      }
      if (wants(g, x.id)) {
        kernels::gemm({len, cin, cout, false, true, true}, gy.data() + shift * cout,
                      g.value(w.id).data() + k * cin * cout, g.grad_accumulator(x.id).data());
      }
    }
  });
}

Var embed(Var table, std::span<const int> tokens, std::size_t rows, std::size_t cols, bool by_column) {
  const Array& tv = table.value();
  require_rank2(tv, "embed");
  if (tokens.size() != rows * cols) {
    throw std::invalid_argument("embed: token count " + std::to_string(tokens.size()) + " does not match " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  const std::size_t vocab = by_column ? tv.dim(1) : tv.dim(0);
  const std::size_t D = by_column ? tv.dim(0) : tv.dim(1);
  std::vector<int> toks(tokens.begin(), tokens.end());
  for (int t : toks) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw std::invalid_argument("embed: token " + std::to_string(t) + " outside vocabulary of " +
                                  std::to_string(vocab));
    }
  }
  auto entry = [by_column, vocab, D](std::size_t tok, std::size_t e) {
    return by_column ? e * vocab + tok : tok * D + e;
  };
  Array out({rows, cols * D});
  for (std::size_t i = 0; i < toks.size(); ++i)
    for (std::size_t e = 0; e < D; ++e) out[i * D + e] = tv[entry(static_cast<std::size_t>(toks[i]), e)];
  const Var ins[] = {table};
  return table.graph->record(std::move(out), ins, [table, toks = std::move(toks), D, entry](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    Array& gt = g.grad_accumulator(table.id);
    for (std::size_t i = 0; i < toks.size(); ++i)
      for (std::size_t e = 0; e < D; ++e) gt[entry(static_cast<std::size_t>(toks[i]), e)] += gy[i * D + e];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t rows = parts[0].value().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank2(p.value(), "concat_cols");
    if (p.value().rows() != rows) {
      throw std::invalid_argument("concat_cols: shape mismatch " + shape_string(parts[0].shape()) + " vs " +
                                  shape_string(p.shape()));
    }
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Array out({rows, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Array& pv = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * widths[k], widths[k], out.data() + r * total + off);
    off += widths[k];
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return parts[0].graph->record(std::move(out), ins, [ins, widths, rows, total](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ins.size(); ++k) {
      if (wants(g, ins[k].id)) {
        Array& gp = g.grad_accumulator(ins[k].id);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) gp[r * widths[k] + c] += gy[r * total + off + c];
      }
      off += widths[k];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require_rank2(p.value(), "concat_rows");
    if (p.value().cols() != cols) {
      throw std::invalid_argument("concat_rows: shape mismatch " + shape_string(parts[0].shape()) + " vs " +
                                  shape_string(p.shape()));
    }
    rows += p.value().rows();
  }
  Array out({rows, cols});
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().storage().begin(), p.value().storage().end(), out.data() + off);
    off += p.value().size();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return parts[0].graph->record(std::move(out), ins, [ins](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    std::size_t off = 0;
    for (const Var& p : ins) {
      const std::size_t n = g.value(p.id).size();
      if (wants(g, p.id)) {
        Array& gp = g.grad_accumulator(p.id);
        for (std::size_t i = 0; i < n; ++i) gp[i] += gy[off + i];
      }
      off += n;
    }
  });
}

Var slice_cols(Var a, std::size_t start, std::size_t len) {
  const Array& av = a.value();
  require_rank2(av, "slice_cols");
  const std::size_t rows = av.dim(0), cols = av.dim(1);
  if (start + len > cols) {
    throw std::invalid_argument("slice_cols: columns [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of " + shape_string(av.shape()));
  }
  Array out({rows, len});
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(av.data() + r * cols + start, len, out.data() + r * len);
  const Var ins[] = {a};
  return a.graph->record(std::move(out), ins, [a, start, len, rows, cols](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    Array& ga = g.grad_accumulator(a.id);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < len; ++c) ga[r * cols + start + c] += gy[r * len + c];
  });
}

Var slice_rows(Var a, std::size_t start, std::size_t len) {
  const Array& av = a.value();
  require_rank2(av, "slice_rows");
  const std::size_t rows = av.dim(0), cols = av.dim(1);
  if (start + len > rows) {
    throw std::invalid_argument("slice_rows: rows [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of " + shape_string(av.shape()));
  }
  Array out({len, cols});
  std::copy_n(av.data() + start * cols, len * cols, out.data());
  const Var ins[] = {a};
  return a.graph->record(std::move(out), ins, [a, start, cols](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    Array& ga = g.grad_accumulator(a.id);
    for (std::size_t i = 0; i < gy.size(); ++i) ga[start * cols + i] += gy[i];
  });
}

Var causal_mask(Var scores) {
  const Array& sv = scores.value();
  require_rank2(sv, "causal_mask");
  if (sv.dim(0) != sv.dim(1)) throw std::invalid_argument("causal_mask: non-square " + shape_string(sv.shape()));
  const std::size_t n = sv.dim(0);
  Array out = sv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out[i * n + j] = -std::numeric_limits<double>::infinity();
  const Var ins[] = {scores};
  return scores.graph->record(std::move(out), ins, [scores, n](Graph& g, std::size_t self) {
    const Array& gy = g.grad(self);
    Array& ga = g.grad_accumulator(scores.id);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) ga[i * n + j] += gy[i * n + j];
  });
}

Var dropout(Var a, double p) {
  Graph& g = *a.graph;
  if (!g.training || p <= 0.0) return a;
  const Array& av = a.value();
  Array mask(av.shape());
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = g.rng.uniform() < p ? 0.0 : keep;
  return mul(a, g.constant(std::move(mask)));
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const Var ins[] = {a};
  return a.graph->record(Array::scalar(s), ins, [a](Graph& g, std::size_t self) {
    const double gy = g.grad(self)[0];
    Array& ga = g.grad_accumulator(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw std::invalid_argument("mean: empty array");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var nll(Var logp, std::span<const int> targets) {
  const Array& lv = logp.value();
  const std::size_t rows = lv.rows(), cols = lv.cols();
  if (targets.size() != rows) {
    throw std::invalid_argument("nll: " + std::to_string(targets.size()) + " targets for logits " +
                                shape_string(lv.shape()));
  }
  if (rows == 0) throw std::invalid_argument("nll: empty batch");
  std::vector<int> tg(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (tg[r] < 0 || static_cast<std::size_t>(tg[r]) >= cols) {
      throw std::invalid_argument("nll: target " + std::to_string(tg[r]) + " outside " + std::to_string(cols) +
                                  " classes");
    }
    total -= lv[r * cols + static_cast<std::size_t>(tg[r])];
  }
  const double inv = 1.0 / static_cast<double>(rows);
  const Var ins[] = {logp};
  return logp.graph->record(Array::scalar(total * inv), ins, [logp, tg = std::move(tg), cols, inv](Graph& g, std::size_t self) {
    const double gy = g.grad(self)[0];
    Array& ga = g.grad_accumulator(logp.id);
    for (std::size_t r = 0; r < tg.size(); ++r) ga[r * cols + static_cast<std::size_t>(tg[r])] -= gy * inv;
  });
}

Var cross_entropy(Var logits, std::span<const int> targets) { return nll(log_softmax(logits), targets); }

}  // namespace tsmt::ad
