#pragma once

// Central finite-difference oracle for reverse-mode gradients. Lives in test
// code only; the analytic side is whatever the graph computes.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tsmt/numerics/autodiff.hpp"

namespace tsmt::testing {

using Builder = std::function<ad::Var(ad::Graph&, const std::vector<ad::Var>&)>;

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

/// Gradients below this magnitude are compared absolutely.
constexpr double kRelFloor = 1e-3;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
}

/// Builds the scalar loss from `inputs` (all trainable), runs backward and
/// compares every input gradient entry against central differences.
inline GradCheck check_gradient(const Builder& build, std::vector<Array> inputs, double step = 1e-5) {
  std::vector<Array> analytic;
  {
    ad::Graph g;
    std::vector<ad::Var> leaves;
    for (const Array& a : inputs) leaves.push_back(g.variable(a));
    ad::Var loss = build(g, leaves);
    g.backward(loss);
    for (const ad::Var& v : leaves) analytic.push_back(v.grad());
  }
  auto eval = [&](const std::vector<Array>& xs) {
    ad::Graph g;
    std::vector<ad::Var> leaves;
    for (const Array& a : xs) leaves.push_back(g.constant(a));
    return build(g, leaves).value().item();
  };
  GradCheck out;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double orig = inputs[k][i];
      inputs[k][i] = orig + step;
      const double fp = eval(inputs);
      inputs[k][i] = orig - step;
      const double fm = eval(inputs);
      inputs[k][i] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic[k][i], numeric));
      out.max_abs_error = std::max(out.max_abs_error, std::abs(analytic[k][i] - numeric));
    }
  }
  return out;
}

inline Array random_array(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Array a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return a;
}

/// Projects an arbitrary-shaped output to a scalar with fixed random weights
/// so every output entry contributes a distinct gradient.
inline ad::Var project(ad::Graph& g, ad::Var out, std::uint64_t seed) {
  Rng rng(seed);
  Array w = random_array(rng, out.shape());
  return ad::sum(ad::mul(out, g.constant(std::move(w))));
}

}  // namespace tsmt::testing
