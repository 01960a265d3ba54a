#include "tsmt/numerics/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace tsmt {

void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state) {
  for (const auto& [name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) throw std::invalid_argument("adam_step: gradient for unknown parameter " + name);
    require_same_shape(it->second.shape(), g.shape(), ("adam_step(" + name + ")").c_str());
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (const auto& [name, g] : grads) {
    Array& p = params.at(name);
    Array& m = state.first_moment.try_emplace(name, p.shape()).first->second;
    Array& v = state.second_moment.try_emplace(name, p.shape()).first->second;
    require_same_shape(m.shape(), p.shape(), "adam_step moment");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

}  // namespace tsmt
