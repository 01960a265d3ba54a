#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "tsmt/numerics/array.hpp"

namespace tsmt {

/// Named parameter arrays, ordered by name so iteration (and serialization)
/// order is stable.
using ParamMap = std::map<std::string, Array>;

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  ParamMap first_moment;
  ParamMap second_moment;
};

/// One bias-corrected Adam update over every parameter that has a gradient.
/// Moment arrays are created on first use; shape mismatches throw.
void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state);

}  // namespace tsmt
