#pragma once

#include <cstdint>
#include <vector>

#include "nbt/defaults.hpp"
#include "nbt/graph.hpp"
#include "nbt/tensor.hpp"

namespace nbt {

struct AdamConfig {
  double learning_rate = defaults::kLearningRate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Each gradient entry is clamped to [clip_min, clip_max] before the moment
  // updates.
  double clip_min = defaults::kClipMin;
  double clip_max = defaults::kClipMax;
};

// First/second moment estimates for one ParameterSet, in parameter order.
struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;

  static AdamState for_parameters(const ParameterSet& params);
};

// One bias-corrected Adam update using the gradients accumulated in `params`.
// Throws ConfigError for an empty clip interval and NumericsError (naming the
// parameter) when a gradient entry is not finite; parameters are untouched in
// either case.
void adam_step(ParameterSet& params, AdamState& state, const AdamConfig& config);

}  // namespace nbt
