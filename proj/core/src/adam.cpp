#include "nbt/adam.hpp"

#include <algorithm>
#include <cmath>

#include "nbt/errors.hpp"

namespace nbt {

namespace {

Tensor zeros_like(const Tensor& t) {
  return t.rank() == 2 ? Tensor::zeros(t.rows(), t.cols()) : Tensor::zeros(t.size());
}

}  // namespace

AdamState AdamState::for_parameters(const ParameterSet& params) {
  AdamState s;
  for (const auto& p : params) {
    s.first_moment.push_back(zeros_like(p.value));
    s.second_moment.push_back(zeros_like(p.value));
  }
  return s;
}

void adam_step(ParameterSet& params, AdamState& state, const AdamConfig& config) {
  if (!(config.clip_min < config.clip_max)) {
    throw ConfigError("numerics", "adam: clip interval is empty");
  }
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw DimensionError("numerics", "adam: state does not match parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    if (!p.grad.all_finite()) {
      throw NumericsError("numerics",
                          "adam: non-finite gradient in parameter '" + p.name + "'");
    }
    if (!state.first_moment[i].same_shape(p.value)) {
      throw DimensionError("numerics", "adam: moment shape mismatch for '" + p.name + "'");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = std::clamp(p.grad[j], config.clip_min, config.clip_max);
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.value[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

}  // namespace nbt
