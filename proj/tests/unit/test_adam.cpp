#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "nbt/adam.hpp"
#include "nbt/errors.hpp"

namespace nbt {
namespace {

// Scalar reference update, written out directly from the Adam recurrences.
struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double theta, double g, const AdamConfig& c) {
    g = std::clamp(g, c.clip_min, c.clip_max);
    ++t;
    m = c.beta1 * m + (1 - c.beta1) * g;
    v = c.beta2 * v + (1 - c.beta2) * g * g;
    const double mh = m / (1 - std::pow(c.beta1, t));
    const double vh = v / (1 - std::pow(c.beta2, t));
    return theta - c.learning_rate * mh / (std::sqrt(vh) + c.epsilon);
  }
};

TEST(Adam, FirstStepMovesByLearningRate) {
  ParameterSet ps;
  Parameter& p = ps.add("w", Tensor::vector({0.0}));
  AdamState st = AdamState::for_parameters(ps);
  p.grad = Tensor::vector({1.0});
  adam_step(ps, st, AdamConfig{});
  EXPECT_NEAR(p.value[0], -0.001, 1e-10);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  ParameterSet ps;
  Parameter& p = ps.add("w", Tensor::vector({0.3, -0.7}));
  AdamState st = AdamState::for_parameters(ps);
  p.grad = Tensor::zeros(2);
  adam_step(ps, st, AdamConfig{});
  EXPECT_EQ(p.value, Tensor::vector({0.3, -0.7}));
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, GradientIsClippedBeforeMoments) {
  ParameterSet a, b;
  Parameter& pa = a.add("w", Tensor::vector({1.0}));
  Parameter& pb = b.add("w", Tensor::vector({1.0}));
  AdamState sa = AdamState::for_parameters(a), sb = AdamState::for_parameters(b);
  for (int i = 0; i < 3; ++i) {
    pa.grad = Tensor::vector({5.0});
    pb.grad = Tensor::vector({2.0});
    adam_step(a, sa, AdamConfig{});
    adam_step(b, sb, AdamConfig{});
  }
  EXPECT_EQ(pa.value, pb.value);
  EXPECT_EQ(sa.second_moment[0], sb.second_moment[0]);
}

TEST(Adam, MatchesReferenceOverManySteps) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 2.0);
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  ParameterSet ps;
  Parameter& p = ps.add("w", Tensor::vector({0.5, -0.25, 1.5}));
  AdamState st = AdamState::for_parameters(ps);
  std::vector<ScalarAdam> ref(3);
  std::vector<double> theta = {0.5, -0.25, 1.5};
  for (int step = 0; step < 50; ++step) {
    std::vector<double> g = {n(rng), n(rng), n(rng)};
    p.grad = Tensor::vector(g);
    adam_step(ps, st, cfg);
    for (std::size_t i = 0; i < 3; ++i) theta[i] = ref[i].step(theta[i], g[i], cfg);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.value[i], theta[i], 1e-12);
}

TEST(Adam, NonFiniteGradientLeavesParametersUntouched) {
  ParameterSet ps;
  ps.add("a", Tensor::vector({1.0}));
  Parameter& b = ps.add("b", Tensor::vector({2.0}));
  AdamState st = AdamState::for_parameters(ps);
  ps.get("a").grad = Tensor::vector({0.5});
  b.grad = Tensor::vector({std::numeric_limits<double>::quiet_NaN()});
  try {
    adam_step(ps, st, AdamConfig{});
    FAIL() << "expected NumericsError";
  } catch (const NumericsError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_EQ(ps.get("a").value, Tensor::vector({1.0}));
  EXPECT_EQ(st.step, 0u);
}

TEST(Adam, EmptyClipIntervalIsConfigError) {
  ParameterSet ps;
  ps.add("w", Tensor::vector({1.0}));
  AdamState st = AdamState::for_parameters(ps);
  AdamConfig cfg;
  cfg.clip_min = 1;
  cfg.clip_max = -1;
  EXPECT_THROW(adam_step(ps, st, cfg), ConfigError);
}

}  // namespace
}  // namespace nbt
