#pragma once

// Finite-difference verification of the analytic gradients of a full slot
// model, one report per parameter group.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nbt/model.hpp"

namespace nbt {

struct GradCheckOptions {
  double step = 1e-5;               // central-difference half width
  std::size_t samples_per_group = 20;  // all entries when the group is smaller
  std::uint64_t seed = 7;
  // Denominator floor of the relative error, so that gradients that are both
  // numerically zero do not produce huge ratios from rounding noise.
  double floor = 1e-6;
  std::size_t word_dim = 4;
  std::size_t filters = 5;
  std::size_t hidden = 6;
  bool squashed_logits = false;
};

struct GroupCheck {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  Variant variant = Variant::kCnn;
  std::vector<GroupCheck> groups;
  double max_rel_error = 0.0;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

// Checks every parameter group of a small randomly initialized model on a
// fixed utterance with both request and confirm context, summing the loss of
// one positive and one negative candidate.
GradCheckReport gradient_check(Variant variant, const GradCheckOptions& options = {});

}  // namespace nbt
