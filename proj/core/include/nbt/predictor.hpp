#pragma once

#include <map>
#include <span>
#include <string>

#include "nbt/domain.hpp"

namespace nbt {

// Turn-level probability that each candidate pair was expressed.
using ProbabilityMap = std::map<CandidatePair, double>;

// Anything that scores every candidate pair for one user hypothesis in its
// system-act context. Both the neural tracker and the delexicalisation
// baseline implement this, so they share the same belief-state update.
class TurnPredictor {
 public:
  virtual ~TurnPredictor() = default;
  virtual ProbabilityMap predict(std::span<const std::string> tokens,
                                 std::span<const SystemAct> acts) const = 0;
};

}  // namespace nbt
