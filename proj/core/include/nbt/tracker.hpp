#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbt/defaults.hpp"
#include "nbt/domain.hpp"
#include "nbt/predictor.hpp"

namespace nbt {

// Cumulative per-pair probabilities for informable slots. Each entry is an
// independent probability, not part of a distribution over values.
struct BeliefState {
  std::size_t turn = 0;
  ProbabilityMap probs;

  double get(const CandidatePair& pair) const {
    auto it = probs.find(pair);
    return it == probs.end() ? 0.0 : it->second;
  }
};

struct TurnOutput {
  std::map<std::string, std::optional<std::string>> goals;
  std::vector<std::string> requests;
  BeliefState belief;
};

using HypothesisEstimate = std::pair<ProbabilityMap, double>;  // (map, posterior)

// Σ_i posterior_i · P_i(pair); pairs missing from a hypothesis count as 0.
// Residual posterior mass (sum < 1) contributes nothing unless `renormalize`.
// Throws ValidationError if a posterior is negative or they sum above 1 + 1e-6.
ProbabilityMap combine_asr(std::span<const HypothesisEstimate> hypotheses,
                           bool renormalize = false);

// λ·turn_level + (1-λ)·prev for every informable pair in either map.
// Throws ConfigError for λ outside [0, 1].
BeliefState update_belief(const BeliefState& prev, const ProbabilityMap& turn_level,
                          double lambda);

// Goals: per informable slot, the highest-probability value among those with
// belief ≥ 0.5 (first in ontology order on ties). Requests: requestable slots
// whose turn-level probability is ≥ 0.5.
TurnOutput extract_output(const BeliefState& belief, const ProbabilityMap& turn_level,
                          const Ontology& ontology);

struct TrackOptions {
  double lambda = defaults::kLambda;
  bool use_asr = false;
  bool renormalize_asr = false;
};

struct TrackResult {
  std::vector<TurnOutput> turns;
  // Turns where ASR was requested but absent and the transcript was used.
  std::size_t asr_fallbacks = 0;
};

TrackResult track_dialogue(const TurnPredictor& predictor, const Dialogue& dialogue,
                           const Ontology& ontology, const TrackOptions& options);

// Tracks every dialogue, up to `jobs` at a time; results are in corpus order.
std::vector<TrackResult> track_corpus(const TurnPredictor& predictor, const Corpus& corpus,
                                      const Ontology& ontology, const TrackOptions& options,
                                      std::size_t jobs = 1);

// One line of the tracker output file (no trailing newline).
std::string tracker_output_line(const std::string& dialogue_id, std::size_t turn,
                                const TurnOutput& output, const Ontology& ontology);

struct TrackedTurn {
  std::string dialogue_id;
  std::size_t turn = 0;
  TurnOutput output;
};

// Parses a JSON-lines tracker output file. Errors carry the line number.
std::vector<TrackedTurn> parse_tracker_output(std::string_view text,
                                              std::string_view source = "<tracker output>");

}  // namespace nbt
