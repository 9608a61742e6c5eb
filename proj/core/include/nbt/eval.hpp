#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nbt/domain.hpp"
#include "nbt/tracker.hpp"

namespace nbt {

struct Metrics {
  double joint_goal = 0.0;
  double requests = 0.0;
  std::map<std::string, double> per_slot;
  std::size_t n_turns = 0;
};

// Per labeled turn, in corpus order.
struct TurnScore {
  std::size_t dialogue = 0;  // index into the corpus
  bool joint_goal = false;
  bool requests = false;
  std::map<std::string, bool> per_slot;
};

// Aligns outputs to gold turns by (dialogue_id, turn). Every labeled turn
// needs exactly one output; outputs for unknown or unlabeled turns, and
// duplicates, are a ValidationError.
std::vector<TurnScore> score_turns(std::span<const TrackedTurn> outputs, const Corpus& gold,
                                   const Ontology& ontology);
Metrics summarize(std::span<const TurnScore> turns, const Ontology& ontology);
Metrics score(std::span<const TrackedTurn> outputs, const Corpus& gold, const Ontology& ontology);

// Tracker results in corpus order, flattened for scoring.
std::vector<TrackedTurn> flatten(const Corpus& corpus, std::span<const TrackResult> results);

struct SignificanceResult {
  double observed_difference = 0.0;  // joint goal of a minus b
  double bootstrap_p = 1.0;
  std::size_t iterations = 0;
  double welch_t = 0.0;
  double welch_p = 1.0;
};

// Two-sided paired bootstrap over dialogues on the joint-goal difference,
// with Welch's t-test over per-turn correctness as a secondary statistic.
SignificanceResult paired_bootstrap(std::span<const TrackedTurn> outputs_a,
                                    std::span<const TrackedTurn> outputs_b, const Corpus& gold,
                                    const Ontology& ontology, std::size_t iterations,
                                    std::uint64_t seed);

// {"joint_goal", "requests", "per_slot": {...}, "n_turns"}
std::string metrics_to_json(const Metrics& metrics);
std::string metrics_table(const Metrics& metrics);

}  // namespace nbt
