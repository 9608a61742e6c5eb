#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbt/defaults.hpp"
#include "nbt/domain.hpp"

namespace nbt {

// One binary decision: did this utterance (in its system-act context) express
// the candidate pair?
struct Example {
  std::vector<std::string> tokens;
  std::vector<SystemAct> acts;
  CandidatePair candidate;
  int label = 0;
  std::string dialogue_id;
  std::size_t turn = 0;
};

// Labeled turns × values of `slot`, in dialogue/turn/value order. Transcripts
// are used, never ASR hypotheses. For an informable slot the label is 1 iff
// the turn's `informs` lists the pair, or (without `informs`) the gold goal
// for the slot changed at this turn and now equals the value. For
// kRequestSlot the label is 1 iff the value is among the turn's requests.
std::vector<Example> generate_examples(const Corpus& corpus, const Ontology& ontology,
                                       std::string_view slot);

struct BatchPlan {
  std::size_t batch_size = defaults::kBatchSize;
  double positive_fraction = defaults::kPositiveFraction;
  std::uint64_t seed = 0;

  // ceil(positive_fraction * batch_size).
  std::size_t positives_per_batch() const;
};

// Class-balanced minibatches over a fixed example list. Every batch carries
// exactly positives_per_batch() positives and batch_size minus that many
// negatives. Each epoch reshuffles both classes and runs until every positive
// has been used once and no complete batch of unused negatives remains; a
// class that runs dry mid-epoch is reshuffled and drawn again.
class MinibatchSampler {
 public:
  using Batch = std::vector<std::size_t>;  // indices into the example list

  // Throws ConfigError when there are no positives or no negatives (naming
  // `slot`) or when the plan is invalid.
  MinibatchSampler(std::span<const Example> examples, BatchPlan plan, std::string slot);

  std::vector<Batch> next_epoch();

  std::size_t epochs_done() const noexcept { return epochs_; }
  std::size_t positive_count() const noexcept { return positives_.size(); }
  std::size_t negative_count() const noexcept { return negatives_.size(); }

 private:
  std::size_t draw(std::vector<std::size_t>& pool, std::size_t& pos,
                   const std::vector<std::size_t>& source);

  BatchPlan plan_;
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
  std::vector<std::size_t> pos_pool_;
  std::size_t pos_next_ = 0;
  std::vector<std::size_t> neg_pool_;
  std::size_t neg_next_ = 0;
  std::mt19937_64 rng_;
  std::size_t epochs_ = 0;
};

}  // namespace nbt
