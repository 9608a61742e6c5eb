#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <span>
#include <vector>

#include "nbt/adam.hpp"
#include "nbt/defaults.hpp"
#include "nbt/errors.hpp"
#include "nbt/examples.hpp"
#include "nbt/model.hpp"
#include "nbt/wordvec.hpp"

namespace nbt {

struct TrainConfig {
  AdamConfig adam;
  BatchPlan batches;
  std::size_t max_epochs = defaults::kMaxEpochs;
  // Stop after this many epochs without a validation improvement.
  std::size_t patience = defaults::kPatience;
  // Stop as soon as the validation score reaches this value.
  double target_score = std::numeric_limits<double>::infinity();
  // Seeds the dropout masks.
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double validation = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation = 0.0;
  bool early_stopped = false;
};

// Scores a model; higher is better.
using Validator = std::function<double(const SlotModel&)>;

// Raised when the loss or a gradient stops being finite. The model has been
// rolled back to the parameters of the last completed epoch.
class TrainingDiverged : public NumericsError {
 public:
  TrainingDiverged(const std::string& what, TrainHistory history)
      : NumericsError("nbt", what), history_(std::move(history)) {}
  const TrainHistory& history() const noexcept { return history_; }

 private:
  TrainHistory history_;
};

// Word vectors, candidate vectors and context for one example, computed once.
struct PreparedExample {
  UtteranceInputs utterance;
  CandidateVectors candidate;
  TurnContext context;
  int label = 0;
};

std::vector<PreparedExample> prepare_examples(std::span<const Example> examples,
                                              const WordVectorTable& table, ActMerge merge);

// Minimizes mean minibatch cross-entropy with Adam, dropout active. After every
// epoch the model is scored with `validate` (negated mean cross-entropy on the
// training examples when empty); the best-scoring parameters are restored at
// the end.
TrainHistory train_slot(SlotModel& model, std::span<const Example> examples,
                        const WordVectorTable& table, const TrainConfig& config,
                        const Validator& validate = {});

// Mean cross-entropy and accuracy (threshold 0.5), evaluation mode.
struct ExampleScore {
  double loss = 0.0;
  double accuracy = 0.0;
};
ExampleScore score_examples(const SlotModel& model, std::span<const PreparedExample> examples);

struct TrainedSlots {
  SlotModels models;
  std::map<std::string, TrainHistory> histories;
};

// Trains one model per tracked slot on `train`, up to `jobs` slots at a time.
// Model initialization uses `model_seed`; dropout uses config.seed. With a
// validation corpus, early stopping tracks mean cross-entropy on it.
TrainedSlots train_all_slots(const Corpus& train, const Ontology& ontology,
                             const WordVectorTable& table, const ModelConfig& model_config,
                             const TrainConfig& config, std::uint64_t model_seed,
                             std::size_t jobs = 1, const Corpus* validation = nullptr);

}  // namespace nbt
