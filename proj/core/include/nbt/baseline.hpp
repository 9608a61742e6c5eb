#pragma once

// Delexicalisation-based comparison tracker: exact (and dictionary) matches
// of ontology values are replaced by generic tags, template n-grams around
// the candidate's tag become sparse features, and a per-slot logistic
// regression scores each candidate pair.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nbt/adam.hpp"
#include "nbt/domain.hpp"
#include "nbt/examples.hpp"
#include "nbt/predictor.hpp"
#include "nbt/tensor.hpp"

namespace nbt::baseline {

// Rephrasings of ontology values, e.g. area=centre: [downtown, midtown].
class SemanticDictionary {
 public:
  SemanticDictionary() = default;

  // JSON: {slot: {value: [phrase, ...]}}. Pairs must exist in the ontology
  // and phrases must be non-empty after normalization.
  static SemanticDictionary from_json(std::string_view text, const Ontology& ontology,
                                      std::string_view source = "<dictionary>");
  static SemanticDictionary load(const std::filesystem::path& path, const Ontology& ontology);
  std::string to_json() const;

  void add(const CandidatePair& pair, std::string phrase);
  const std::map<CandidatePair, std::vector<std::string>>& entries() const noexcept {
    return entries_;
  }
  std::size_t phrase_count() const;

  friend bool operator==(const SemanticDictionary&, const SemanticDictionary&) = default;

 private:
  std::map<CandidatePair, std::vector<std::string>> entries_;
};

struct Match {
  enum class Kind { kValue, kSlot };
  Kind kind = Kind::kValue;
  std::size_t begin = 0;  // token span [begin, end) in the original tokens
  std::size_t end = 0;
  std::size_t tagged_index = 0;  // position of the tag in `tagged`
  std::string slot;
  std::string value;  // empty for slot-name matches
};

struct Delexicalised {
  std::vector<std::string> original;
  std::vector<std::string> tagged;
  std::vector<Match> matches;

  // Rebuilds the original token list from the tags and match records.
  std::vector<std::string> restore() const;
};

struct DelexOptions {
  // Also tag informable slot names ("food" -> <slot:food>). Requestable slot
  // names are always tagged, since they carry the request decision.
  bool tag_informable_slot_names = false;
};

// Left-to-right, longest-match-first replacement of value phrases (and
// dictionary rephrasings) with <value:slot> and of slot names with
// <slot:name>.
Delexicalised delexicalise(std::span<const std::string> tokens, const Ontology& ontology,
                           const SemanticDictionary* dictionary = nullptr,
                           const DelexOptions& options = {});

inline constexpr int kModelFormatVersionBaseline = 1;

using Features = std::map<std::string, double>;

// Template n-grams (n ≤ 3) containing the candidate's tag, with that tag
// generalized to <value> (or <slot> for request candidates), plus system-act
// indicators and their conjunctions with the utterance unigrams.
Features featurize(const Delexicalised& utterance, std::span<const SystemAct> acts,
                   const CandidatePair& candidate);

struct BaselineConfig {
  AdamConfig adam;
  BatchPlan batches;
  double l2 = 1e-5;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  DelexOptions delex;
};

class BaselineSlotModel {
 public:
  BaselineSlotModel() = default;
  BaselineSlotModel(std::string slot, std::vector<std::string> features,
                    std::vector<double> weights, double bias);

  const std::string& slot() const noexcept { return slot_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }

  // σ(w·x + b); features never seen in training are ignored.
  double probability(const Features& features) const;

  std::string to_json() const;
  static BaselineSlotModel from_json(std::string_view text, std::string_view source = "<model>");

 private:
  std::string slot_;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<double> weights_;
  double bias_ = 0.0;
};

struct BaselineHistory {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;
};

BaselineSlotModel train_baseline(std::string_view slot, std::span<const Example> examples,
                                 const Ontology& ontology, const SemanticDictionary* dictionary,
                                 const BaselineConfig& config,
                                 BaselineHistory* history = nullptr);

using BaselineModels = std::map<std::string, BaselineSlotModel>;

// One model per tracked slot, up to `jobs` slots at a time.
BaselineModels train_baseline_all(const Corpus& train, const Ontology& ontology,
                                  const SemanticDictionary* dictionary,
                                  const BaselineConfig& config, std::size_t jobs = 1,
                                  std::map<std::string, BaselineHistory>* histories = nullptr);

class BaselinePredictor final : public TurnPredictor {
 public:
  BaselinePredictor(const BaselineModels& models, const Ontology& ontology,
                    const SemanticDictionary* dictionary, DelexOptions options = {});
  ProbabilityMap predict(std::span<const std::string> tokens,
                         std::span<const SystemAct> acts) const override;

 private:
  const BaselineModels& models_;
  const Ontology& ontology_;
  const SemanticDictionary* dictionary_;
  DelexOptions options_;
};

}  // namespace nbt::baseline
