#pragma once

// The neural belief tracker for one slot: utterance encoder (DNN or CNN
// flavour), candidate encoder, semantic decoding, context gating and the
// binary decision layer.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nbt/defaults.hpp"
#include "nbt/domain.hpp"
#include "nbt/graph.hpp"
#include "nbt/predictor.hpp"
#include "nbt/tensor.hpp"
#include "nbt/wordvec.hpp"

namespace nbt {

enum class Variant { kDnn, kCnn };

std::string to_string(Variant v);
// Accepts "dnn" / "cnn"; throws ConfigError otherwise.
Variant parse_variant(std::string_view s);

// How several system acts of one kind fold into the context vectors.
enum class ActMerge { kSum, kLast };

struct ModelConfig {
  Variant variant = Variant::kCnn;
  std::size_t word_dim = defaults::kWordDim;  // D; must match the vector table
  std::size_t filters = defaults::kFilters;  // L, CNN only
  std::size_t hidden = defaults::kHidden;  // width of each decision-layer hidden map
  double dropout = defaults::kDropout;
  // When set, the output layer is σ(W h + b) before the softmax, exactly as
  // the φ notation reads. Off by default: squashed logits cap P(expressed)
  // at e/(1+e) ≈ 0.731.
  bool squashed_logits = false;
  ActMerge act_merge = ActMerge::kSum;
};

// Argument vectors of the preceding system acts; zero when absent.
struct TurnContext {
  Tensor request;        // t_q
  Tensor confirm_slot;   // t_s
  Tensor confirm_value;  // t_v
};

TurnContext make_context(std::span<const SystemAct> acts, const WordVectorTable& table,
                         ActMerge merge = ActMerge::kSum);

// Summed slot-name and value vectors of a candidate pair (c_s, c_v).
struct CandidateVectors {
  Tensor slot;
  Tensor value;
};

CandidateVectors embed_candidate(const CandidatePair& pair, const WordVectorTable& table);

// The n-gram matrices of an utterance: for n = 1, 2, 3 an [nD × (k-n+1)]
// matrix whose columns are concatenated word vectors, or an empty tensor when
// the utterance has fewer than n tokens.
struct UtteranceInputs {
  std::array<Tensor, 3> ngrams;
  std::size_t length = 0;
};

// Throws ConfigError for an empty token list.
UtteranceInputs prepare_utterance(std::span<const std::string> tokens,
                                  const WordVectorTable& table);

class SlotModel {
 public:
  // Xavier-uniform weights and zero biases, seeded by (seed, slot).
  SlotModel(std::string slot, ModelConfig config, std::uint64_t seed);
  // Parameters supplied by a loader; shapes are validated.
  SlotModel(std::string slot, ModelConfig config, ParameterSet params);

  const std::string& slot() const noexcept { return slot_; }
  const ModelConfig& config() const noexcept { return config_; }
  // Width of r and c: D for the DNN, L for the CNN.
  std::size_t rep_dim() const noexcept;

  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }

  // Parameter names in storage order.
  static std::vector<std::string> parameter_names();
  // Expected shape of every parameter for `config`.
  static std::vector<std::vector<std::size_t>> parameter_shapes(const ModelConfig& config);

 private:
  std::string slot_;
  ModelConfig config_;
  ParameterSet params_;
};

// Handles of the intermediate nodes of one forward pass.
struct ForwardNodes {
  Var r;
  Var c;
  Var d;
  Var m_r;
  Var m_c;
  Var logits;
};

// A SlotModel bound into one Graph. Construct from a mutable model to train
// (gradients flow into its parameters) or from a const model to predict.
class SlotNetwork {
 public:
  SlotNetwork(Graph& graph, SlotModel& model);
  SlotNetwork(Graph& graph, const SlotModel& model);

  Var encode_utterance(const UtteranceInputs& inputs);
  Var encode_candidate(const CandidateVectors& candidate);
  // Full decision for one candidate given an encoded utterance. `dropout` is
  // null in evaluation mode.
  ForwardNodes decide(Var r, const CandidateVectors& candidate, const TurnContext& ctx,
                      std::mt19937_64* dropout);
  ForwardNodes forward(const UtteranceInputs& inputs, const CandidateVectors& candidate,
                       const TurnContext& ctx, std::mt19937_64* dropout);

 private:
  Var p(std::size_t i) const { return params_[i]; }
  Var drop(Var x, std::mt19937_64* rng);

  Graph& graph_;
  const SlotModel& model_;
  std::vector<Var> params_;
};

// softmax(logits)[1].
double expressed_probability(const Tensor& logits);

// Evaluation-mode probability that `pair` was expressed.
double predict_probability(const SlotModel& model, std::span<const std::string> tokens,
                           const TurnContext& ctx, const CandidatePair& pair,
                           const WordVectorTable& table);

using SlotModels = std::map<std::string, SlotModel>;

// Probabilities for every candidate pair of the ontology. Throws ConfigError
// when a tracked slot has no model.
ProbabilityMap predict_turn(const SlotModels& models, std::span<const std::string> tokens,
                            const TurnContext& ctx, const Ontology& ontology,
                            const WordVectorTable& table);

class NbtPredictor final : public TurnPredictor {
 public:
  NbtPredictor(const SlotModels& models, const Ontology& ontology,
               const WordVectorTable& table);
  ProbabilityMap predict(std::span<const std::string> tokens,
                         std::span<const SystemAct> acts) const override;

 private:
  const SlotModels& models_;
  const Ontology& ontology_;
  const WordVectorTable& table_;
};

// Versioned JSON model files.
inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const SlotModel& model, const std::string& vector_fingerprint);
// Throws ParseError / ValidationError on malformed files, a different
// format_version, or parameter shapes that disagree with the header.
SlotModel model_from_json(std::string_view text, std::string_view source = "<model>",
                          std::string* vector_fingerprint = nullptr);
void save_model(const SlotModel& model, const std::filesystem::path& path,
                const std::string& vector_fingerprint);
SlotModel load_model(const std::filesystem::path& path,
                     std::string* vector_fingerprint = nullptr);

}  // namespace nbt
