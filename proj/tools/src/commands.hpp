#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "nbt/defaults.hpp"

namespace nbt::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // validation error or metric below threshold
inline constexpr int kIoError = 2;
inline constexpr int kInternal = 3;

struct DataPaths {
  std::string ontology;
  std::string corpus;
  std::string vectors;
  std::string dictionary;
  std::string model_dir;
};

struct TrainOptions {
  DataPaths paths;
  std::string variant = "cnn";
  std::string validation_corpus;
  std::optional<std::uint64_t> seed;
  double lr = defaults::kLearningRate;
  std::size_t batch = defaults::kBatchSize;
  double pos_frac = defaults::kPositiveFraction;
  double dropout = defaults::kDropout;
  std::size_t epochs = defaults::kMaxEpochs;
  std::size_t patience = defaults::kPatience;
  std::size_t filters = defaults::kFilters;
  std::size_t hidden = defaults::kHidden;
  double l2 = 1e-5;
  bool squashed_logits = false;
  bool tag_slot_names = false;
  std::string report;
  std::size_t jobs = 1;
};

struct TrackOptionsCli {
  DataPaths paths;
  double lambda = defaults::kLambda;
  bool use_asr = false;
  bool renormalize_asr = false;
  std::string out;
  std::size_t jobs = 1;
};

struct EvalOptions {
  std::string ontology;
  std::string corpus;
  std::string outputs;
  std::string compare;
  std::string json_out;
  std::size_t iterations = 10000;
  std::uint64_t seed = 0;
  std::optional<double> min_joint_goal;
};

struct GenToyOptions {
  std::uint64_t seed = 1;
  std::size_t dialogues = 100;
  double paraphrase_rate = 0.0;
  std::size_t dim = 32;
  std::uint64_t vector_seed = 2024;
  bool asr = false;
  std::string prefix = "toy";
  std::string out_dir = ".";
  bool random_vectors = false;
};

struct GradcheckOptionsCli {
  std::string variant = "both";
  double threshold = 1e-4;
  std::uint64_t seed = 7;
  std::size_t samples = 20;
};

struct ValidateOptions {
  DataPaths paths;
};

int cmd_train(const TrainOptions& o);
int cmd_track(const TrackOptionsCli& o);
int cmd_eval(const EvalOptions& o);
int cmd_gen_toy(const GenToyOptions& o);
int cmd_gradcheck(const GradcheckOptionsCli& o);
int cmd_validate(const ValidateOptions& o);

}  // namespace nbt::cli
