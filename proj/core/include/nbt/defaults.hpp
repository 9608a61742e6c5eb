#pragma once

// Published hyperparameters of the original tracker. Command-line flags and
// config files override these; nothing else should hard-code them.

#include <cstddef>

namespace nbt::defaults {

inline constexpr double kLearningRate = 0.001;
inline constexpr std::size_t kBatchSize = 256;
inline constexpr double kPositiveFraction = 0.125;  // 32 of 256
inline constexpr double kClipMin = -2.0;
inline constexpr double kClipMax = 2.0;
inline constexpr double kDropout = 0.5;
inline constexpr double kLambda = 0.55;  // tuned on DSTC2 dev
inline constexpr std::size_t kWordDim = 300;
inline constexpr std::size_t kFilters = 300;
inline constexpr std::size_t kHidden = 100;
inline constexpr std::size_t kMaxEpochs = 400;
inline constexpr std::size_t kPatience = 20;

}  // namespace nbt::defaults
