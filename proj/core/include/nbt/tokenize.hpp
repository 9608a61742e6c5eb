#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nbt {

// The one normalization pipeline applied to utterances, slot names, values and
// dictionary phrases: ASCII-lowercase, split on whitespace, strip leading and
// trailing ASCII punctuation from each piece, drop pieces that become empty.
std::vector<std::string> tokenize(std::string_view text);

// Lowercases and strips leading/trailing punctuation from a single token.
std::string normalize_token(std::string_view token);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

}  // namespace nbt
