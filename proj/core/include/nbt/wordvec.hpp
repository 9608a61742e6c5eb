#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nbt/tensor.hpp"

namespace nbt {

// What lookup() returns for a token with no stored vector.
enum class OovPolicy {
  kZero,          // zero vector (default)
  kHashedRandom,  // deterministic pseudo-random vector derived from the token
};

// Running counters for a batch of lookups. Tables never mutate on lookup; the
// caller owns the statistics.
struct LookupStats {
  std::size_t lookups = 0;
  std::size_t oov = 0;

  double oov_rate() const {
    return lookups == 0 ? 0.0 : static_cast<double>(oov) / static_cast<double>(lookups);
  }
};

// Fixed pre-trained word vectors. Immutable once constructed.
class WordVectorTable {
 public:
  using Entry = std::pair<std::string, std::vector<double>>;

  // Later duplicates of a token replace earlier ones; each replacement is
  // counted in duplicate_count(). Throws DimensionError for a vector whose
  // length is not `dim`.
  WordVectorTable(std::size_t dim, std::vector<Entry> entries,
                  OovPolicy policy = OovPolicy::kZero);

  // Plain-text format: one `token f1 ... fD` line per token, single-space
  // separated, no header. Blank lines are skipped.
  static WordVectorTable load(const std::filesystem::path& path,
                              std::optional<std::size_t> expected_dim = std::nullopt);
  static WordVectorTable parse(std::istream& in, std::string_view source = "<stream>",
                               std::optional<std::size_t> expected_dim = std::nullopt);

  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t duplicate_count() const noexcept { return duplicates_; }
  OovPolicy oov_policy() const noexcept { return policy_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  // Exact match first, then the normalized (case-folded, punctuation-stripped)
  // form. Returns an empty span when neither is stored.
  std::span<const double> find(std::string_view token) const;
  bool contains(std::string_view token) const { return !find(token).empty(); }

  // Stored vector, or the OOV fallback.
  Tensor lookup(std::string_view token, LookupStats* stats = nullptr) const;

  // Stable hash of the table content (tokens in storage order and vector
  // bits); recorded in model files to detect a mismatched vector file.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  std::size_t dim_;
  OovPolicy policy_;
  std::vector<std::string> tokens_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t duplicates_ = 0;
  std::string fingerprint_;
};

// Sum of per-token lookups. Throws ConfigError for an empty phrase.
Tensor embed_phrase(const WordVectorTable& table, std::span<const std::string> phrase,
                    LookupStats* stats = nullptr);

// Xavier-uniform vectors in [-sqrt(6/(D+1)), sqrt(6/(D+1))], each a pure
// function of (token, seed).
WordVectorTable random_table(std::span<const std::string> vocab, std::size_t dim,
                             std::uint64_t seed);

// Fraction of tokens in `sentences` with no stored vector.
LookupStats oov_report(const WordVectorTable& table,
                       std::span<const std::vector<std::string>> sentences);

}  // namespace nbt
