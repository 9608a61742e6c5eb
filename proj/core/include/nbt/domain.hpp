#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbt {

// Name of the synthetic slot whose values are the requestable slot names.
inline constexpr std::string_view kRequestSlot = "request";

struct Slot {
  std::string name;
  std::vector<std::string> values;

  friend bool operator==(const Slot&, const Slot&) = default;
};

// Informable slots with their values, plus the requestable slot names. File
// order is preserved everywhere; it fixes candidate iteration order and goal
// tie-breaking.
class Ontology {
 public:
  // Validates uniqueness and non-emptiness; throws ValidationError.
  Ontology(std::vector<Slot> informable, std::vector<std::string> requestable);

  static Ontology load(const std::filesystem::path& path);
  static Ontology from_json(std::string_view text, std::string_view source = "<ontology>");
  std::string to_json() const;

  const std::vector<Slot>& informable() const noexcept { return informable_; }
  const std::vector<std::string>& requestable() const noexcept { return requestable_; }

  const Slot* find_informable(std::string_view slot) const;
  bool is_informable(std::string_view slot) const { return find_informable(slot) != nullptr; }
  bool is_requestable(std::string_view slot) const;
  bool has_value(std::string_view slot, std::string_view value) const;

  // Informable slot names, followed by kRequestSlot when any requestable slot
  // exists. These are the slots a tracker trains one model for.
  std::vector<std::string> tracked_slots() const;
  // Values of an informable slot, or the requestable names for kRequestSlot.
  // Throws ConfigError for an unknown slot.
  const std::vector<std::string>& values_of(std::string_view slot) const;

  friend bool operator==(const Ontology&, const Ontology&) = default;

 private:
  std::vector<Slot> informable_;
  std::vector<std::string> requestable_;
};

struct SystemAct {
  enum class Kind { kRequest, kConfirm, kOther };

  Kind kind = Kind::kOther;
  std::string slot;   // set for request and confirm
  std::string value;  // set for confirm

  static SystemAct request(std::string slot) { return {Kind::kRequest, std::move(slot), {}}; }
  static SystemAct confirm(std::string slot, std::string value) {
    return {Kind::kConfirm, std::move(slot), std::move(value)};
  }
  static SystemAct other() { return {}; }

  friend bool operator==(const SystemAct&, const SystemAct&) = default;
};

struct AsrHypothesis {
  std::string text;
  double score = 0.0;  // posterior in [0, 1]

  friend bool operator==(const AsrHypothesis&, const AsrHypothesis&) = default;
};

struct TurnLabels {
  // Cumulative goal state after this turn.
  std::map<std::string, std::string> goals;
  // Requestable slots the user asked for in this turn.
  std::vector<std::string> requests;
  // Optional turn-level semantics: slot/value pairs the user expressed in
  // this turn. When present they replace goal differencing for this turn.
  std::optional<std::map<std::string, std::string>> informs;

  friend bool operator==(const TurnLabels&, const TurnLabels&) = default;
};

struct Turn {
  std::vector<SystemAct> system_acts;
  std::string transcript;
  std::optional<std::vector<AsrHypothesis>> asr;
  std::optional<TurnLabels> labels;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Dialogue {
  std::string id;
  std::vector<Turn> turns;

  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

using Corpus = std::vector<Dialogue>;

struct CorpusStats {
  std::size_t dialogues = 0;
  std::size_t turns = 0;
  std::size_t labeled_turns = 0;
  std::size_t asr_turns = 0;
};

// Parses and validates a corpus against `ontology`. Errors name the dialogue
// id and 0-based turn index.
Corpus load_corpus(const std::filesystem::path& path, const Ontology& ontology);
Corpus corpus_from_json(std::string_view text, const Ontology& ontology,
                        std::string_view source = "<corpus>");
std::string corpus_to_json(const Corpus& corpus);
void validate_corpus(const Corpus& corpus, const Ontology& ontology);
CorpusStats corpus_stats(const Corpus& corpus);

struct CandidatePair {
  std::string slot;
  std::string value;

  friend auto operator<=>(const CandidatePair&, const CandidatePair&) = default;
  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

// Informable slots in file order with their values in file order, then
// (kRequestSlot, name) for every requestable slot.
std::vector<CandidatePair> candidate_pairs(const Ontology& ontology);

// Reads a whole text file; throws IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace nbt
