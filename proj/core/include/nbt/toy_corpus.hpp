#pragma once

// Synthetic restaurant-domain corpus with a constructed vector space: each
// ontology value has surface synonyms placed close to it, while distinct
// values are nearly orthogonal.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nbt/baseline.hpp"
#include "nbt/domain.hpp"
#include "nbt/wordvec.hpp"

namespace nbt {

struct ToyCorpusSpec {
  std::uint64_t seed = 1;
  std::size_t n_dialogues = 100;
  // Probability that a value or requestable mention uses a synonym.
  double paraphrase_rate = 0.0;
  bool asr = false;
  std::size_t dim = 32;
  // The vector table depends only on (vector_seed, dim), so corpora generated
  // with different seeds share one table.
  std::uint64_t vector_seed = 2024;
  std::string id_prefix = "toy";
};

struct ToyCorpus {
  Ontology ontology;
  Corpus corpus;
  WordVectorTable vectors;
  baseline::SemanticDictionary dictionary;  // every synonym of every value
};

Ontology toy_ontology();
// Every word the generator can emit, in a fixed order.
std::vector<std::string> toy_vocabulary();
WordVectorTable toy_vectors(std::size_t dim, std::uint64_t vector_seed);

// Throws ConfigError for paraphrase_rate outside [0, 1], zero dialogues, or a
// dimension too small to hold the orthogonal value directions.
ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec);

}  // namespace nbt
