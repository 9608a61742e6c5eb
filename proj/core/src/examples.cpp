#include "nbt/examples.hpp"

#include <algorithm>
#include <cmath>

#include "nbt/errors.hpp"
#include "nbt/tokenize.hpp"

namespace nbt {

namespace {
constexpr const char* kModule = "examples";
}

std::vector<Example> generate_examples(const Corpus& corpus, const Ontology& ontology,
                                       std::string_view slot) {
  const auto& values = ontology.values_of(slot);
  const bool requests = slot == kRequestSlot;
  const std::string slot_name(slot);
  std::vector<Example> out;
  for (const auto& d : corpus) {
    const std::string* prev_goal = nullptr;
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const Turn& turn = d.turns[t];
      if (!turn.labels) continue;
      const TurnLabels& l = *turn.labels;
      const std::string* goal = nullptr;
      if (auto it = l.goals.find(slot_name); it != l.goals.end()) goal = &it->second;

      const std::string* expressed = nullptr;
      std::vector<std::string> tokens = tokenize(turn.transcript);
      if (!requests) {
        if (l.informs) {
          if (auto it = l.informs->find(slot_name); it != l.informs->end()) {
            expressed = &it->second;
          }
        } else if (goal != nullptr && (prev_goal == nullptr || *prev_goal != *goal)) {
          expressed = goal;
        }
      }
      for (const auto& v : values) {
        Example ex;
        ex.tokens = tokens;
        ex.acts = turn.system_acts;
        ex.candidate = {slot_name, v};
        if (requests) {
          ex.label = std::find(l.requests.begin(), l.requests.end(), v) != l.requests.end();
        } else {
          ex.label = expressed != nullptr && *expressed == v;
        }
        ex.dialogue_id = d.id;
        ex.turn = t;
        out.push_back(std::move(ex));
      }
      prev_goal = goal;
    }
  }
  return out;
}

std::size_t BatchPlan::positives_per_batch() const {
  return static_cast<std::size_t>(
      std::ceil(positive_fraction * static_cast<double>(batch_size) - 1e-9));
}

MinibatchSampler::MinibatchSampler(std::span<const Example> examples, BatchPlan plan,
                                   std::string slot)
    : plan_(plan), rng_(plan.seed) {
  if (plan.batch_size == 0) throw ConfigError(kModule, "batch size must be positive");
  if (!(plan.positive_fraction > 0.0 && plan.positive_fraction <= 1.0)) {
    throw ConfigError(kModule, "positive fraction must lie in (0, 1]");
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (examples[i].label ? positives_ : negatives_).push_back(i);
  }
  if (positives_.empty()) {
    throw ConfigError(kModule, "slot '" + slot + "' has no positive training examples");
  }
  if (negatives_.empty() && plan.positives_per_batch() < plan.batch_size) {
    throw ConfigError(kModule, "slot '" + slot + "' has no negative training examples");
  }
}

std::size_t MinibatchSampler::draw(std::vector<std::size_t>& pool, std::size_t& pos,
                                   const std::vector<std::size_t>& source) {
  if (pos == pool.size()) {
    pool = source;
    std::shuffle(pool.begin(), pool.end(), rng_);
    pos = 0;
  }
  return pool[pos++];
}

std::vector<MinibatchSampler::Batch> MinibatchSampler::next_epoch() {
  const std::size_t npos = plan_.positives_per_batch();
  const std::size_t nneg = plan_.batch_size - npos;

  // Enough batches to show every positive once; beyond that, as many as the
  // negatives fill completely. Both pools restart each epoch, so a negative
  // repeats within an epoch only when the positives force extra batches.
  std::size_t nbatches = (positives_.size() + npos - 1) / npos;
  if (nneg > 0) nbatches = std::max(nbatches, negatives_.size() / nneg);
  pos_next_ = pos_pool_.size();
  neg_next_ = neg_pool_.size();

  std::vector<Batch> batches;
  batches.reserve(nbatches);
  for (std::size_t b = 0; b < nbatches; ++b) {
    Batch batch;
    batch.reserve(plan_.batch_size);
    for (std::size_t i = 0; i < npos; ++i) batch.push_back(draw(pos_pool_, pos_next_, positives_));
    for (std::size_t i = 0; i < nneg; ++i) batch.push_back(draw(neg_pool_, neg_next_, negatives_));
    batches.push_back(std::move(batch));
  }
  ++epochs_;
  return batches;
}

}  // namespace nbt
