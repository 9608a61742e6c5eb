#include "nbt/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include "json_util.hpp"
#include "nbt/errors.hpp"
#include "nbt/graph.hpp"
#include "nbt/tokenize.hpp"
#include "parallel.hpp"

namespace nbt::baseline {

namespace {

constexpr const char* kModule = "baseline";
using detail::ordered_json;

std::string value_tag(const std::string& slot) { return "<value:" + slot + ">"; }
std::string slot_tag(const std::string& slot) { return "<slot:" + slot + ">"; }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// All phrases the matcher knows, indexed by first token.
class Lexicon {
 public:
  Lexicon(const Ontology& ontology, const SemanticDictionary* dictionary,
          const DelexOptions& options) {
    for (const auto& slot : ontology.informable()) {
      for (const auto& v : slot.values) {
        add(tokenize(v), Match::Kind::kValue, slot.name, v);
      }
    }
    if (dictionary != nullptr) {
      for (const auto& [pair, phrases] : dictionary->entries()) {
        if (pair.slot == kRequestSlot) {
          for (const auto& p : phrases) add(tokenize(p), Match::Kind::kSlot, pair.value, "");
        } else {
          for (const auto& p : phrases) add(tokenize(p), Match::Kind::kValue, pair.slot, pair.value);
        }
      }
    }
    for (const auto& r : ontology.requestable()) add(tokenize(r), Match::Kind::kSlot, r, "");
    if (options.tag_informable_slot_names) {
      for (const auto& slot : ontology.informable()) {
        add(tokenize(slot.name), Match::Kind::kSlot, slot.name, "");
      }
    }
    for (auto& [first, list] : by_first_) {
      std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
        return entries_[a].tokens.size() > entries_[b].tokens.size();
      });
    }
  }

  Delexicalised apply(std::span<const std::string> tokens) const {
    Delexicalised out;
    out.original.assign(tokens.begin(), tokens.end());
    std::size_t i = 0;
    while (i < tokens.size()) {
      const Entry* hit = nullptr;
      if (auto it = by_first_.find(tokens[i]); it != by_first_.end()) {
        for (std::size_t idx : it->second) {
          const Entry& e = entries_[idx];
          if (i + e.tokens.size() > tokens.size()) continue;
          if (std::equal(e.tokens.begin(), e.tokens.end(), tokens.begin() + i)) {
            hit = &e;
            break;
          }
        }
      }
      if (hit == nullptr) {
        out.tagged.push_back(tokens[i]);
        ++i;
        continue;
      }
      Match m;
      m.kind = hit->kind;
      m.begin = i;
      m.end = i + hit->tokens.size();
      m.tagged_index = out.tagged.size();
      m.slot = hit->slot;
      m.value = hit->value;
      out.tagged.push_back(m.kind == Match::Kind::kValue ? value_tag(m.slot) : slot_tag(m.slot));
      out.matches.push_back(std::move(m));
      i += hit->tokens.size();
    }
    return out;
  }

 private:
  struct Entry {
    std::vector<std::string> tokens;
    Match::Kind kind;
    std::string slot;
    std::string value;
  };

  void add(std::vector<std::string> tokens, Match::Kind kind, const std::string& slot,
           const std::string& value) {
    if (tokens.empty()) return;
    std::string key = join(tokens, " ");
    if (!seen_.insert(key).second) return;  // first registration wins
    by_first_[tokens.front()].push_back(entries_.size());
    entries_.push_back(Entry{std::move(tokens), kind, slot, value});
  }

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_;
  std::set<std::string> seen_;
};

using SparseVector = std::vector<std::pair<std::size_t, double>>;

}  // namespace

// SemanticDictionary ---------------------------------------------------------

void SemanticDictionary::add(const CandidatePair& pair, std::string phrase) {
  if (tokenize(phrase).empty()) {
    throw ValidationError(kModule, "empty rephrasing for " + pair.slot + "=" + pair.value);
  }
  entries_[pair].push_back(join(tokenize(phrase), " "));
}

std::size_t SemanticDictionary::phrase_count() const {
  std::size_t n = 0;
  for (const auto& [pair, phrases] : entries_) n += phrases.size();
  return n;
}

SemanticDictionary SemanticDictionary::from_json(std::string_view text, const Ontology& ontology,
                                                 std::string_view source) {
  const std::string src(source);
  const ordered_json j = detail::parse_json(text, kModule, source);
  if (!j.is_object()) throw ValidationError(kModule, src + ": dictionary must be an object");
  SemanticDictionary dict;
  for (const auto& [slot, values] : j.items()) {
    if (!values.is_object()) {
      throw ValidationError(kModule, src + ": entry for slot '" + slot + "' must be an object");
    }
    for (const auto& [value, phrases] : values.items()) {
      if (!ontology.has_value(slot, value)) {
        throw ValidationError(kModule, src + ": " + slot + "=" + value + " is not in the ontology");
      }
      if (!phrases.is_array()) {
        throw ValidationError(kModule, src + ": rephrasings of " + slot + "=" + value +
                                           " must be a list");
      }
      for (const auto& p : phrases) {
        dict.add({slot, value}, detail::require_string(p, kModule, src + ": " + slot));
      }
    }
  }
  return dict;
}

SemanticDictionary SemanticDictionary::load(const std::filesystem::path& path,
                                            const Ontology& ontology) {
  return from_json(read_text_file(path), ontology, path.string());
}

std::string SemanticDictionary::to_json() const {
  ordered_json j = ordered_json::object();
  for (const auto& [pair, phrases] : entries_) j[pair.slot][pair.value] = phrases;
  return j.dump(2) + "\n";
}

// Delexicalisation and features ----------------------------------------------

std::vector<std::string> Delexicalised::restore() const {
  std::vector<std::string> out;
  std::size_t next_match = 0;
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    if (next_match < matches.size() && matches[next_match].tagged_index == i) {
      const Match& m = matches[next_match++];
      for (std::size_t k = m.begin; k < m.end; ++k) out.push_back(original[k]);
    } else {
      out.push_back(tagged[i]);
    }
  }
  return out;
}

Delexicalised delexicalise(std::span<const std::string> tokens, const Ontology& ontology,
                           const SemanticDictionary* dictionary, const DelexOptions& options) {
  return Lexicon(ontology, dictionary, options).apply(tokens);
}

Features featurize(const Delexicalised& utterance, std::span<const SystemAct> acts,
                   const CandidatePair& candidate) {
  const bool request = candidate.slot == kRequestSlot;
  std::vector<std::string> general = utterance.tagged;
  std::vector<bool> is_candidate(general.size(), false);
  for (const auto& m : utterance.matches) {
    const bool hit = request ? (m.kind == Match::Kind::kSlot && m.slot == candidate.value)
                             : (m.kind == Match::Kind::kValue && m.slot == candidate.slot &&
                                m.value == candidate.value);
    if (hit) {
      is_candidate[m.tagged_index] = true;
      general[m.tagged_index] = request ? "<slot>" : "<value>";
    }
  }

  Features f;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= general.size(); ++i) {
      bool contains = false;
      for (std::size_t k = i; k < i + n; ++k) contains = contains || is_candidate[k];
      if (!contains) continue;
      std::string gram = general[i];
      for (std::size_t k = i + 1; k < i + n; ++k) gram += " " + general[k];
      f[gram] += 1.0;
    }
  }

  std::vector<std::string> context;
  for (const auto& act : acts) {
    if (act.kind == SystemAct::Kind::kRequest && !request && act.slot == candidate.slot) {
      context.emplace_back("sys:request_slot");
    } else if (act.kind == SystemAct::Kind::kConfirm && !request &&
               act.slot == candidate.slot) {
      context.emplace_back(act.value == candidate.value ? "sys:confirm_match"
                                                        : "sys:confirm_other_value");
    }
  }
  for (const auto& c : context) {
    f[c] = 1.0;
    for (const auto& tok : general) f[c + "&" + tok] = 1.0;
  }
  return f;
}

// Model ----------------------------------------------------------------------

BaselineSlotModel::BaselineSlotModel(std::string slot, std::vector<std::string> features,
                                     std::vector<double> weights, double bias)
    : slot_(std::move(slot)), names_(std::move(features)), weights_(std::move(weights)),
      bias_(bias) {
  if (names_.size() != weights_.size()) {
    throw DimensionError(kModule, "feature and weight counts differ");
  }
  for (std::size_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], i);
}

double BaselineSlotModel::probability(const Features& features) const {
  double z = bias_;
  for (const auto& [name, x] : features) {
    if (auto it = index_.find(name); it != index_.end()) z += weights_[it->second] * x;
  }
  return sigmoid(z);
}

std::string BaselineSlotModel::to_json() const {
  ordered_json j;
  j["format_version"] = kModelFormatVersionBaseline;
  j["variant"] = "baseline";
  j["slot"] = slot_;
  j["bias"] = bias_;
  j["features"] = names_;
  j["weights"] = weights_;
  return j.dump() + "\n";
}

BaselineSlotModel BaselineSlotModel::from_json(std::string_view text, std::string_view source) {
  const std::string src(source);
  const ordered_json j = detail::parse_json(text, kModule, source);
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersionBaseline ||
        j.at("variant").get<std::string>() != "baseline") {
      throw ValidationError(kModule, src + ": not a version-1 baseline model");
    }
    return BaselineSlotModel(j.at("slot").get<std::string>(),
                             j.at("features").get<std::vector<std::string>>(),
                             j.at("weights").get<std::vector<double>>(),
                             j.at("bias").get<double>());
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(kModule, src + ": malformed baseline model");
  }
}

BaselineSlotModel train_baseline(std::string_view slot, std::span<const Example> examples,
                                 const Ontology& ontology, const SemanticDictionary* dictionary,
                                 const BaselineConfig& config, BaselineHistory* history) {
  const Lexicon lexicon(ontology, dictionary, config.delex);
  std::vector<Features> dense;
  dense.reserve(examples.size());
  std::set<std::string> names;
  for (const auto& ex : examples) {
    Features f = featurize(lexicon.apply(ex.tokens), ex.acts, ex.candidate);
    for (const auto& [name, x] : f) names.insert(name);
    dense.push_back(std::move(f));
  }
  const std::vector<std::string> feature_names(names.begin(), names.end());
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < feature_names.size(); ++i) index.emplace(feature_names[i], i);
  std::vector<SparseVector> xs;
  xs.reserve(dense.size());
  for (const auto& f : dense) {
    SparseVector x;
    for (const auto& [name, v] : f) x.emplace_back(index.at(name), v);
    xs.push_back(std::move(x));
  }

  ParameterSet params;
  Parameter& w = params.add("weights", Tensor::zeros(feature_names.size()));
  Parameter& b = params.add("bias", Tensor::zeros(1));
  AdamState adam = AdamState::for_parameters(params);
  MinibatchSampler sampler(examples, config.batches, std::string(slot));

  auto logit = [&](const SparseVector& x) {
    double z = b.value[0];
    for (const auto& [i, v] : x) z += w.value[i] * v;
    return z;
  };
  auto evaluate = [&]() {
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double z = logit(xs[i]);
      const bool positive = examples[i].label == 1;
      const double p = sigmoid(z);
      loss -= std::log(std::max(positive ? p : 1.0 - p, 1e-300));
      if ((z >= 0.0) == positive) ++correct;
    }
    const double n = xs.empty() ? 1.0 : static_cast<double>(xs.size());
    return std::pair{loss / n, static_cast<double>(correct) / n};
  };

  ParameterSet best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t count = 0;
    for (const auto& batch : sampler.next_epoch()) {
      params.zero_grad();
      for (std::size_t idx : batch) {
        const double z = logit(xs[idx]);
        const double p = sigmoid(z);
        const int y = examples[idx].label;
        loss_sum -= std::log(std::max(y ? p : 1.0 - p, 1e-300));
        const double g = p - y;
        for (const auto& [i, v] : xs[idx]) w.grad[i] += g * v;
        b.grad[0] += g;
      }
      count += batch.size();
      params.scale_grad(1.0 / static_cast<double>(batch.size()));
      for (std::size_t i = 0; i < w.value.size(); ++i) w.grad[i] += config.l2 * w.value[i];
      adam_step(params, adam, config.adam);
    }
    const auto [loss, acc] = evaluate();
    if (history != nullptr) {
      history->epoch_loss.push_back(count ? loss_sum / static_cast<double>(count) : 0.0);
      history->epoch_accuracy.push_back(acc);
    }
    // Regularized objectives keep improving slowly; demand a real gain.
    if (loss < best_loss - 1e-6) {
      best_loss = loss;
      best.assign_values(params);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  params.assign_values(best);
  return BaselineSlotModel(std::string(slot), feature_names, w.value.data(), b.value[0]);
}

BaselineModels train_baseline_all(const Corpus& train, const Ontology& ontology,
                                  const SemanticDictionary* dictionary,
                                  const BaselineConfig& config, std::size_t jobs,
                                  std::map<std::string, BaselineHistory>* histories) {
  const auto slots = ontology.tracked_slots();
  std::vector<BaselineSlotModel> models(slots.size());
  std::vector<BaselineHistory> hist(slots.size());
  detail::parallel_for(slots.size(), jobs, [&](std::size_t i) {
    const auto examples = generate_examples(train, ontology, slots[i]);
    models[i] = train_baseline(slots[i], examples, ontology, dictionary, config, &hist[i]);
  });
  BaselineModels out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    out.emplace(slots[i], std::move(models[i]));
    if (histories != nullptr) (*histories)[slots[i]] = std::move(hist[i]);
  }
  return out;
}

// Predictor ------------------------------------------------------------------

BaselinePredictor::BaselinePredictor(const BaselineModels& models, const Ontology& ontology,
                                     const SemanticDictionary* dictionary, DelexOptions options)
    : models_(models), ontology_(ontology), dictionary_(dictionary), options_(options) {
  for (const auto& slot : ontology_.tracked_slots()) {
    if (models_.find(slot) == models_.end()) {
      throw ConfigError(kModule, "no baseline model for slot '" + slot + "'");
    }
  }
}

ProbabilityMap BaselinePredictor::predict(std::span<const std::string> tokens,
                                          std::span<const SystemAct> acts) const {
  const Delexicalised d = delexicalise(tokens, ontology_, dictionary_, options_);
  ProbabilityMap out;
  for (const auto& slot : ontology_.tracked_slots()) {
    const BaselineSlotModel& model = models_.at(slot);
    for (const auto& value : ontology_.values_of(slot)) {
      CandidatePair pair{slot, value};
      out[pair] = model.probability(featurize(d, acts, pair));
    }
  }
  return out;
}

}  // namespace nbt::baseline
