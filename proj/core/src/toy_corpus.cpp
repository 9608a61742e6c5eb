#include "nbt/toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "nbt/errors.hpp"
#include "nbt/tokenize.hpp"

namespace nbt {

namespace {

constexpr const char* kModule = "toy_corpus";

struct ValueDef {
  const char* slot;
  const char* value;
  std::vector<const char*> synonyms;
};

const std::vector<ValueDef>& value_defs() {
  static const std::vector<ValueDef> defs = {
      {"food", "thai", {"siamese", "bangkok"}},
      {"food", "italian", {"tuscan", "roman"}},
      {"food", "chinese", {"cantonese", "szechuan"}},
      {"food", "indian", {"punjabi", "tandoori"}},
      {"food", "french", {"parisian", "gallic"}},
      {"food", "spanish", {"iberian", "tapas"}},
      {"area", "centre", {"downtown", "midtown", "central"}},
      {"area", "north", {"northern", "uptown"}},
      {"area", "south", {"southern", "southside"}},
      {"area", "east", {"eastern", "eastside"}},
      {"area", "west", {"western", "westside"}},
      {"price", "cheap", {"inexpensive", "affordable", "budget"}},
      {"price", "moderate", {"reasonable", "midrange"}},
      {"price", "expensive", {"pricey", "upscale", "costly"}},
  };
  return defs;
}

const std::vector<ValueDef>& requestable_defs() {
  static const std::vector<ValueDef> defs = {
      {"request", "address", {"whereabouts", "location"}},
      {"request", "phone", {"telephone", "phonenumber"}},
      {"request", "postcode", {"zipcode", "zip"}},
  };
  return defs;
}

const std::vector<const char*> kSlotNames = {"food", "area", "price", "request"};

// "{}" marks the value slot.
const std::map<std::string, std::vector<const char*>>& mention_templates() {
  static const std::map<std::string, std::vector<const char*>> t = {
      {"food", {"{} food", "some {} food", "a {} restaurant", "{} cuisine"}},
      {"area", {"in the {}", "in the {} area", "the {} part of town", "somewhere {}"}},
      {"price", {"{}", "in the {} price range", "something {}", "{} priced"}},
  };
  return t;
}

const std::vector<const char*> kStarters = {"i want", "i am looking for", "find me",
                                            "i would like", "looking for", "i need"};
const std::vector<const char*> kAnswerStarters = {"", "i want", "i would like", "how about"};
const std::vector<const char*> kYes = {"yes", "yes please", "yes that is right", "yeah",
                                       "correct"};
const std::vector<const char*> kNo = {"no", "no thanks", "no that is wrong", "nope"};
const std::vector<const char*> kRequestTemplates = {"what is the {}", "can i get the {}",
                                                    "{} please", "tell me the {}",
                                                    "may i have the {}"};
const std::vector<const char*> kJoiners = {"and", "with"};
const std::vector<const char*> kRestate = {"it should be", "remember i want", "so"};
const std::vector<const char*> kSystemWords = {"welcome", "offer", "goodbye"};

std::string fill(const std::string& tmpl, const std::string& value) {
  const auto pos = tmpl.find("{}");
  if (pos == std::string::npos) return tmpl;
  return tmpl.substr(0, pos) + value + tmpl.substr(pos + 2);
}

template <class T>
const T& choose(const std::vector<T>& xs, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  return xs[pick(rng)];
}

bool coin(double p, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

const ValueDef& find_def(const std::string& slot, const std::string& value) {
  const auto& defs = slot == kRequestSlot ? requestable_defs() : value_defs();
  for (const auto& d : defs) {
    if (d.slot == slot && d.value == value) return d;
  }
  throw Error(kModule, "unknown value " + slot + "=" + value);
}

std::vector<double> random_direction(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

void scale_to(std::vector<double>& v, double norm) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (auto& x : v) x *= norm / n;
}

constexpr double kVectorNorm = 1.4142135623730951;

class DialogueWriter {
 public:
  DialogueWriter(const ToyCorpusSpec& spec, const Ontology& ontology, std::mt19937_64& rng)
      : spec_(spec), ontology_(ontology), rng_(rng) {}

  Dialogue write(std::string id) {
    Dialogue d;
    d.id = std::move(id);
    std::map<std::string, std::string> goal;
    for (const auto& slot : ontology_.informable()) {
      if (coin(0.8, rng_)) goal[slot.name] = choose(slot.values, rng_);
    }
    if (goal.empty()) {
      const auto& slot = choose(ontology_.informable(), rng_);
      goal[slot.name] = choose(slot.values, rng_);
    }

    std::map<std::string, std::string> known;
    for (std::size_t guard = 0; known != goal && guard < 8; ++guard) {
      d.turns.push_back(goal_turn(goal, known, d.turns.empty()));
    }
    const std::size_t n_requests = 1 + (coin(0.5, rng_) ? 1 : 0);
    for (std::size_t i = 0; i < n_requests; ++i) d.turns.push_back(request_turn(known));
    return d;
  }

 private:
  std::string mention(const std::string& slot, const std::string& value) {
    return fill(choose(mention_templates().at(slot), rng_), surface(slot, value));
  }

  std::string surface(const std::string& slot, const std::string& value) {
    const ValueDef& def = find_def(slot, value);
    if (coin(spec_.paraphrase_rate, rng_)) return choose(def.synonyms, rng_);
    return value;
  }

  std::string mentions(const std::map<std::string, std::string>& pairs) {
    std::vector<std::pair<std::string, std::string>> order(pairs.begin(), pairs.end());
    std::shuffle(order.begin(), order.end(), rng_);
    std::string out;
    for (const auto& [slot, value] : order) {
      if (!out.empty()) out += std::string(" ") + choose(kJoiners, rng_) + " ";
      out += mention(slot, value);
    }
    return out;
  }

  std::vector<std::string> unset(const std::map<std::string, std::string>& goal,
                                 const std::map<std::string, std::string>& known) {
    std::vector<std::string> out;
    for (const auto& [slot, value] : goal) {
      if (!known.contains(slot)) out.push_back(slot);
    }
    return out;
  }

  Turn finish(Turn turn, const std::map<std::string, std::string>& informs,
              const std::map<std::string, std::string>& known,
              std::vector<std::string> requests) {
    turn.transcript = join(tokenize(turn.transcript), " ");
    TurnLabels labels;
    labels.goals = known;
    labels.requests = std::move(requests);
    labels.informs = informs;
    turn.labels = std::move(labels);
    if (spec_.asr) turn.asr = hypotheses(turn.transcript);
    return turn;
  }

  Turn goal_turn(const std::map<std::string, std::string>& goal,
                 std::map<std::string, std::string>& known, bool first) {
    Turn turn;
    const auto missing = unset(goal, known);
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    std::map<std::string, std::string> informs = known;  // earlier constraints are restated

    if (r < 0.3) {
      // The system guesses a value for a slot the user has not set.
      std::vector<std::string> candidates;
      for (const auto& slot : ontology_.informable()) {
        if (!known.contains(slot.name)) candidates.push_back(slot.name);
      }
      const std::string slot = choose(candidates, rng_);
      const bool in_goal = goal.contains(slot);
      std::string value = in_goal && coin(0.6, rng_) ? goal.at(slot)
                                                     : choose(ontology_.values_of(slot), rng_);
      turn.system_acts.push_back(SystemAct::confirm(slot, value));
      const std::string restated = known.empty() ? "" : std::string(" ") +
                                                             choose(kRestate, rng_) + " " +
                                                             mentions(known);
      if (in_goal && goal.at(slot) == value) {
        turn.transcript = choose(kYes, rng_) + restated;
        informs[slot] = value;
        known[slot] = value;
      } else if (in_goal && coin(0.5, rng_)) {
        informs[slot] = goal.at(slot);
        known[slot] = goal.at(slot);
        turn.transcript = std::string(choose(kNo, rng_)) + " " + choose(kStarters, rng_) + " " +
                          mentions(informs);
      } else {
        turn.transcript = choose(kNo, rng_) + restated;
      }
    } else if (r < 0.6 && !first) {
      const std::string slot = choose(missing, rng_);
      turn.system_acts.push_back(SystemAct::request(slot));
      informs[slot] = goal.at(slot);
      known[slot] = goal.at(slot);
      std::string answer = coin(0.5, rng_) ? surface(slot, goal.at(slot)) : mention(slot, goal.at(slot));
      const std::string starter = choose(kAnswerStarters, rng_);
      if (!starter.empty()) answer = starter + " " + answer;
      std::map<std::string, std::string> rest = informs;
      rest.erase(slot);
      turn.transcript = rest.empty() ? answer : answer + " " + choose(kJoiners, rng_) + " " + mentions(rest);
    } else {
      turn.system_acts.push_back(SystemAct::other());
      std::vector<std::string> pick = missing;
      std::shuffle(pick.begin(), pick.end(), rng_);
      const std::size_t n = std::uniform_int_distribution<std::size_t>(1, pick.size())(rng_);
      for (std::size_t i = 0; i < n; ++i) {
        informs[pick[i]] = goal.at(pick[i]);
        known[pick[i]] = goal.at(pick[i]);
      }
      turn.transcript = std::string(choose(kStarters, rng_)) + " " + mentions(informs);
    }
    return finish(std::move(turn), informs, known, {});
  }

  Turn request_turn(const std::map<std::string, std::string>& known) {
    Turn turn;
    turn.system_acts.push_back(SystemAct::other());
    std::vector<std::string> names = ontology_.requestable();
    std::shuffle(names.begin(), names.end(), rng_);
    names.resize(coin(0.3, rng_) ? 2 : 1);
    std::sort(names.begin(), names.end());
    std::string text;
    for (const auto& name : names) {
      if (!text.empty()) text += " and ";
      text += fill(choose(kRequestTemplates, rng_),
                   surface(std::string(kRequestSlot), name));
    }
    if (!known.empty()) text += " for " + mentions(known);
    turn.transcript = text;
    return finish(std::move(turn), known, known, names);
  }

  std::vector<AsrHypothesis> hypotheses(const std::string& transcript) {
    static constexpr double kScores[] = {0.6, 0.25, 0.1};
    static constexpr double kDrop[] = {0.0, 0.15, 0.3};
    const auto tokens = tokenize(transcript);
    std::vector<AsrHypothesis> out;
    for (std::size_t i = 0; i < 3; ++i) {
      std::vector<std::string> kept;
      for (const auto& t : tokens) {
        if (!coin(kDrop[i], rng_)) kept.push_back(t);
      }
      if (kept.empty()) kept.push_back(tokens.front());
      out.push_back(AsrHypothesis{join(kept, " "), kScores[i]});
    }
    return out;
  }

  const ToyCorpusSpec& spec_;
  const Ontology& ontology_;
  std::mt19937_64& rng_;
};

}  // namespace

Ontology toy_ontology() {
  std::vector<Slot> slots;
  for (const auto& def : value_defs()) {
    if (slots.empty() || slots.back().name != def.slot) slots.push_back(Slot{def.slot, {}});
    slots.back().values.emplace_back(def.value);
  }
  std::vector<std::string> requestable;
  for (const auto& def : requestable_defs()) requestable.emplace_back(def.value);
  return Ontology(std::move(slots), std::move(requestable));
}

std::vector<std::string> toy_vocabulary() {
  std::vector<std::string> vocab;
  std::set<std::string> seen;
  auto add_text = [&](const std::string& text) {
    for (auto& tok : tokenize(fill(text, ""))) {
      if (seen.insert(tok).second) vocab.push_back(tok);
    }
  };
  for (const auto& def : value_defs()) add_text(def.value);
  for (const auto& def : requestable_defs()) add_text(def.value);
  for (const char* s : kSlotNames) add_text(s);
  for (const auto& def : value_defs()) {
    for (const char* s : def.synonyms) add_text(s);
  }
  for (const auto& def : requestable_defs()) {
    for (const char* s : def.synonyms) add_text(s);
  }
  for (const auto& [slot, templates] : mention_templates()) {
    for (const char* t : templates) add_text(t);
  }
  for (const auto* list : {&kStarters, &kAnswerStarters, &kYes, &kNo, &kRequestTemplates,
                           &kJoiners, &kRestate, &kSystemWords}) {
    for (const char* t : *list) add_text(t);
  }
  add_text("for");
  return vocab;
}

WordVectorTable toy_vectors(std::size_t dim, std::uint64_t vector_seed) {
  std::vector<std::string> anchors;
  for (const auto& def : value_defs()) anchors.emplace_back(def.value);
  for (const auto& def : requestable_defs()) anchors.emplace_back(def.value);
  for (const char* s : kSlotNames) {
    if (std::find(anchors.begin(), anchors.end(), s) == anchors.end()) anchors.emplace_back(s);
  }
  if (dim < anchors.size()) {
    throw ConfigError(kModule, "dimension " + std::to_string(dim) + " is below the " +
                                   std::to_string(anchors.size()) + " orthogonal directions needed");
  }

  std::mt19937_64 rng(vector_seed);
  std::map<std::string, std::vector<double>> vectors;
  std::vector<std::vector<double>> basis;
  for (const auto& word : anchors) {
    std::vector<double> v = random_direction(dim, rng);
    for (const auto& b : basis) {
      double proj = 0.0;
      for (std::size_t i = 0; i < dim; ++i) proj += v[i] * b[i];
      for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * b[i];
    }
    scale_to(v, 1.0);
    basis.push_back(v);
    scale_to(v, kVectorNorm);
    vectors[word] = v;
  }
  std::uniform_real_distribution<double> noise_scale(0.05, 0.1);
  auto add_synonyms = [&](const std::vector<ValueDef>& defs) {
    for (const auto& def : defs) {
      const auto& anchor = vectors.at(def.value);
      for (const char* s : def.synonyms) {
        std::vector<double> noise = random_direction(dim, rng);
        scale_to(noise, noise_scale(rng) * kVectorNorm);
        std::vector<double> v(dim);
        for (std::size_t i = 0; i < dim; ++i) v[i] = anchor[i] + noise[i];
        vectors[s] = v;
      }
    }
  };
  add_synonyms(value_defs());
  add_synonyms(requestable_defs());

  std::vector<WordVectorTable::Entry> entries;
  for (const auto& word : toy_vocabulary()) {
    auto it = vectors.find(word);
    if (it == vectors.end()) {
      std::vector<double> v = random_direction(dim, rng);
      scale_to(v, kVectorNorm);
      entries.emplace_back(word, std::move(v));
    } else {
      entries.emplace_back(word, it->second);
    }
  }
  return WordVectorTable(dim, std::move(entries));
}

ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec) {
  if (!(spec.paraphrase_rate >= 0.0 && spec.paraphrase_rate <= 1.0)) {
    throw ConfigError(kModule, "paraphrase_rate must lie in [0, 1]");
  }
  if (spec.n_dialogues == 0) throw ConfigError(kModule, "n_dialogues must be positive");

  ToyCorpus out{toy_ontology(), {}, toy_vectors(spec.dim, spec.vector_seed), {}};
  for (const auto* defs : {&value_defs(), &requestable_defs()}) {
    for (const auto& def : *defs) {
      for (const char* s : def.synonyms) out.dictionary.add({def.slot, def.value}, s);
    }
  }

  std::mt19937_64 rng(spec.seed);
  DialogueWriter writer(spec, out.ontology, rng);
  for (std::size_t i = 0; i < spec.n_dialogues; ++i) {
    char id[64];
    std::snprintf(id, sizeof id, "%s-%05zu", spec.id_prefix.c_str(), i);
    out.corpus.push_back(writer.write(id));
  }
  validate_corpus(out.corpus, out.ontology);
  return out;
}

}  // namespace nbt
