#include "nbt/tracker.hpp"

#include <sstream>

#include "json_util.hpp"
#include "parallel.hpp"
#include "nbt/errors.hpp"
#include "nbt/tokenize.hpp"

namespace nbt {

namespace {
constexpr const char* kModule = "tracker";
using detail::ordered_json;
}  // namespace

ProbabilityMap combine_asr(std::span<const HypothesisEstimate> hypotheses, bool renormalize) {
  double total = 0.0;
  for (const auto& [map, posterior] : hypotheses) {
    if (!(posterior >= 0.0)) {
      throw ValidationError(kModule, "negative ASR posterior " + std::to_string(posterior));
    }
    total += posterior;
  }
  if (total > 1.0 + 1e-6) {
    throw ValidationError(kModule, "ASR posteriors sum to " + std::to_string(total) + " > 1");
  }
  const double norm = renormalize && total > 0.0 ? 1.0 / total : 1.0;
  ProbabilityMap out;
  for (const auto& [map, posterior] : hypotheses) {
    for (const auto& [pair, p] : map) out[pair] += norm * posterior * p;
  }
  return out;
}

BeliefState update_belief(const BeliefState& prev, const ProbabilityMap& turn_level,
                          double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError(kModule, "lambda " + std::to_string(lambda) + " outside [0, 1]");
  }
  BeliefState next;
  next.turn = prev.turn + 1;
  for (const auto& [pair, p] : prev.probs) next.probs[pair] = (1.0 - lambda) * p;
  for (const auto& [pair, p] : turn_level) {
    if (pair.slot == kRequestSlot) continue;
    next.probs[pair] = lambda * p + (1.0 - lambda) * prev.get(pair);
  }
  return next;
}

TurnOutput extract_output(const BeliefState& belief, const ProbabilityMap& turn_level,
                          const Ontology& ontology) {
  TurnOutput out;
  out.belief = belief;
  for (const auto& slot : ontology.informable()) {
    std::optional<std::string> goal;
    double best = 0.0;
    for (const auto& v : slot.values) {
      const double p = belief.get({slot.name, v});
      if (p >= 0.5 && (!goal || p > best)) {
        goal = v;
        best = p;
      }
    }
    out.goals[slot.name] = goal;
  }
  for (const auto& r : ontology.requestable()) {
    auto it = turn_level.find({std::string(kRequestSlot), r});
    if (it != turn_level.end() && it->second >= 0.5) out.requests.push_back(r);
  }
  return out;
}

TrackResult track_dialogue(const TurnPredictor& predictor, const Dialogue& dialogue,
                           const Ontology& ontology, const TrackOptions& options) {
  TrackResult result;
  BeliefState belief;
  for (const auto& turn : dialogue.turns) {
    std::vector<HypothesisEstimate> estimates;
    if (options.use_asr && turn.asr && !turn.asr->empty()) {
      for (const auto& hyp : *turn.asr) {
        estimates.emplace_back(predictor.predict(tokenize(hyp.text), turn.system_acts),
                               hyp.score);
      }
    } else {
      if (options.use_asr) ++result.asr_fallbacks;
      estimates.emplace_back(predictor.predict(tokenize(turn.transcript), turn.system_acts), 1.0);
    }
    const ProbabilityMap turn_level = combine_asr(estimates, options.renormalize_asr);
    belief = update_belief(belief, turn_level, options.lambda);
    result.turns.push_back(extract_output(belief, turn_level, ontology));
  }
  return result;
}

std::vector<TrackResult> track_corpus(const TurnPredictor& predictor, const Corpus& corpus,
                                      const Ontology& ontology, const TrackOptions& options,
                                      std::size_t jobs) {
  std::vector<TrackResult> results(corpus.size());
  detail::parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    results[i] = track_dialogue(predictor, corpus[i], ontology, options);
  });
  return results;
}

std::string tracker_output_line(const std::string& dialogue_id, std::size_t turn,
                                const TurnOutput& output, const Ontology& ontology) {
  ordered_json j;
  j["dialogue_id"] = dialogue_id;
  j["turn"] = turn;
  ordered_json goals = ordered_json::object();
  for (const auto& slot : ontology.informable()) {
    auto it = output.goals.find(slot.name);
    if (it != output.goals.end() && it->second) goals[slot.name] = *it->second;
  }
  j["goals"] = std::move(goals);
  j["requests"] = output.requests;
  ordered_json belief = ordered_json::object();
  for (const auto& slot : ontology.informable()) {
    ordered_json values = ordered_json::object();
    for (const auto& v : slot.values) values[v] = output.belief.get({slot.name, v});
    belief[slot.name] = std::move(values);
  }
  j["belief"] = std::move(belief);
  return j.dump();
}

std::vector<TrackedTurn> parse_tracker_output(std::string_view text, std::string_view source) {
  std::vector<TrackedTurn> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = std::string(source) + ":" + std::to_string(lineno);
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ParseError(kModule, where + ": malformed JSON", lineno);
    }
    TrackedTurn t;
    try {
      t.dialogue_id = j.at("dialogue_id").get<std::string>();
      t.turn = j.at("turn").get<std::size_t>();
      for (const auto& [slot, value] : j.at("goals").items()) {
        t.output.goals[slot] = value.get<std::string>();
      }
      t.output.requests = j.at("requests").get<std::vector<std::string>>();
      if (j.contains("belief")) {
        for (const auto& [slot, values] : j.at("belief").items()) {
          for (const auto& [value, p] : values.items()) {
            t.output.belief.probs[{slot, value}] = p.get<double>();
          }
        }
      }
    } catch (const nlohmann::json::exception&) {
      throw ParseError(kModule, where + ": tracker output line does not match the schema",
                       lineno);
    }
    t.output.belief.turn = t.turn + 1;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace nbt
