#include "nbt/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "nbt/errors.hpp"
#include "nbt/tokenize.hpp"

namespace nbt {

namespace {

constexpr const char* kModule = "domain";
using detail::ordered_json;

void check_name(const std::string& name, const std::string& what) {
  if (tokenize(name).empty()) {
    throw ValidationError(kModule, what + " '" + name + "' is empty after normalization");
  }
}

std::string where(const std::string& id, std::size_t turn) {
  return "dialogue '" + id + "' turn " + std::to_string(turn);
}

}  // namespace

// Ontology -------------------------------------------------------------------

Ontology::Ontology(std::vector<Slot> informable, std::vector<std::string> requestable)
    : informable_(std::move(informable)), requestable_(std::move(requestable)) {
  if (informable_.empty()) {
    throw ValidationError(kModule, "ontology has no informable slots");
  }
  std::set<std::string> slots;
  for (const auto& slot : informable_) {
    check_name(slot.name, "slot name");
    if (slot.name == kRequestSlot) {
      throw ValidationError(kModule, "informable slot may not be named 'request'");
    }
    if (!slots.insert(slot.name).second) {
      throw ValidationError(kModule, "duplicate informable slot '" + slot.name + "'");
    }
    if (slot.values.empty()) {
      throw ValidationError(kModule, "slot '" + slot.name + "' has an empty value list");
    }
    std::set<std::string> values;
    for (const auto& v : slot.values) {
      check_name(v, "value of slot '" + slot.name + "'");
      if (!values.insert(v).second) {
        throw ValidationError(kModule, "duplicate value '" + v + "' in slot '" + slot.name + "'");
      }
    }
  }
  std::set<std::string> req;
  for (const auto& r : requestable_) {
    check_name(r, "requestable slot");
    if (!req.insert(r).second) {
      throw ValidationError(kModule, "duplicate requestable slot '" + r + "'");
    }
  }
}

Ontology Ontology::load(const std::filesystem::path& path) {
  return from_json(read_text_file(path), path.string());
}

Ontology Ontology::from_json(std::string_view text, std::string_view source) {
  const ordered_json j = detail::parse_json(text, kModule, source);
  const std::string src(source);
  if (!j.is_object()) throw ValidationError(kModule, src + ": ontology must be an object");
  const auto& inf = detail::require(j, "informable", kModule, src);
  if (!inf.is_object()) {
    throw ValidationError(kModule, src + ": 'informable' must map slot names to value lists");
  }
  std::vector<Slot> slots;
  for (const auto& [name, values] : inf.items()) {
    if (!values.is_array()) {
      throw ValidationError(kModule, src + ": values of slot '" + name + "' must be a list");
    }
    Slot s{name, {}};
    for (const auto& v : values) {
      s.values.push_back(detail::require_string(v, kModule, src + ": slot '" + name + "'"));
    }
    slots.push_back(std::move(s));
  }
  std::vector<std::string> requestable;
  if (j.contains("requestable")) {
    const auto& req = j.at("requestable");
    if (!req.is_array()) throw ValidationError(kModule, src + ": 'requestable' must be a list");
    for (const auto& r : req) {
      requestable.push_back(detail::require_string(r, kModule, src + ": requestable"));
    }
  }
  return Ontology(std::move(slots), std::move(requestable));
}

std::string Ontology::to_json() const {
  ordered_json j;
  j["informable"] = ordered_json::object();
  for (const auto& s : informable_) j["informable"][s.name] = s.values;
  j["requestable"] = requestable_;
  return j.dump(2) + "\n";
}

const Slot* Ontology::find_informable(std::string_view slot) const {
  for (const auto& s : informable_) {
    if (s.name == slot) return &s;
  }
  return nullptr;
}

bool Ontology::is_requestable(std::string_view slot) const {
  return std::find(requestable_.begin(), requestable_.end(), slot) != requestable_.end();
}

bool Ontology::has_value(std::string_view slot, std::string_view value) const {
  if (slot == kRequestSlot) return is_requestable(value);
  const Slot* s = find_informable(slot);
  return s != nullptr && std::find(s->values.begin(), s->values.end(), value) != s->values.end();
}

std::vector<std::string> Ontology::tracked_slots() const {
  std::vector<std::string> out;
  for (const auto& s : informable_) out.push_back(s.name);
  if (!requestable_.empty()) out.emplace_back(kRequestSlot);
  return out;
}

const std::vector<std::string>& Ontology::values_of(std::string_view slot) const {
  if (slot == kRequestSlot) return requestable_;
  const Slot* s = find_informable(slot);
  if (s == nullptr) throw ConfigError(kModule, "unknown slot '" + std::string(slot) + "'");
  return s->values;
}

std::vector<CandidatePair> candidate_pairs(const Ontology& ontology) {
  std::vector<CandidatePair> out;
  for (const auto& s : ontology.informable()) {
    for (const auto& v : s.values) out.push_back({s.name, v});
  }
  for (const auto& r : ontology.requestable()) {
    out.push_back({std::string(kRequestSlot), r});
  }
  return out;
}

// Corpus ---------------------------------------------------------------------

namespace {

SystemAct parse_act(const ordered_json& a, const std::string& ctx) {
  const std::string kind = detail::require_string(detail::require(a, "act", kModule, ctx),
                                                  kModule, ctx + ": act");
  if (kind == "request") {
    return SystemAct::request(
        detail::require_string(detail::require(a, "slot", kModule, ctx), kModule, ctx));
  }
  if (kind == "confirm") {
    return SystemAct::confirm(
        detail::require_string(detail::require(a, "slot", kModule, ctx), kModule, ctx),
        detail::require_string(detail::require(a, "value", kModule, ctx), kModule, ctx));
  }
  if (a.contains("slot") || a.contains("value")) {
    throw ValidationError(kModule, ctx + ": act '" + kind + "' may not carry a slot or value");
  }
  return SystemAct::other();
}

std::map<std::string, std::string> parse_slot_map(const ordered_json& j,
                                                  const std::string& ctx) {
  if (!j.is_object()) throw ValidationError(kModule, ctx + ": expected an object");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) out[k] = detail::require_string(v, kModule, ctx);
  return out;
}

Turn parse_turn(const ordered_json& t, const std::string& ctx) {
  Turn turn;
  if (t.contains("system_acts")) {
    const auto& acts = t.at("system_acts");
    if (!acts.is_array()) throw ValidationError(kModule, ctx + ": system_acts must be a list");
    for (const auto& a : acts) turn.system_acts.push_back(parse_act(a, ctx));
  }
  turn.transcript = detail::require_string(detail::require(t, "transcript", kModule, ctx),
                                           kModule, ctx + ": transcript");
  if (t.contains("asr") && !t.at("asr").is_null()) {
    const auto& asr = t.at("asr");
    if (!asr.is_array()) throw ValidationError(kModule, ctx + ": asr must be a list");
    std::vector<AsrHypothesis> hyps;
    for (const auto& h : asr) {
      AsrHypothesis hyp;
      hyp.text = detail::require_string(detail::require(h, "hyp", kModule, ctx), kModule, ctx);
      const auto& score = detail::require(h, "score", kModule, ctx);
      if (!score.is_number()) throw ValidationError(kModule, ctx + ": asr score must be a number");
      hyp.score = score.get<double>();
      hyps.push_back(std::move(hyp));
    }
    turn.asr = std::move(hyps);
  }
  if (t.contains("labels") && !t.at("labels").is_null()) {
    const auto& l = t.at("labels");
    TurnLabels labels;
    if (l.contains("goals")) labels.goals = parse_slot_map(l.at("goals"), ctx + ": goals");
    if (l.contains("requests")) {
      if (!l.at("requests").is_array()) {
        throw ValidationError(kModule, ctx + ": requests must be a list");
      }
      for (const auto& r : l.at("requests")) {
        labels.requests.push_back(detail::require_string(r, kModule, ctx + ": requests"));
      }
    }
    if (l.contains("informs")) labels.informs = parse_slot_map(l.at("informs"), ctx + ": informs");
    turn.labels = std::move(labels);
  }
  return turn;
}

ordered_json act_to_json(const SystemAct& a) {
  ordered_json j;
  switch (a.kind) {
    case SystemAct::Kind::kRequest:
      j["act"] = "request";
      j["slot"] = a.slot;
      break;
    case SystemAct::Kind::kConfirm:
      j["act"] = "confirm";
      j["slot"] = a.slot;
      j["value"] = a.value;
      break;
    case SystemAct::Kind::kOther:
      j["act"] = "other";
      break;
  }
  return j;
}

}  // namespace

void validate_corpus(const Corpus& corpus, const Ontology& ontology) {
  std::set<std::string> ids;
  for (const auto& d : corpus) {
    if (!ids.insert(d.id).second) {
      throw ValidationError(kModule, "duplicate dialogue id '" + d.id + "'");
    }
    if (d.turns.empty()) {
      throw ValidationError(kModule, "dialogue '" + d.id + "' has no turns");
    }
    for (std::size_t t = 0; t < d.turns.size(); ++t) {
      const Turn& turn = d.turns[t];
      const std::string ctx = where(d.id, t);
      for (const auto& a : turn.system_acts) {
        if (a.kind == SystemAct::Kind::kRequest && a.slot.empty()) {
          throw ValidationError(kModule, ctx + ": request act without a slot");
        }
        if (a.kind == SystemAct::Kind::kConfirm && (a.slot.empty() || a.value.empty())) {
          throw ValidationError(kModule, ctx + ": confirm act needs slot and value");
        }
        if (a.kind == SystemAct::Kind::kOther && (!a.slot.empty() || !a.value.empty())) {
          throw ValidationError(kModule, ctx + ": 'other' act may not carry a slot or value");
        }
      }
      if (turn.asr) {
        double total = 0.0;
        for (const auto& h : *turn.asr) {
          if (!(h.score >= 0.0 && h.score <= 1.0)) {
            throw ValidationError(kModule, ctx + ": ASR posterior " + std::to_string(h.score) +
                                               " outside [0, 1]");
          }
          total += h.score;
        }
        if (total > 1.0 + 1e-6) {
          throw ValidationError(kModule, ctx + ": ASR posteriors sum to " +
                                             std::to_string(total) + " > 1");
        }
      }
      if (!turn.labels) continue;
      const TurnLabels& l = *turn.labels;
      auto check_pairs = [&](const std::map<std::string, std::string>& m, const char* what) {
        for (const auto& [slot, value] : m) {
          if (!ontology.is_informable(slot)) {
            throw ValidationError(kModule, ctx + ": " + what + " use unknown slot '" + slot + "'");
          }
          if (!ontology.has_value(slot, value)) {
            throw ValidationError(kModule, ctx + ": " + what + " value " + slot + "=" + value +
                                               " is not in the ontology");
          }
        }
      };
      check_pairs(l.goals, "goals");
      if (l.informs) check_pairs(*l.informs, "informs");
      for (const auto& r : l.requests) {
        if (!ontology.is_requestable(r)) {
          throw ValidationError(kModule, ctx + ": unknown requestable slot '" + r + "'");
        }
      }
    }
  }
}

Corpus corpus_from_json(std::string_view text, const Ontology& ontology,
                        std::string_view source) {
  const ordered_json j = detail::parse_json(text, kModule, source);
  const std::string src(source);
  if (!j.is_array()) throw ValidationError(kModule, src + ": corpus must be a list of dialogues");
  Corpus corpus;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& dj = j[i];
    const std::string dctx = src + ": dialogue #" + std::to_string(i);
    Dialogue d;
    d.id = detail::require_string(detail::require(dj, "id", kModule, dctx), kModule, dctx);
    const auto& turns = detail::require(dj, "turns", kModule, dctx);
    if (!turns.is_array()) throw ValidationError(kModule, dctx + ": turns must be a list");
    for (std::size_t t = 0; t < turns.size(); ++t) {
      d.turns.push_back(parse_turn(turns[t], where(d.id, t)));
    }
    corpus.push_back(std::move(d));
  }
  validate_corpus(corpus, ontology);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const Ontology& ontology) {
  return corpus_from_json(read_text_file(path), ontology, path.string());
}

std::string corpus_to_json(const Corpus& corpus) {
  ordered_json j = ordered_json::array();
  for (const auto& d : corpus) {
    ordered_json dj;
    dj["id"] = d.id;
    dj["turns"] = ordered_json::array();
    for (const auto& t : d.turns) {
      ordered_json tj;
      tj["system_acts"] = ordered_json::array();
      for (const auto& a : t.system_acts) tj["system_acts"].push_back(act_to_json(a));
      tj["transcript"] = t.transcript;
      if (t.asr) {
        tj["asr"] = ordered_json::array();
        for (const auto& h : *t.asr) {
          tj["asr"].push_back(ordered_json{{"hyp", h.text}, {"score", h.score}});
        }
      }
      if (t.labels) {
        ordered_json lj;
        lj["goals"] = ordered_json::object();
        for (const auto& [k, v] : t.labels->goals) lj["goals"][k] = v;
        lj["requests"] = t.labels->requests;
        if (t.labels->informs) {
          lj["informs"] = ordered_json::object();
          for (const auto& [k, v] : *t.labels->informs) lj["informs"][k] = v;
        }
        tj["labels"] = std::move(lj);
      }
      dj["turns"].push_back(std::move(tj));
    }
    j.push_back(std::move(dj));
  }
  return j.dump(1) + "\n";
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats s;
  s.dialogues = corpus.size();
  for (const auto& d : corpus) {
    for (const auto& t : d.turns) {
      ++s.turns;
      if (t.labels) ++s.labeled_turns;
      if (t.asr) ++s.asr_turns;
    }
  }
  return s;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(kModule, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(kModule, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(kModule, "write failed for " + path.string());
}

}  // namespace nbt
