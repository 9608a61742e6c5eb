#include "nbt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "json_util.hpp"
#include "nbt/errors.hpp"

namespace nbt {

namespace {

constexpr const char* kModule = "eval";

double fraction(std::size_t k, std::size_t n) {
  return n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
}

// Welch's unequal-variance t-test on two samples of 0/1 outcomes.
std::pair<double, double> welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto moments = [](const std::vector<double>& x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, x.size() > 1 ? ss / static_cast<double>(x.size() - 1) : 0.0};
  };
  if (a.size() < 2 || b.size() < 2) return {0.0, 1.0};
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) return {0.0, ma == mb ? 1.0 : 0.0};
  const double t = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1) + (vb / nb) * (vb / nb) / (nb - 1));
  const boost::math::students_t dist(df);
  return {t, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)))};
}

}  // namespace

std::vector<TurnScore> score_turns(std::span<const TrackedTurn> outputs, const Corpus& gold,
                                   const Ontology& ontology) {
  std::map<std::pair<std::string, std::size_t>, const TurnOutput*> by_key;
  for (const auto& t : outputs) {
    if (!by_key.emplace(std::pair{t.dialogue_id, t.turn}, &t.output).second) {
      throw ValidationError(kModule, "duplicate output for dialogue '" + t.dialogue_id +
                                         "' turn " + std::to_string(t.turn));
    }
  }
  std::vector<TurnScore> scores;
  std::size_t used = 0;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    const Dialogue& dialogue = gold[d];
    for (std::size_t i = 0; i < dialogue.turns.size(); ++i) {
      const auto& labels = dialogue.turns[i].labels;
      if (!labels) continue;
      auto it = by_key.find({dialogue.id, i});
      if (it == by_key.end()) {
        throw ValidationError(kModule, "no output for dialogue '" + dialogue.id + "' turn " +
                                           std::to_string(i));
      }
      ++used;
      const TurnOutput& out = *it->second;
      TurnScore s;
      s.dialogue = d;
      s.joint_goal = true;
      for (const auto& slot : ontology.informable()) {
        std::optional<std::string> want;
        if (auto g = labels->goals.find(slot.name); g != labels->goals.end()) want = g->second;
        std::optional<std::string> got;
        if (auto p = out.goals.find(slot.name); p != out.goals.end()) got = p->second;
        const bool ok = want == got;
        s.per_slot[slot.name] = ok;
        s.joint_goal = s.joint_goal && ok;
      }
      const std::set<std::string> want_req(labels->requests.begin(), labels->requests.end());
      const std::set<std::string> got_req(out.requests.begin(), out.requests.end());
      s.requests = want_req == got_req;
      scores.push_back(std::move(s));
    }
  }
  if (used != by_key.size()) {
    throw ValidationError(kModule, std::to_string(by_key.size() - used) +
                                       " outputs do not correspond to labeled gold turns");
  }
  return scores;
}

Metrics summarize(std::span<const TurnScore> turns, const Ontology& ontology) {
  Metrics m;
  m.n_turns = turns.size();
  std::size_t joint = 0;
  std::size_t req = 0;
  std::map<std::string, std::size_t> slot_ok;
  for (const auto& t : turns) {
    joint += t.joint_goal;
    req += t.requests;
    for (const auto& [slot, ok] : t.per_slot) slot_ok[slot] += ok;
  }
  m.joint_goal = fraction(joint, m.n_turns);
  m.requests = fraction(req, m.n_turns);
  for (const auto& slot : ontology.informable()) {
    m.per_slot[slot.name] = fraction(slot_ok[slot.name], m.n_turns);
  }
  return m;
}

Metrics score(std::span<const TrackedTurn> outputs, const Corpus& gold, const Ontology& ontology) {
  const auto turns = score_turns(outputs, gold, ontology);
  return summarize(turns, ontology);
}

std::vector<TrackedTurn> flatten(const Corpus& corpus, std::span<const TrackResult> results) {
  if (corpus.size() != results.size()) {
    throw ValidationError(kModule, "tracker results do not match the corpus size");
  }
  std::vector<TrackedTurn> out;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (std::size_t i = 0; i < results[d].turns.size(); ++i) {
      out.push_back(TrackedTurn{corpus[d].id, i, results[d].turns[i]});
    }
  }
  return out;
}

SignificanceResult paired_bootstrap(std::span<const TrackedTurn> outputs_a,
                                    std::span<const TrackedTurn> outputs_b, const Corpus& gold,
                                    const Ontology& ontology, std::size_t iterations,
                                    std::uint64_t seed) {
  if (iterations == 0) throw ConfigError(kModule, "bootstrap needs at least one iteration");
  const auto a = score_turns(outputs_a, gold, ontology);
  const auto b = score_turns(outputs_b, gold, ontology);

  // Per-dialogue (correct_a - correct_b, labeled turns).
  std::vector<long> diff(gold.size(), 0);
  std::vector<long> count(gold.size(), 0);
  std::vector<double> xa;
  std::vector<double> xb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff[a[i].dialogue] += static_cast<long>(a[i].joint_goal) - static_cast<long>(b[i].joint_goal);
    ++count[a[i].dialogue];
    xa.push_back(a[i].joint_goal ? 1.0 : 0.0);
    xb.push_back(b[i].joint_goal ? 1.0 : 0.0);
  }
  std::vector<std::size_t> units;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (count[d] > 0) units.push_back(d);
  }

  SignificanceResult r;
  r.iterations = iterations;
  if (units.empty()) return r;
  long total_diff = 0;
  long total_count = 0;
  for (std::size_t d : units) {
    total_diff += diff[d];
    total_count += count[d];
  }
  r.observed_difference = static_cast<double>(total_diff) / static_cast<double>(total_count);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, units.size() - 1);
  const double observed = std::fabs(r.observed_difference);
  std::size_t extreme = 0;
  for (std::size_t it = 0; it < iterations; ++it) {
    long sd = 0;
    long sc = 0;
    for (std::size_t k = 0; k < units.size(); ++k) {
      const std::size_t d = units[pick(rng)];
      sd += diff[d];
      sc += count[d];
    }
    const double delta = static_cast<double>(sd) / static_cast<double>(sc);
    // Centered at the observed difference to simulate the null.
    if (std::fabs(delta - r.observed_difference) >= observed) ++extreme;
  }
  r.bootstrap_p = static_cast<double>(1 + extreme) / static_cast<double>(1 + iterations);
  std::tie(r.welch_t, r.welch_p) = welch(xa, xb);
  return r;
}

std::string metrics_to_json(const Metrics& metrics) {
  detail::ordered_json j;
  j["joint_goal"] = metrics.joint_goal;
  j["requests"] = metrics.requests;
  j["per_slot"] = detail::ordered_json::object();
  for (const auto& [slot, acc] : metrics.per_slot) j["per_slot"][slot] = acc;
  j["n_turns"] = metrics.n_turns;
  return j.dump(2) + "\n";
}

std::string metrics_table(const Metrics& metrics) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-16s %8s\n", "metric", "accuracy");
  out << line;
  std::snprintf(line, sizeof line, "%-16s %8.4f\n", "joint goal", metrics.joint_goal);
  out << line;
  std::snprintf(line, sizeof line, "%-16s %8.4f\n", "requests", metrics.requests);
  out << line;
  for (const auto& [slot, acc] : metrics.per_slot) {
    std::snprintf(line, sizeof line, "  %-14s %8.4f\n", slot.c_str(), acc);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-16s %8zu\n", "turns", metrics.n_turns);
  out << line;
  return out.str();
}

}  // namespace nbt
