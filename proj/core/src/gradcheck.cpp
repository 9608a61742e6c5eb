#include "nbt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace nbt {

namespace {

struct Problem {
  UtteranceInputs inputs;
  TurnContext ctx;
  std::vector<std::pair<CandidateVectors, std::size_t>> candidates;
};

Var build_loss(Graph& g, SlotNetwork& net, const Problem& p) {
  const Var r = net.encode_utterance(p.inputs);
  Var total{};
  bool first = true;
  for (const auto& [cand, label] : p.candidates) {
    const Var loss = g.softmax_xent(net.decide(r, cand, p.ctx, nullptr).logits, label);
    total = first ? loss : g.add(total, loss);
    first = false;
  }
  return total;
}

double loss_value(const SlotModel& model, const Problem& p) {
  Graph g;
  SlotNetwork net(g, model);
  return g.value(build_loss(g, net, p))[0];
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return std::fabs(analytic - numeric) / denom;
}

GradCheckReport gradient_check(Variant variant, const GradCheckOptions& options) {
  ModelConfig config;
  config.variant = variant;
  config.word_dim = options.word_dim;
  config.filters = options.filters;
  config.hidden = options.hidden;
  config.squashed_logits = options.squashed_logits;
  SlotModel model("food", config, options.seed);

  const std::vector<std::string> vocab = {"i", "want", "cheap", "thai", "food", "please",
                                          "italian", "price"};
  const WordVectorTable table = random_table(vocab, options.word_dim, options.seed + 1);
  const std::vector<std::string> tokens = {"i", "want", "cheap", "thai", "food", "please"};
  const std::vector<SystemAct> acts = {SystemAct::request("price"),
                                       SystemAct::confirm("food", "italian")};
  Problem problem{prepare_utterance(tokens, table), make_context(acts, table), {}};
  problem.candidates.emplace_back(embed_candidate({"food", "thai"}, table), 1);
  problem.candidates.emplace_back(embed_candidate({"food", "italian"}, table), 0);

  // Zero-initialized biases and output weights would leave every ReLU and
  // maxpool kink at the same point and block gradient flow into the hidden
  // layers; small random offsets make every group's check meaningful.
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  for (auto& p : model.params()) {
    for (auto& v : p.value.span()) v += jitter(rng);
  }

  model.params().zero_grad();
  {
    Graph g;
    SlotNetwork net(g, model);
    g.backward(build_loss(g, net, problem));
  }

  GradCheckReport report;
  report.variant = variant;
  for (auto& p : model.params()) {
    GroupCheck group;
    group.name = p.name;
    std::vector<std::size_t> idx(p.value.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(idx.size(), options.samples_per_group));
    for (std::size_t i : idx) {
      const double original = p.value[i];
      p.value[i] = original + options.step;
      const double up = loss_value(model, problem);
      p.value[i] = original - options.step;
      const double down = loss_value(model, problem);
      p.value[i] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      group.max_rel_error =
          std::max(group.max_rel_error, relative_error(p.grad[i], numeric, options.floor));
      ++group.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  return report;
}

}  // namespace nbt
