#include "nbt/model.hpp"

#include <cmath>

#include "hash.hpp"
#include "nbt/errors.hpp"
#include "nbt/tokenize.hpp"

namespace nbt {

namespace {

constexpr const char* kModule = "nbt";

enum ParamIndex : std::size_t {
  kUttW1, kUttB1, kUttW2, kUttB2, kUttW3, kUttB3,
  kCandW, kCandB,
  kDecDW, kDecDB, kDecRW, kDecRB, kDecCW, kDecCB,
  kOutW, kOutB,
  kParamCount
};

Tensor make_tensor(const std::vector<std::size_t>& shape) {
  return shape.size() == 1 ? Tensor::zeros(shape[0]) : Tensor::zeros(shape[0], shape[1]);
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::kDnn ? "dnn" : "cnn"; }

Variant parse_variant(std::string_view s) {
  if (s == "dnn") return Variant::kDnn;
  if (s == "cnn") return Variant::kCnn;
  throw ConfigError(kModule, "unknown variant '" + std::string(s) + "' (expected dnn or cnn)");
}

// Context and inputs ----------------------------------------------------------

TurnContext make_context(std::span<const SystemAct> acts, const WordVectorTable& table,
                         ActMerge merge) {
  const std::size_t dim = table.dim();
  TurnContext ctx{Tensor::zeros(dim), Tensor::zeros(dim), Tensor::zeros(dim)};
  for (const auto& act : acts) {
    if (act.kind == SystemAct::Kind::kRequest) {
      auto slot = tokenize(act.slot);
      if (slot.empty()) continue;
      if (merge == ActMerge::kLast) ctx.request.fill(0.0);
      ctx.request += embed_phrase(table, slot);
    } else if (act.kind == SystemAct::Kind::kConfirm) {
      auto slot = tokenize(act.slot);
      auto value = tokenize(act.value);
      if (slot.empty() || value.empty()) continue;
      if (merge == ActMerge::kLast) {
        ctx.confirm_slot.fill(0.0);
        ctx.confirm_value.fill(0.0);
      }
      ctx.confirm_slot += embed_phrase(table, slot);
      ctx.confirm_value += embed_phrase(table, value);
    }
  }
  return ctx;
}

CandidateVectors embed_candidate(const CandidatePair& pair, const WordVectorTable& table) {
  const auto slot = tokenize(pair.slot);
  const auto value = tokenize(pair.value);
  if (slot.empty() || value.empty()) {
    throw ConfigError(kModule, "candidate " + pair.slot + "=" + pair.value +
                                   " is empty after normalization");
  }
  return {embed_phrase(table, slot), embed_phrase(table, value)};
}

UtteranceInputs prepare_utterance(std::span<const std::string> tokens,
                                  const WordVectorTable& table) {
  if (tokens.empty()) throw ConfigError(kModule, "cannot encode an empty utterance");
  const std::size_t dim = table.dim();
  const std::size_t k = tokens.size();
  std::vector<Tensor> words;
  words.reserve(k);
  for (const auto& t : tokens) words.push_back(table.lookup(t));

  UtteranceInputs in;
  in.length = k;
  for (std::size_t n = 1; n <= 3; ++n) {
    if (k < n) continue;
    const std::size_t cols = k - n + 1;
    Tensor m = Tensor::zeros(n * dim, cols);
    for (std::size_t i = 0; i < cols; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const Tensor& w = words[i + j];
        for (std::size_t d = 0; d < dim; ++d) m.at(j * dim + d, i) = w[d];
      }
    }
    in.ngrams[n - 1] = std::move(m);
  }
  return in;
}

// SlotModel ------------------------------------------------------------------

std::vector<std::string> SlotModel::parameter_names() {
  return {"utterance.W1", "utterance.b1", "utterance.W2", "utterance.b2",
          "utterance.W3", "utterance.b3", "candidate.W", "candidate.b",
          "decision.d.W", "decision.d.b", "decision.mr.W", "decision.mr.b",
          "decision.mc.W", "decision.mc.b", "output.W", "output.b"};
}

std::vector<std::vector<std::size_t>> SlotModel::parameter_shapes(const ModelConfig& c) {
  const std::size_t D = c.word_dim;
  const std::size_t rep = c.variant == Variant::kDnn ? D : c.filters;
  const std::size_t H = c.hidden;
  return {{rep, D},     {rep}, {rep, 2 * D}, {rep}, {rep, 3 * D}, {rep},
          {rep, D},     {rep},
          {H, rep},     {H},   {H, rep},     {H},   {H, rep},     {H},
          {2, H},       {2}};
}

SlotModel::SlotModel(std::string slot, ModelConfig config, std::uint64_t seed)
    : slot_(std::move(slot)), config_(config) {
  if (config_.word_dim == 0 || config_.hidden == 0 ||
      (config_.variant == Variant::kCnn && config_.filters == 0)) {
    throw ConfigError(kModule, "model dimensions must be positive");
  }
  if (!(config_.dropout >= 0.0 && config_.dropout < 1.0)) {
    throw ConfigError(kModule, "dropout rate must lie in [0, 1)");
  }
  std::mt19937_64 rng(detail::mix64(seed) ^ detail::fnv1a(slot_));
  const auto names = parameter_names();
  const auto shapes = parameter_shapes(config_);
  for (std::size_t i = 0; i < names.size(); ++i) {
    Tensor t = make_tensor(shapes[i]);
    // The output layer starts at zero: the summed sigmoid maps feeding it are
    // far from zero-mean, so random output weights begin with large, arbitrary
    // logits that can stall training.
    if (t.rank() == 2 && names[i] != "output.W") {
      const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      for (double& v : t.span()) v = (2.0 * detail::unit_double(rng()) - 1.0) * bound;
    }
    params_.add(names[i], std::move(t));
  }
}

SlotModel::SlotModel(std::string slot, ModelConfig config, ParameterSet params)
    : slot_(std::move(slot)), config_(config), params_(std::move(params)) {
  const auto names = parameter_names();
  const auto shapes = parameter_shapes(config_);
  if (params_.size() != names.size()) {
    throw ValidationError(kModule, "model for slot '" + slot_ + "' has " +
                                       std::to_string(params_.size()) + " parameters, expected " +
                                       std::to_string(names.size()));
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (params_[i].name != names[i] || params_[i].value.shape() != shapes[i]) {
      throw ValidationError(kModule, "parameter '" + params_[i].name + "' of slot '" + slot_ +
                                         "' has shape " + params_[i].value.shape_string() +
                                         ", which does not match the model header");
    }
  }
}

std::size_t SlotModel::rep_dim() const noexcept {
  return config_.variant == Variant::kDnn ? config_.word_dim : config_.filters;
}

// SlotNetwork ----------------------------------------------------------------

SlotNetwork::SlotNetwork(Graph& graph, SlotModel& model) : graph_(graph), model_(model) {
  params_.reserve(kParamCount);
  for (auto& p : model.params()) params_.push_back(graph.param(p));
}

SlotNetwork::SlotNetwork(Graph& graph, const SlotModel& model) : graph_(graph), model_(model) {
  params_.reserve(kParamCount);
  for (const auto& p : model.params()) params_.push_back(graph.frozen(p));
}

Var SlotNetwork::drop(Var x, std::mt19937_64* rng) {
  const double rate = model_.config().dropout;
  if (rng == nullptr || rate <= 0.0) return x;
  const std::size_t n = graph_.value(x).size();
  Tensor mask = Tensor::zeros(n);
  const double keep = 1.0 - rate;
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = detail::unit_double((*rng)()) < keep ? 1.0 / keep : 0.0;
  }
  return graph_.mul(x, graph_.constant(std::move(mask)));
}

Var SlotNetwork::encode_utterance(const UtteranceInputs& inputs) {
  if (inputs.length == 0) throw ConfigError(kModule, "cannot encode an empty utterance");
  const std::size_t D = model_.config().word_dim;
  if (inputs.ngrams[0].rows() != D) {
    throw DimensionError(kModule, "utterance vectors have dimension " +
                                      std::to_string(inputs.ngrams[0].rows()) +
                                      " but the model expects " + std::to_string(D));
  }
  Var r{};
  bool have_r = false;
  auto accumulate = [&](Var v) {
    r = have_r ? graph_.add(r, v) : v;
    have_r = true;
  };
  for (std::size_t n = 1; n <= 3; ++n) {
    const Tensor& m = inputs.ngrams[n - 1];
    const Var W = p(kUttW1 + 2 * (n - 1));
    const Var b = p(kUttB1 + 2 * (n - 1));
    if (model_.config().variant == Variant::kDnn) {
      // Cumulative n-gram: sum of all n-gram concatenations (zero if k < n).
      Tensor rn = Tensor::zeros(n * D);
      if (m.size() != 0) {
        for (std::size_t row = 0; row < m.rows(); ++row) {
          double s = 0.0;
          for (std::size_t c = 0; c < m.cols(); ++c) s += m.at(row, c);
          rn[row] = s;
        }
      }
      accumulate(graph_.sigmoid(graph_.affine(W, graph_.constant(std::move(rn)), b)));
    } else {
      if (m.size() == 0) continue;  // k < n contributes the zero vector
      Var conv = graph_.affine(W, graph_.constant(m), b);
      accumulate(graph_.maxpool_over_time(graph_.relu(conv)));
    }
  }
  return r;
}

Var SlotNetwork::encode_candidate(const CandidateVectors& candidate) {
  Tensor sum = candidate.slot + candidate.value;
  return graph_.sigmoid(graph_.affine(p(kCandW), graph_.constant(std::move(sum)), p(kCandB)));
}

ForwardNodes SlotNetwork::decide(Var r, const CandidateVectors& candidate,
                                 const TurnContext& ctx, std::mt19937_64* dropout) {
  ForwardNodes out;
  out.r = r;
  out.c = encode_candidate(candidate);
  const Var rd = drop(r, dropout);
  out.d = graph_.mul(rd, out.c);

  const double gate_request = nbt::dot(candidate.slot.span(), ctx.request.span());
  const double gate_confirm = nbt::dot(candidate.slot.span(), ctx.confirm_slot.span()) *
                              nbt::dot(candidate.value.span(), ctx.confirm_value.span());
  out.m_r = graph_.scale(rd, graph_.scalar_constant(gate_request));
  out.m_c = graph_.scale(rd, graph_.scalar_constant(gate_confirm));

  auto hidden = [&](Var x, std::size_t w) {
    return drop(graph_.sigmoid(graph_.affine(p(w), x, p(w + 1))), dropout);
  };
  Var h = graph_.add(graph_.add(hidden(out.d, kDecDW), hidden(out.m_r, kDecRW)),
                     hidden(out.m_c, kDecCW));
  Var y = graph_.affine(p(kOutW), h, p(kOutB));
  out.logits = model_.config().squashed_logits ? graph_.sigmoid(y) : y;
  return out;
}

ForwardNodes SlotNetwork::forward(const UtteranceInputs& inputs,
                                  const CandidateVectors& candidate, const TurnContext& ctx,
                                  std::mt19937_64* dropout) {
  return decide(encode_utterance(inputs), candidate, ctx, dropout);
}

// Prediction -----------------------------------------------------------------

double expressed_probability(const Tensor& logits) {
  // softmax over two classes, written as a logistic of the margin.
  const double margin = logits[1] - logits[0];
  if (margin >= 0.0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

double predict_probability(const SlotModel& model, std::span<const std::string> tokens,
                           const TurnContext& ctx, const CandidatePair& pair,
                           const WordVectorTable& table) {
  Graph g;
  SlotNetwork net(g, model);
  auto nodes = net.forward(prepare_utterance(tokens, table), embed_candidate(pair, table), ctx,
                           nullptr);
  return expressed_probability(g.value(nodes.logits));
}

ProbabilityMap predict_turn(const SlotModels& models, std::span<const std::string> tokens,
                            const TurnContext& ctx, const Ontology& ontology,
                            const WordVectorTable& table) {
  ProbabilityMap out;
  const auto slots = ontology.tracked_slots();
  for (const auto& slot : slots) {
    if (models.find(slot) == models.end()) {
      throw ConfigError(kModule, "no trained model for slot '" + slot + "'");
    }
  }
  if (tokens.empty()) {
    for (const auto& pair : candidate_pairs(ontology)) out[pair] = 0.0;
    return out;
  }
  const UtteranceInputs inputs = prepare_utterance(tokens, table);
  for (const auto& slot : slots) {
    const SlotModel& model = models.at(slot);
    Graph g;
    SlotNetwork net(g, model);
    const Var r = net.encode_utterance(inputs);
    for (const auto& value : ontology.values_of(slot)) {
      CandidatePair pair{slot, value};
      auto nodes = net.decide(r, embed_candidate(pair, table), ctx, nullptr);
      out[pair] = expressed_probability(g.value(nodes.logits));
    }
  }
  return out;
}

NbtPredictor::NbtPredictor(const SlotModels& models, const Ontology& ontology,
                           const WordVectorTable& table)
    : models_(models), ontology_(ontology), table_(table) {}

ProbabilityMap NbtPredictor::predict(std::span<const std::string> tokens,
                                     std::span<const SystemAct> acts) const {
  ActMerge merge = models_.empty() ? ActMerge::kSum : models_.begin()->second.config().act_merge;
  return predict_turn(models_, tokens, make_context(acts, table_, merge), ontology_, table_);
}

}  // namespace nbt
