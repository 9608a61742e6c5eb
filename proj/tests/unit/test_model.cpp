#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <utility>

#include "nbt/errors.hpp"
#include "nbt/gradcheck.hpp"
#include "nbt/model.hpp"

namespace nbt {
namespace {

using Strings = std::vector<std::string>;

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

WordVectorTable two_dim() {
  return WordVectorTable(2, {{"a", {1, 0}}, {"b", {0, 1}}, {"c", {3, -1}}, {"d", {0.5, 2}},
                             {"food", {1, 1}}, {"thai", {2, -1}}, {"italian", {-1, 2}},
                             {"price", {0.5, 0.5}}});
}

ModelConfig small(Variant v, std::size_t D = 2) {
  ModelConfig c;
  c.variant = v;
  c.word_dim = D;
  c.filters = 2;
  c.hidden = 3;
  c.dropout = 0.0;
  return c;
}

void zero_all(SlotModel& m) {
  for (auto& p : m.params()) p.value.fill(0.0);
}

TEST(Utterance, NgramMatricesByHand) {
  const auto t = two_dim();
  const auto in = prepare_utterance(Strings{"a", "b"}, t);
  EXPECT_EQ(in.length, 2u);
  EXPECT_EQ(in.ngrams[0], Tensor::matrix({{1, 0}, {0, 1}}));
  EXPECT_EQ(in.ngrams[1], Tensor::matrix(4, 1, {1, 0, 0, 1}));
  EXPECT_EQ(in.ngrams[2].size(), 0u);
  EXPECT_THROW(prepare_utterance(Strings{}, t), ConfigError);
}

TEST(DnnEncoder, CumulativeNgramsThroughSigmoid) {
  const auto t = two_dim();
  SlotModel m("food", small(Variant::kDnn), 1);
  zero_all(m);
  m.params().get("utterance.W1").value = Tensor::matrix({{1, 0}, {0, 1}});
  m.params().get("utterance.W2").value = Tensor::matrix({{1, 2, 3, 4}, {0, 0, 0, -1}});
  m.params().get("utterance.b3").value = Tensor::vector({0.25, -0.5});
  Graph g;
  SlotNetwork net(g, std::as_const(m));
  const Var r = net.encode_utterance(prepare_utterance(Strings{"a", "b"}, t));
  // r1 = (1,1); r2 = (1,0,0,1); r3 = 0, leaving only the trigram bias.
  const Tensor& v = g.value(r);
  EXPECT_NEAR(v[0], sig(1) + sig(1 + 4) + sig(0.25), 1e-15);
  EXPECT_NEAR(v[1], sig(1) + sig(-1) + sig(-0.5), 1e-15);
}

TEST(DnnEncoder, UnigramTermIsOrderInvariantBigramIsNot) {
  const auto t = two_dim();
  const auto ab = prepare_utterance(Strings{"a", "b", "c"}, t);
  const auto ba = prepare_utterance(Strings{"b", "a", "c"}, t);
  auto row_sums = [](const Tensor& m) {
    std::vector<double> s(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) s[r] += m.at(r, c);
    }
    return s;
  };
  EXPECT_EQ(row_sums(ab.ngrams[0]), row_sums(ba.ngrams[0]));
  EXPECT_NE(row_sums(ab.ngrams[1]), row_sums(ba.ngrams[1]));
  EXPECT_NE(row_sums(ab.ngrams[2]), row_sums(ba.ngrams[2]));

  SlotModel m("food", small(Variant::kDnn), 3);
  Graph g;
  SlotNetwork net(g, std::as_const(m));
  EXPECT_NE(g.value(net.encode_utterance(ab)), g.value(net.encode_utterance(ba)));
}

TEST(CnnEncoder, SingleTokenIdentityFilters) {
  const auto t = two_dim();
  SlotModel m("food", small(Variant::kCnn), 1);
  zero_all(m);
  m.params().get("utterance.W1").value = Tensor::matrix({{1, 0}, {0, 1}});
  Graph g;
  SlotNetwork net(g, std::as_const(m));
  const Var r = net.encode_utterance(prepare_utterance(Strings{"c"}, t));
  EXPECT_EQ(g.value(r), Tensor::vector({3, 0}));
}

TEST(CnnEncoder, GradientFollowsPooledPosition) {
  const auto t = two_dim();
  SlotModel m("food", small(Variant::kCnn), 1);
  zero_all(m);
  m.params().get("utterance.W1").value = Tensor::matrix({{1, 0}, {0, 1}});
  m.params().zero_grad();
  Graph g;
  SlotNetwork net(g, m);
  // "a" then "c": filter 0 responds 1 then 3, so position 2 wins.
  const Var r = net.encode_utterance(prepare_utterance(Strings{"a", "c"}, t));
  EXPECT_EQ(g.value(r)[0], 3.0);
  g.backward(g.dot(r, g.constant(Tensor::vector({1, 0}))));
  EXPECT_EQ(m.params().get("utterance.W1").grad, Tensor::matrix({{3, -1}, {0, 0}}));
}

TEST(CnnEncoder, NullInputGivesZero) {
  WordVectorTable zeros(2, {{"x", {0, 0}}, {"y", {0, 0}}, {"z", {0, 0}}});
  SlotModel m("food", small(Variant::kCnn), 5);
  for (const char* b : {"utterance.b1", "utterance.b2", "utterance.b3"}) m.params().get(b).value.fill(0);
  Graph g;
  SlotNetwork net(g, std::as_const(m));
  EXPECT_EQ(g.value(net.encode_utterance(prepare_utterance(Strings{"x", "y", "z"}, zeros))),
            Tensor::zeros(2));
}

TEST(Candidate, BiasOnlyForZeroVectorsAndMatchesRepDim) {
  SlotModel m("food", small(Variant::kCnn), 2);
  m.params().get("candidate.b").value = Tensor::vector({0.3, -2});
  Graph g;
  SlotNetwork net(g, std::as_const(m));
  const Var c = net.encode_candidate({Tensor::zeros(2), Tensor::zeros(2)});
  EXPECT_NEAR(g.value(c)[0], sig(0.3), 1e-15);
  EXPECT_NEAR(g.value(c)[1], sig(-2), 1e-15);

  const auto t = two_dim();
  for (Variant v : {Variant::kDnn, Variant::kCnn}) {
    ModelConfig cfg = small(v);
    cfg.filters = 5;
    SlotModel mm("food", cfg, 4);
    Graph gg;
    SlotNetwork nn(gg, std::as_const(mm));
    auto nodes = nn.forward(prepare_utterance(Strings{"a", "b", "c"}, t),
                            embed_candidate({"food", "thai"}, t), make_context({}, t), nullptr);
    EXPECT_EQ(gg.value(nodes.c).size(), gg.value(nodes.r).size());
    EXPECT_EQ(gg.value(nodes.r).size(), mm.rep_dim());
  }
}

TEST(Candidate, SumsSlotAndValuePhrases) {
  const auto t = two_dim();
  auto cv = embed_candidate({"price", "thai food"}, t);
  EXPECT_EQ(cv.slot, t.lookup("price"));
  EXPECT_EQ(cv.value, Tensor::vector({3, 0}));
}

TEST(Context, EmptyRequestAndSummedActs) {
  const auto t = two_dim();
  const auto none = make_context({}, t);
  EXPECT_EQ(none.request, Tensor::zeros(2));
  EXPECT_EQ(none.confirm_slot, Tensor::zeros(2));
  EXPECT_EQ(none.confirm_value, Tensor::zeros(2));

  std::vector<SystemAct> one = {SystemAct::request("price")};
  const auto ctx = make_context(one, t);
  EXPECT_EQ(ctx.request, t.lookup("price"));
  EXPECT_EQ(ctx.confirm_slot, Tensor::zeros(2));

  std::vector<SystemAct> two = {SystemAct::request("price"), SystemAct::request("food"),
                                SystemAct::confirm("food", "thai")};
  const auto sum = make_context(two, t);
  EXPECT_EQ(sum.request, Tensor::vector({1.5, 1.5}));
  EXPECT_EQ(sum.confirm_value, t.lookup("thai"));
  const auto last = make_context(two, t, ActMerge::kLast);
  EXPECT_EQ(last.request, t.lookup("food"));
}

struct GateFixture : ::testing::Test {
  WordVectorTable t = two_dim();
  SlotModel m{"food", small(Variant::kCnn), 8};
  UtteranceInputs in = prepare_utterance(Strings{"a", "c", "d"}, t);
  CandidateVectors cand = embed_candidate({"food", "thai"}, t);

  std::pair<Tensor, Tensor> gates(const TurnContext& ctx, Tensor* logits = nullptr) {
    Graph g;
    SlotNetwork net(g, std::as_const(m));
    auto nodes = net.forward(in, cand, ctx, nullptr);
    if (logits) *logits = g.value(nodes.logits);
    return {g.value(nodes.m_r), g.value(nodes.m_c)};
  }
};

TEST_F(GateFixture, ZeroContextClosesBothGates) {
  auto [mr, mc] = gates(make_context({}, t));
  EXPECT_EQ(mr, Tensor::zeros(2));
  EXPECT_EQ(mc, Tensor::zeros(2));
  // Context orthogonal to the candidate slot is indistinguishable from none.
  TurnContext ortho{Tensor::vector({1, -1}), Tensor::vector({-2, 2}), Tensor::vector({5, 7})};
  Tensor l0, l1;
  gates(make_context({}, t), &l0);
  gates(ortho, &l1);
  EXPECT_EQ(l0, l1);
}

TEST_F(GateFixture, RequestGateIsLinearInContext) {
  TurnContext ctx = make_context({}, t);
  ctx.request = Tensor::vector({0.5, 0.25});
  auto [mr1, mc1] = gates(ctx);
  ctx.request *= 3.0;
  auto [mr3, mc3] = gates(ctx);
  for (std::size_t i = 0; i < mr1.size(); ++i) EXPECT_NEAR(mr3[i], 3.0 * mr1[i], 1e-12);
}

TEST_F(GateFixture, MatchingConfirmOpensGate) {
  std::vector<SystemAct> acts = {SystemAct::confirm("food", "thai")};
  Graph g;
  SlotNetwork net(g, std::as_const(m));
  auto nodes = net.forward(in, cand, make_context(acts, t), nullptr);
  const Tensor& r = g.value(nodes.r);
  const Tensor& mc = g.value(nodes.m_c);
  // (c_s·t_s)(c_v·t_v) = (2)(5) = 10
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(mc[i], 10.0 * r[i], 1e-12);
}

TEST(Forward, ProbabilityStrictlyInsideUnitInterval) {
  const auto t = two_dim();
  SlotModel m("food", small(Variant::kDnn), 6);
  for (auto& p : m.params()) {
    for (double& v : p.value.span()) v = v * 3 + 0.1;
  }
  const double p = predict_probability(m, Strings{"a", "b"}, make_context({}, t), {"food", "thai"}, t);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
  EXPECT_DOUBLE_EQ(expressed_probability(Tensor::vector({0, 0})), 0.5);
  EXPECT_NEAR(expressed_probability(Tensor::vector({0, std::log(3.0)})), 0.75, 1e-15);
}

TEST(Forward, ZeroInitialisedOutputGivesHalf) {
  const auto t = two_dim();
  SlotModel m("food", small(Variant::kCnn), 6);
  EXPECT_DOUBLE_EQ(
      predict_probability(m, Strings{"a"}, make_context({}, t), {"food", "thai"}, t), 0.5);
}

TEST(Forward, DropoutOnlyInTrainingMode) {
  const auto t = two_dim();
  ModelConfig cfg = small(Variant::kCnn);
  cfg.dropout = 0.5;
  SlotModel m("food", cfg, 6);
  m.params().get("output.W").value = Tensor::matrix({{1, -1, 2}, {0.5, 0.5, -1}});
  const auto in = prepare_utterance(Strings{"a", "c"}, t);
  const auto cand = embed_candidate({"food", "thai"}, t);
  const auto ctx = make_context({}, t);
  auto logits = [&](std::mt19937_64* rng) {
    Graph g;
    SlotNetwork net(g, std::as_const(m));
    return g.value(net.forward(in, cand, ctx, rng).logits);
  };
  EXPECT_EQ(logits(nullptr), logits(nullptr));
  std::mt19937_64 a(1), b(1);
  EXPECT_EQ(logits(&a), logits(&b));
  bool differs = false;
  std::mt19937_64 c(2);
  for (int i = 0; i < 10; ++i) differs |= logits(&c) != logits(nullptr);
  EXPECT_TRUE(differs);
}

TEST(SlotModelTest, SeededInitIsDeterministicPerSlot) {
  const auto cfg = small(Variant::kCnn);
  SlotModel a("food", cfg, 1), b("food", cfg, 1), c("area", cfg, 1), d("food", cfg, 2);
  EXPECT_EQ(a.params().get("utterance.W1").value, b.params().get("utterance.W1").value);
  EXPECT_NE(a.params().get("utterance.W1").value, c.params().get("utterance.W1").value);
  EXPECT_NE(a.params().get("utterance.W1").value, d.params().get("utterance.W1").value);
  for (const auto& p : a.params()) {
    if (p.name.find(".b") != std::string::npos || p.name == "output.W") {
      for (double v : p.value.span()) EXPECT_EQ(v, 0.0) << p.name;
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
      for (double v : p.value.span()) EXPECT_LE(std::fabs(v), bound) << p.name;
    }
  }
}

TEST(SlotModelTest, RejectsBadConfig) {
  ModelConfig cfg = small(Variant::kCnn);
  cfg.dropout = 1.0;
  EXPECT_THROW(SlotModel("food", cfg, 1), ConfigError);
  cfg = small(Variant::kCnn);
  cfg.filters = 0;
  EXPECT_THROW(SlotModel("food", cfg, 1), ConfigError);
  EXPECT_THROW(parse_variant("rnn"), ConfigError);
  EXPECT_EQ(parse_variant("dnn"), Variant::kDnn);
}

TEST(ModelIo, JsonRoundTripIsExact) {
  for (Variant v : {Variant::kDnn, Variant::kCnn}) {
    ModelConfig cfg = small(v);
    cfg.act_merge = ActMerge::kLast;
    cfg.dropout = 0.3;
    SlotModel m("price", cfg, 11);
    m.params().get("output.b").value = Tensor::vector({0.1, 1.0 / 3.0});
    const std::string text = model_to_json(m, "abc123");
    std::string fp;
    SlotModel back = model_from_json(text, "m.json", &fp);
    EXPECT_EQ(fp, "abc123");
    EXPECT_EQ(back.slot(), "price");
    EXPECT_EQ(back.config().variant, v);
    EXPECT_EQ(back.config().act_merge, ActMerge::kLast);
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      EXPECT_EQ(back.params()[i].value, m.params()[i].value);
    }
    EXPECT_EQ(model_to_json(back, "abc123"), text);
  }
}

TEST(ModelIo, RejectsVersionAndShapeMismatch) {
  SlotModel m("food", small(Variant::kCnn), 1);
  std::string text = model_to_json(m, "");
  std::string bad_version = text;
  bad_version.replace(bad_version.find("\"format_version\":1"), 18, "\"format_version\":99");
  EXPECT_THROW(model_from_json(bad_version), ValidationError);
  std::string bad_dim = text;
  const auto pos = bad_dim.find("\"L\":2");
  ASSERT_NE(pos, std::string::npos);
  bad_dim.replace(pos, 5, "\"L\":3");
  EXPECT_THROW(model_from_json(bad_dim), ValidationError);
  EXPECT_THROW(model_from_json("{\"format_version\": 1,"), ParseError);
}

TEST(PredictTurn, KeysAreExactlyCandidatePairs) {
  const auto t = two_dim();
  Ontology o({{"food", {"thai", "italian"}}}, {"price"});
  SlotModels models;
  for (const auto& s : o.tracked_slots()) models.emplace(s, SlotModel(s, small(Variant::kCnn), 3));
  auto probs = predict_turn(models, Strings{"a", "thai"}, make_context({}, t), o, t);
  std::vector<CandidatePair> keys;
  for (const auto& [k, p] : probs) {
    keys.push_back(k);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
  auto want = candidate_pairs(o);
  std::sort(want.begin(), want.end());
  EXPECT_EQ(keys, want);
  EXPECT_EQ(probs, predict_turn(models, Strings{"a", "thai"}, make_context({}, t), o, t));
  models.erase("request");
  EXPECT_THROW(predict_turn(models, Strings{"a"}, make_context({}, t), o, t), ConfigError);
}

TEST(GradientCheck, BothVariantsBelowTolerance) {
  for (Variant v : {Variant::kDnn, Variant::kCnn}) {
    const auto report = gradient_check(v);
    EXPECT_EQ(report.groups.size(), SlotModel::parameter_names().size());
    EXPECT_LT(report.max_rel_error, 1e-4) << to_string(v);
    for (const auto& g : report.groups) EXPECT_GT(g.checked, 0u) << g.name;
  }
}

TEST(GradientCheck, RelativeErrorFloor) {
  EXPECT_DOUBLE_EQ(relative_error(1.0, 0.5, 1e-6), 0.5);
  EXPECT_DOUBLE_EQ(relative_error(1e-9, 0.0, 1e-6), 1e-3);
}

}  // namespace
}  // namespace nbt
