#include <gtest/gtest.h>

#include "nbt/errors.hpp"
#include "nbt/examples.hpp"
#include "nbt/trainer.hpp"

namespace nbt {
namespace {

Ontology ontology() { return Ontology({{"food", {"thai", "italian"}}}, {"phone"}); }

Corpus corpus() {
  const char* utterances[] = {"thai food please", "i want italian", "no preference",
                              "what is the phone", "italian food", "thai please"};
  const char* values[] = {"thai", "italian", "", "", "italian", "thai"};
  Corpus c;
  for (int i = 0; i < 36; ++i) {
    Turn t;
    t.transcript = utterances[i % 6];
    TurnLabels l;
    if (*values[i % 6]) l.goals["food"] = values[i % 6];
    if (i % 6 == 3) l.requests = {"phone"};
    t.labels = l;
    c.push_back({"d" + std::to_string(i), {t}});
  }
  return c;
}

WordVectorTable table() {
  const std::vector<std::string> vocab = {"thai", "food", "please", "i", "want", "italian", "no",
                                          "preference", "what", "is", "the", "phone"};
  return random_table(vocab, 16, 5);
}

ModelConfig model_config() {
  ModelConfig c;
  c.variant = Variant::kCnn;
  c.word_dim = 16;
  c.filters = 16;
  c.hidden = 16;
  c.dropout = 0.0;
  return c;
}

TrainConfig train_config(std::size_t epochs) {
  TrainConfig c;
  c.adam.learning_rate = 0.02;
  c.batches = {8, 0.25, 3};
  c.max_epochs = epochs;
  c.patience = epochs;
  return c;
}

TEST(Trainer, SeparableSlotReachesHighAccuracy) {
  const auto t = table();
  const auto ex = generate_examples(corpus(), ontology(), "food");
  const auto prepared = prepare_examples(ex, t, ActMerge::kSum);
  for (std::uint64_t seed : {1, 2, 3}) {
    SlotModel m("food", model_config(), seed);
    auto h = train_slot(m, ex, t, train_config(30));
    ASSERT_FALSE(h.epochs.empty());
    EXPECT_LE(h.epochs.size(), 30u);
    const auto s = score_examples(m, prepared);
    EXPECT_GE(s.accuracy, 0.99) << "seed " << seed;
    EXPECT_LT(h.epochs.back().mean_loss, h.epochs.front().mean_loss);
    EXPECT_DOUBLE_EQ(h.best_validation, -s.loss);
  }
}

TEST(Trainer, ZeroLearningRateLeavesParametersUnchanged) {
  const auto t = table();
  const auto ex = generate_examples(corpus(), ontology(), "food");
  SlotModel m("food", model_config(), 1);
  const SlotModel before = m;
  auto cfg = train_config(1);
  cfg.adam.learning_rate = 0.0;
  train_slot(m, ex, t, cfg);
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    EXPECT_EQ(m.params()[i].value, before.params()[i].value);
  }
}

TEST(Trainer, SameSeedGivesIdenticalLossCurves) {
  const auto t = table();
  const auto ex = generate_examples(corpus(), ontology(), "food");
  ModelConfig mc = model_config();
  mc.dropout = 0.3;
  SlotModel a("food", mc, 1), b("food", mc, 1);
  auto ha = train_slot(a, ex, t, train_config(5));
  auto hb = train_slot(b, ex, t, train_config(5));
  ASSERT_EQ(ha.epochs.size(), hb.epochs.size());
  for (std::size_t i = 0; i < ha.epochs.size(); ++i) {
    EXPECT_EQ(ha.epochs[i].mean_loss, hb.epochs[i].mean_loss);
    EXPECT_EQ(ha.epochs[i].validation, hb.epochs[i].validation);
  }
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params()[i].value, b.params()[i].value);
  }
}

TEST(Trainer, EarlyStoppingRestoresBestEpoch) {
  const auto t = table();
  const auto ex = generate_examples(corpus(), ontology(), "food");
  SlotModel m("food", model_config(), 2);
  int calls = 0;
  // A validator that peaks at the third epoch.
  Validator v = [&](const SlotModel&) {
    ++calls;
    return calls == 3 ? 1.0 : 0.0;
  };
  auto cfg = train_config(50);
  cfg.patience = 4;
  auto h = train_slot(m, ex, t, cfg, v);
  EXPECT_TRUE(h.early_stopped);
  EXPECT_EQ(h.best_epoch, 3u);
  EXPECT_EQ(h.epochs.size(), 7u);
  EXPECT_EQ(h.best_validation, 1.0);
}

TEST(Trainer, TargetScoreStopsImmediately) {
  const auto t = table();
  const auto ex = generate_examples(corpus(), ontology(), "food");
  SlotModel m("food", model_config(), 2);
  auto cfg = train_config(50);
  cfg.target_score = -1e9;
  auto h = train_slot(m, ex, t, cfg);
  EXPECT_EQ(h.epochs.size(), 1u);
}

TEST(Trainer, AllSlotsParallelMatchesSequentialAndIsolatesSlots) {
  const auto t = table();
  const auto o = ontology();
  const auto c = corpus();
  auto seq = train_all_slots(c, o, t, model_config(), train_config(4), 9, 1);
  auto par = train_all_slots(c, o, t, model_config(), train_config(4), 9, 2);
  ASSERT_EQ(seq.models.size(), 2u);
  for (const auto& [slot, m] : seq.models) {
    const auto& other = par.models.at(slot);
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      EXPECT_EQ(m.params()[i].value, other.params()[i].value);
    }
  }
  // Training one slot alone yields the same parameters as inside the full run.
  SlotModel alone("food", model_config(), 9);
  const auto ex = generate_examples(c, o, "food");
  train_slot(alone, ex, t, train_config(4));
  for (std::size_t i = 0; i < alone.params().size(); ++i) {
    EXPECT_EQ(alone.params()[i].value, seq.models.at("food").params()[i].value);
  }
}

TEST(Trainer, DimensionMismatchIsRejected) {
  const auto ex = generate_examples(corpus(), ontology(), "food");
  ModelConfig mc = model_config();
  mc.word_dim = 5;
  SlotModel m("food", mc, 1);
  EXPECT_THROW(train_slot(m, ex, table(), train_config(1)), Error);
}

}  // namespace
}  // namespace nbt
