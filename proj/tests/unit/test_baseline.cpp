#include <gtest/gtest.h>

#include <cmath>

#include "nbt/baseline.hpp"
#include "nbt/errors.hpp"
#include "nbt/tokenize.hpp"

namespace nbt::baseline {
namespace {

using Strings = std::vector<std::string>;

Ontology ontology() {
  return Ontology({{"food", {"thai", "italian", "modern european"}},
                   {"price", {"cheap", "expensive"}},
                   {"area", {"centre", "north"}}},
                  {"address", "phone"});
}

SemanticDictionary dictionary() {
  SemanticDictionary d;
  d.add({"area", "centre"}, "downtown");
  d.add({"area", "centre"}, "city centre");
  d.add({"food", "thai"}, "siamese");
  return d;
}

TEST(Delexicalise, ValuesBecomeSlotTags) {
  auto o = ontology();
  auto d = delexicalise(tokenize("cheap thai food"), o);
  EXPECT_EQ(d.tagged, (Strings{"<value:price>", "<value:food>", "food"}));
  ASSERT_EQ(d.matches.size(), 2u);
  EXPECT_EQ(d.matches[1].value, "thai");
  EXPECT_EQ(d.matches[1].tagged_index, 1u);
}

TEST(Delexicalise, DictionaryRephrasings) {
  auto o = ontology();
  auto dict = dictionary();
  EXPECT_EQ(delexicalise(tokenize("downtown"), o, &dict).tagged, Strings{"<value:area>"});
  EXPECT_EQ(delexicalise(tokenize("downtown"), o).tagged, Strings{"downtown"});
  auto d = delexicalise(tokenize("siamese in the city centre"), o, &dict);
  EXPECT_EQ(d.tagged, (Strings{"<value:food>", "in", "the", "<value:area>"}));
  EXPECT_EQ(d.matches[1].value, "centre");
  EXPECT_EQ(d.matches[1].begin, 3u);
  EXPECT_EQ(d.matches[1].end, 5u);
}

TEST(Delexicalise, NoMatchesIsIdentity) {
  auto d = delexicalise(tokenize("hello there"), ontology());
  EXPECT_EQ(d.tagged, (Strings{"hello", "there"}));
  EXPECT_TRUE(d.matches.empty());
}

TEST(Delexicalise, LongestMatchWinsAndSlotNames) {
  Ontology o({{"food", {"modern", "modern european"}}}, {"address"});
  auto d = delexicalise(tokenize("modern european food address"), o);
  EXPECT_EQ(d.tagged, (Strings{"<value:food>", "food", "<slot:address>"}));
  EXPECT_EQ(d.matches[0].value, "modern european");
  DelexOptions opt;
  opt.tag_informable_slot_names = true;
  EXPECT_EQ(delexicalise(tokenize("modern food"), o, nullptr, opt).tagged,
            (Strings{"<value:food>", "<slot:food>"}));
}

TEST(Delexicalise, RestoreRecoversOriginal) {
  auto o = ontology();
  auto dict = dictionary();
  for (const char* text : {"cheap thai food in the city centre", "downtown modern european please",
                           "what is the phone and address", "nothing here"}) {
    auto d = delexicalise(tokenize(text), o, &dict);
    EXPECT_EQ(d.restore(), tokenize(text)) << text;
  }
}

TEST(Featurize, TemplateNgramsAroundCandidate) {
  auto o = ontology();
  auto d = delexicalise(tokenize("thai food"), o);
  auto f = featurize(d, {}, {"food", "thai"});
  EXPECT_EQ(f, (Features{{"<value> food", 1}, {"<value>", 1}}));
}

TEST(Featurize, AbsentCandidateHasOnlyContextFeatures) {
  auto o = ontology();
  auto d = delexicalise(tokenize("thai food"), o);
  EXPECT_TRUE(featurize(d, {}, {"food", "italian"}).empty());
  std::vector<SystemAct> acts = {SystemAct::request("food")};
  auto f = featurize(d, acts, {"food", "italian"});
  EXPECT_EQ(f.count("sys:request_slot"), 1u);
  for (const auto& [k, v] : f) EXPECT_EQ(k.rfind("sys:", 0), 0u) << k;
}

TEST(Featurize, ConfirmIndicators) {
  auto o = ontology();
  auto d = delexicalise(tokenize("yes"), o);
  std::vector<SystemAct> acts = {SystemAct::confirm("food", "thai")};
  auto f = featurize(d, acts, {"food", "thai"});
  EXPECT_EQ(f.at("sys:confirm_match"), 1.0);
  EXPECT_EQ(f.at("sys:confirm_match&yes"), 1.0);
  auto other = featurize(d, acts, {"food", "italian"});
  EXPECT_EQ(other.count("sys:confirm_match"), 0u);
  EXPECT_EQ(other.at("sys:confirm_other_value"), 1.0);
  EXPECT_TRUE(featurize(d, acts, {"price", "cheap"}).empty());
}

TEST(Featurize, InvariantToValueString) {
  auto o = ontology();
  auto a = featurize(delexicalise(tokenize("i want thai food"), o), {}, {"food", "thai"});
  auto b = featurize(delexicalise(tokenize("i want italian food"), o), {}, {"food", "italian"});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.at("want <value> food"), 1.0);
}

TEST(Featurize, RequestCandidatesUseSlotTags) {
  auto o = ontology();
  auto f = featurize(delexicalise(tokenize("the address please"), o), {}, {"request", "address"});
  EXPECT_EQ(f.at("the <slot> please"), 1.0);
  EXPECT_TRUE(featurize(delexicalise(tokenize("the address"), o), {}, {"request", "phone"}).empty());
}

TEST(Dictionary, JsonRoundTripAndValidation) {
  auto o = ontology();
  auto d = dictionary();
  EXPECT_EQ(SemanticDictionary::from_json(d.to_json(), o), d);
  EXPECT_EQ(d.phrase_count(), 3u);
  EXPECT_THROW(SemanticDictionary::from_json(R"({"food":{"sushi":["raw fish"]}})", o),
               ValidationError);
  EXPECT_THROW(SemanticDictionary::from_json(R"({"food":{"thai":["!!"]}})", o), ValidationError);
  try {
    SemanticDictionary::from_json("{\n\"food\": {\n\"thai\": [\"a\" \"b\"]}}", o, "dict.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

Corpus training_corpus() {
  const char* texts[] = {"cheap thai food", "i want italian", "expensive restaurant in the north",
                         "what is the address", "thai in the centre", "phone number please"};
  std::vector<std::map<std::string, std::string>> informs = {
      {{"price", "cheap"}, {"food", "thai"}}, {{"food", "italian"}},
      {{"price", "expensive"}, {"area", "north"}}, {},
      {{"food", "thai"}, {"area", "centre"}}, {}};
  std::vector<Strings> requests = {{}, {}, {}, {"address"}, {}, {"phone"}};
  Corpus c;
  for (int i = 0; i < 24; ++i) {
    Turn t;
    t.transcript = texts[i % 6];
    t.labels = TurnLabels{informs[i % 6], requests[i % 6], informs[i % 6]};
    c.push_back({"d" + std::to_string(i), {t}});
  }
  return c;
}

TEST(Training, LearnsExactMentionsAndRoundTrips) {
  auto o = ontology();
  BaselineConfig cfg;
  cfg.adam.learning_rate = 0.05;
  cfg.batches = {8, 0.25, 1};
  auto models = train_baseline_all(training_corpus(), o, nullptr, cfg);
  ASSERT_EQ(models.size(), 4u);
  BaselinePredictor pred(models, o, nullptr);
  auto p = pred.predict(tokenize("cheap italian food in the north"), {});
  EXPECT_GT(p.at({"price", "cheap"}), 0.5);
  EXPECT_GT(p.at({"food", "italian"}), 0.5);
  EXPECT_GT(p.at({"area", "north"}), 0.5);
  EXPECT_LT(p.at({"food", "thai"}), 0.5);
  EXPECT_LT(p.at({"request", "address"}), 0.5);
  EXPECT_EQ(p.size(), candidate_pairs(o).size());

  for (const auto& [slot, m] : models) {
    auto back = BaselineSlotModel::from_json(m.to_json());
    EXPECT_EQ(back.to_json(), m.to_json());
    EXPECT_EQ(back.slot(), slot);
  }
  auto again = train_baseline_all(training_corpus(), o, nullptr, cfg, 2);
  for (const auto& [slot, m] : models) EXPECT_EQ(again.at(slot).to_json(), m.to_json());
}

TEST(Training, ModelJsonRejectsWrongVersion) {
  BaselineSlotModel m("food", {"a"}, {0.5}, 0.1);
  std::string text = m.to_json();
  const auto pos = text.find("\"format_version\":1");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 18, "\"format_version\":2");
  EXPECT_THROW(BaselineSlotModel::from_json(text), ValidationError);
  EXPECT_DOUBLE_EQ(m.probability({{"a", 1.0}, {"unseen", 5.0}}), 1.0 / (1.0 + std::exp(-0.6)));
}

}  // namespace
}  // namespace nbt::baseline
