#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "nbt/baseline.hpp"
#include "nbt/graph.hpp"
#include "nbt/model.hpp"
#include "nbt/tokenize.hpp"
#include "nbt/toy_corpus.hpp"
#include "nbt/tracker.hpp"

namespace {

using namespace nbt;

const ToyCorpus& toy() {
  static const ToyCorpus corpus = [] {
    ToyCorpusSpec spec;
    spec.n_dialogues = 4;
    spec.dim = 300;
    return generate_toy_corpus(spec);
  }();
  return corpus;
}

struct Inputs {
  UtteranceInputs utterance;
  CandidateVectors candidate;
  TurnContext context;
};

Inputs make_inputs() {
  const ToyCorpus& t = toy();
  const auto tokens = tokenize("i want cheap thai food in the centre of town please");
  const std::vector<SystemAct> acts{SystemAct::request("food")};
  return {prepare_utterance(tokens, t.vectors), embed_candidate({"food", "thai"}, t.vectors),
          make_context(acts, t.vectors)};
}

ModelConfig config_for(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.word_dim = 300;
  return c;
}

void run_forward(benchmark::State& state, Variant v) {
  SlotModel model("food", config_for(v), 1);
  const Inputs in = make_inputs();
  for (auto _ : state) {
    Graph g;
    SlotNetwork net(g, model);
    auto nodes = net.forward(in.utterance, in.candidate, in.context, nullptr);
    benchmark::DoNotOptimize(g.value(nodes.logits)[0]);
  }
}

void run_forward_backward(benchmark::State& state, Variant v) {
  SlotModel model("food", config_for(v), 1);
  const Inputs in = make_inputs();
  std::mt19937_64 rng(3);
  for (auto _ : state) {
    model.params().zero_grad();
    Graph g;
    SlotNetwork net(g, model);
    auto nodes = net.forward(in.utterance, in.candidate, in.context, &rng);
    Var loss = g.softmax_xent(nodes.logits, 1);
    g.backward(loss);
    benchmark::DoNotOptimize(g.value(loss)[0]);
  }
}

void BM_ForwardDnn(benchmark::State& s) { run_forward(s, Variant::kDnn); }
void BM_ForwardCnn(benchmark::State& s) { run_forward(s, Variant::kCnn); }
void BM_TrainStepDnn(benchmark::State& s) { run_forward_backward(s, Variant::kDnn); }
void BM_TrainStepCnn(benchmark::State& s) { run_forward_backward(s, Variant::kCnn); }
BENCHMARK(BM_ForwardDnn);
BENCHMARK(BM_ForwardCnn);
BENCHMARK(BM_TrainStepDnn);
BENCHMARK(BM_TrainStepCnn);

void BM_BeliefUpdate(benchmark::State& state) {
  const Ontology& ontology = toy().ontology;
  ProbabilityMap turn;
  double p = 0.1;
  for (const auto& pair : candidate_pairs(ontology)) {
    turn[pair] = p;
    p = p > 0.9 ? 0.1 : p + 0.13;
  }
  BeliefState belief;
  for (auto _ : state) {
    belief = update_belief(belief, turn, 0.55);
    benchmark::DoNotOptimize(belief.probs.size());
  }
}
BENCHMARK(BM_BeliefUpdate);

void BM_Delexicalise(benchmark::State& state) {
  const ToyCorpus& t = toy();
  const auto tokens = tokenize("i want cheap thai food in the centre of town what is the phone");
  for (auto _ : state) {
    auto d = baseline::delexicalise(tokens, t.ontology, &t.dictionary);
    benchmark::DoNotOptimize(d.tagged.size());
  }
}
BENCHMARK(BM_Delexicalise);

}  // namespace

BENCHMARK_MAIN();
