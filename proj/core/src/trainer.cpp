#include "nbt/trainer.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "hash.hpp"
#include "parallel.hpp"
#include "nbt/tokenize.hpp"

namespace nbt {

std::vector<PreparedExample> prepare_examples(std::span<const Example> examples,
                                              const WordVectorTable& table, ActMerge merge) {
  std::vector<PreparedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    PreparedExample p;
    p.utterance = prepare_utterance(ex.tokens, table);
    p.candidate = embed_candidate(ex.candidate, table);
    p.context = make_context(ex.acts, table, merge);
    p.label = ex.label;
    out.push_back(std::move(p));
  }
  return out;
}

ExampleScore score_examples(const SlotModel& model, std::span<const PreparedExample> examples) {
  ExampleScore s;
  if (examples.empty()) return s;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    Graph g;
    SlotNetwork net(g, model);
    auto nodes = net.forward(ex.utterance, ex.candidate, ex.context, nullptr);
    const double p = expressed_probability(g.value(nodes.logits));
    const double q = ex.label ? p : 1.0 - p;
    s.loss -= std::log(std::max(q, 1e-300));
    if ((p >= 0.5) == (ex.label == 1)) ++correct;
  }
  s.loss /= static_cast<double>(examples.size());
  s.accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  return s;
}

TrainHistory train_slot(SlotModel& model, std::span<const Example> examples,
                        const WordVectorTable& table, const TrainConfig& config,
                        const Validator& validate) {
  const auto prepared = prepare_examples(examples, table, model.config().act_merge);
  MinibatchSampler sampler(examples, config.batches, model.slot());
  AdamState adam = AdamState::for_parameters(model.params());
  std::mt19937_64 dropout_rng(detail::mix64(config.seed) ^ detail::fnv1a(model.slot()));

  auto score = [&]() {
    return validate ? validate(model) : -score_examples(model, prepared).loss;
  };

  TrainHistory history;
  ParameterSet best = model.params();
  ParameterSet last_good = model.params();
  history.best_validation = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (const auto& batch : sampler.next_epoch()) {
      model.params().zero_grad();
      double batch_loss = 0.0;
      for (std::size_t idx : batch) {
        const PreparedExample& ex = prepared[idx];
        Graph g;
        SlotNetwork net(g, model);
        auto nodes = net.forward(ex.utterance, ex.candidate, ex.context, &dropout_rng);
        Var loss = g.softmax_xent(nodes.logits, static_cast<std::size_t>(ex.label));
        batch_loss += g.value(loss)[0];
        g.backward(loss);
      }
      if (!std::isfinite(batch_loss)) {
        model.params().assign_values(last_good);
        throw TrainingDiverged("slot '" + model.slot() + "': non-finite loss in epoch " +
                                   std::to_string(epoch),
                               history);
      }
      model.params().scale_grad(1.0 / static_cast<double>(batch.size()));
      try {
        adam_step(model.params(), adam, config.adam);
      } catch (const NumericsError& e) {
        model.params().assign_values(last_good);
        throw TrainingDiverged("slot '" + model.slot() + "': " + e.what(), history);
      }
      loss_sum += batch_loss;
      loss_count += batch.size();
    }
    model.params().zero_grad();
    last_good.assign_values(model.params());

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    rec.validation = score();
    history.epochs.push_back(rec);
    if (rec.validation > history.best_validation) {
      history.best_validation = rec.validation;
      history.best_epoch = epoch;
      best.assign_values(model.params());
      since_best = 0;
    } else if (++since_best >= config.patience) {
      history.early_stopped = true;
      break;
    }
    if (rec.validation >= config.target_score) {
      history.early_stopped = true;
      break;
    }
  }
  model.params().assign_values(best);
  return history;
}

TrainedSlots train_all_slots(const Corpus& train, const Ontology& ontology,
                             const WordVectorTable& table, const ModelConfig& model_config,
                             const TrainConfig& config, std::uint64_t model_seed,
                             std::size_t jobs, const Corpus* validation) {
  const std::vector<std::string> slots = ontology.tracked_slots();
  std::vector<SlotModel> models;
  models.reserve(slots.size());
  for (const auto& slot : slots) models.emplace_back(slot, model_config, model_seed);
  std::vector<TrainHistory> histories(slots.size());

  detail::parallel_for(slots.size(), jobs, [&](std::size_t i) {
    const auto examples = generate_examples(train, ontology, slots[i]);
    Validator validate;
    std::vector<PreparedExample> dev;
    if (validation != nullptr) {
      dev = prepare_examples(generate_examples(*validation, ontology, slots[i]), table,
                             model_config.act_merge);
      validate = [&dev](const SlotModel& m) { return -score_examples(m, dev).loss; };
    }
    histories[i] = train_slot(models[i], examples, table, config, validate);
  });

  TrainedSlots out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    out.models.emplace(slots[i], std::move(models[i]));
    out.histories.emplace(slots[i], std::move(histories[i]));
  }
  return out;
}

}  // namespace nbt
