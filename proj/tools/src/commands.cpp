#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "nbt/baseline.hpp"
#include "nbt/domain.hpp"
#include "nbt/errors.hpp"
#include "nbt/eval.hpp"
#include "nbt/examples.hpp"
#include "nbt/gradcheck.hpp"
#include "nbt/model.hpp"
#include "nbt/tokenize.hpp"
#include "nbt/toy_corpus.hpp"
#include "nbt/tracker.hpp"
#include "nbt/trainer.hpp"
#include "nbt/wordvec.hpp"

namespace nbt::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kModule = "cli";
constexpr const char* kReportName = "train_report.json";

void log(const std::string& line) { std::cerr << line << '\n'; }

void require_path(const std::string& path, const char* flag) {
  if (path.empty()) throw ConfigError(kModule, std::string("missing required ") + flag);
}

fs::path model_file(const std::string& dir, const std::string& slot) {
  return fs::path(dir) / (slot + ".json");
}

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// Models of one kind loaded from a model directory.
struct LoadedModels {
  std::string variant;
  SlotModels nbt;
  baseline::BaselineModels baseline;
};

LoadedModels load_models(const std::string& dir, const Ontology& ontology,
                         const WordVectorTable* table) {
  if (!fs::is_directory(dir)) throw IoError(kModule, "model directory not found: " + dir);
  const auto slots = ontology.tracked_slots();
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() != ".json" || name == kReportName) continue;
    const auto slot = entry.path().stem().string();
    if (std::find(slots.begin(), slots.end(), slot) == slots.end()) {
      throw ValidationError(kModule, "model file " + entry.path().string() +
                                         " names slot '" + slot + "' absent from the ontology");
    }
  }
  LoadedModels out;
  for (const auto& slot : slots) {
    const fs::path path = model_file(dir, slot);
    if (!fs::exists(path)) {
      throw ValidationError(kModule, "no model for slot '" + slot + "' in " + dir);
    }
    const std::string text = read_text_file(path);
    std::string variant;
    try {
      variant = json::parse(text).at("variant").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(kModule, path.string() + ": not a model file");
    }
    if (out.variant.empty()) out.variant = variant;
    if (variant != out.variant) {
      throw ValidationError(kModule, dir + " mixes '" + out.variant + "' and '" + variant +
                                         "' models");
    }
    if (variant == "baseline") {
      out.baseline.emplace(slot, baseline::BaselineSlotModel::from_json(text, path.string()));
      continue;
    }
    std::string fingerprint;
    SlotModel model = model_from_json(text, path.string(), &fingerprint);
    if (model.slot() != slot) {
      throw ValidationError(kModule, path.string() + " holds the model for '" + model.slot() + "'");
    }
    if (table == nullptr) throw ConfigError(kModule, "NBT models need --vectors");
    if (model.config().word_dim != table->dim()) {
      throw ValidationError(kModule, path.string() + ": model expects " +
                                         std::to_string(model.config().word_dim) +
                                         "-dimensional vectors, table has " +
                                         std::to_string(table->dim()));
    }
    if (fingerprint != table->fingerprint()) {
      log("warning: " + path.string() + " was trained with a different vector file");
    }
    out.nbt.emplace(slot, std::move(model));
  }
  return out;
}

json history_json(const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"loss", e.mean_loss}, {"validation", e.validation}});
  }
  return {{"best_epoch", h.best_epoch},
          {"best_validation", h.best_validation},
          {"early_stopped", h.early_stopped},
          {"epochs", epochs}};
}

json baseline_history_json(const baseline::BaselineHistory& h) {
  json epochs = json::array();
  for (std::size_t i = 0; i < h.epoch_loss.size(); ++i) {
    epochs.push_back({{"epoch", i + 1}, {"loss", h.epoch_loss[i]},
                      {"validation", h.epoch_accuracy[i]}});
  }
  return {{"epochs", epochs}};
}

}  // namespace

int cmd_train(const TrainOptions& o) {
  if (!o.seed) throw ConfigError(kModule, "train requires --seed");
  require_path(o.paths.ontology, "--ontology");
  require_path(o.paths.corpus, "--corpus");
  require_path(o.paths.model_dir, "--model-dir");

  const Ontology ontology = Ontology::load(o.paths.ontology);
  const Corpus corpus = load_corpus(o.paths.corpus, ontology);
  std::optional<Corpus> validation;
  if (!o.validation_corpus.empty()) validation = load_corpus(o.validation_corpus, ontology);
  const CorpusStats stats = corpus_stats(corpus);
  log("training on " + std::to_string(stats.dialogues) + " dialogues, " +
      std::to_string(stats.labeled_turns) + " labeled turns");

  AdamConfig adam;
  adam.learning_rate = o.lr;
  BatchPlan plan;
  plan.batch_size = o.batch;
  plan.positive_fraction = o.pos_frac;
  plan.seed = *o.seed;

  fs::create_directories(o.paths.model_dir);
  json report;
  report["variant"] = o.variant;
  report["seed"] = *o.seed;
  report["learning_rate"] = o.lr;
  report["batch_size"] = o.batch;
  report["positive_fraction"] = o.pos_frac;
  const auto start = std::chrono::steady_clock::now();

  if (o.variant == "baseline") {
    std::optional<baseline::SemanticDictionary> dict;
    if (!o.paths.dictionary.empty()) {
      dict = baseline::SemanticDictionary::load(o.paths.dictionary, ontology);
    }
    baseline::BaselineConfig config;
    config.adam = adam;
    config.batches = plan;
    config.l2 = o.l2;
    config.max_epochs = o.epochs;
    config.patience = o.patience;
    config.delex.tag_informable_slot_names = o.tag_slot_names;
    std::map<std::string, baseline::BaselineHistory> histories;
    const auto models = baseline::train_baseline_all(corpus, ontology, dict ? &*dict : nullptr,
                                                     config, o.jobs, &histories);
    for (const auto& [slot, model] : models) {
      write_text_file(model_file(o.paths.model_dir, slot), model.to_json());
      report["slots"][slot] = baseline_history_json(histories.at(slot));
    }
  } else {
    require_path(o.paths.vectors, "--vectors");
    const WordVectorTable table = WordVectorTable::load(o.paths.vectors);
    LookupStats oov;
    for (const auto& d : corpus) {
      for (const auto& t : d.turns) {
        for (const auto& tok : tokenize(t.transcript)) table.lookup(tok, &oov);
      }
    }
    log("vector table: " + std::to_string(table.size()) + " words, D=" +
        std::to_string(table.dim()) + ", corpus OOV rate " + fixed(oov.oov_rate()));
    ModelConfig mc;
    mc.variant = parse_variant(o.variant);
    mc.word_dim = table.dim();
    mc.filters = o.filters;
    mc.hidden = o.hidden;
    mc.dropout = o.dropout;
    mc.squashed_logits = o.squashed_logits;
    TrainConfig tc;
    tc.adam = adam;
    tc.batches = plan;
    tc.max_epochs = o.epochs;
    tc.patience = o.patience;
    tc.seed = *o.seed;
    const TrainedSlots trained = train_all_slots(corpus, ontology, table, mc, tc, *o.seed,
                                                 o.jobs, validation ? &*validation : nullptr);
    for (const auto& [slot, model] : trained.models) {
      save_model(model, model_file(o.paths.model_dir, slot), table.fingerprint());
      const auto& h = trained.histories.at(slot);
      report["slots"][slot] = history_json(h);
      log("slot " + slot + ": best epoch " + std::to_string(h.best_epoch) + ", validation " +
          fixed(h.best_validation));
    }
    report["oov_rate"] = oov.oov_rate();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report["seconds"] = seconds;
  const std::string report_path =
      o.report.empty() ? (fs::path(o.paths.model_dir) / kReportName).string() : o.report;
  write_text_file(report_path, report.dump(2) + "\n");
  log("models written to " + o.paths.model_dir + " in " + fixed(seconds, 1) + " s");
  return kOk;
}

int cmd_track(const TrackOptionsCli& o) {
  require_path(o.paths.ontology, "--ontology");
  require_path(o.paths.corpus, "--corpus");
  require_path(o.paths.model_dir, "--model-dir");
  const Ontology ontology = Ontology::load(o.paths.ontology);
  const Corpus corpus = load_corpus(o.paths.corpus, ontology);
  std::optional<WordVectorTable> table;
  if (!o.paths.vectors.empty()) table = WordVectorTable::load(o.paths.vectors);
  const LoadedModels models = load_models(o.paths.model_dir, ontology, table ? &*table : nullptr);

  std::optional<baseline::SemanticDictionary> dict;
  if (!o.paths.dictionary.empty()) {
    dict = baseline::SemanticDictionary::load(o.paths.dictionary, ontology);
  }
  std::unique_ptr<TurnPredictor> predictor;
  if (models.variant == "baseline") {
    predictor = std::make_unique<baseline::BaselinePredictor>(models.baseline, ontology,
                                                               dict ? &*dict : nullptr);
  } else {
    predictor = std::make_unique<NbtPredictor>(models.nbt, ontology, *table);
  }

  TrackOptions options;
  options.lambda = o.lambda;
  options.use_asr = o.use_asr;
  options.renormalize_asr = o.renormalize_asr;
  const auto results = track_corpus(*predictor, corpus, ontology, options, o.jobs);

  std::ostringstream lines;
  std::size_t fallbacks = 0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    fallbacks += results[d].asr_fallbacks;
    for (std::size_t t = 0; t < results[d].turns.size(); ++t, ++n) {
      lines << tracker_output_line(corpus[d].id, t, results[d].turns[t], ontology) << '\n';
    }
  }
  if (o.out.empty() || o.out == "-") {
    std::cout << lines.str();
  } else {
    write_text_file(o.out, lines.str());
  }
  log("tracked " + std::to_string(n) + " turns with " + models.variant + " models");
  if (fallbacks > 0) {
    log("warning: " + std::to_string(fallbacks) + " turns had no ASR list; used transcripts");
  }
  return kOk;
}

int cmd_eval(const EvalOptions& o) {
  require_path(o.ontology, "--ontology");
  require_path(o.corpus, "--corpus");
  require_path(o.outputs, "--outputs");
  const Ontology ontology = Ontology::load(o.ontology);
  const Corpus gold = load_corpus(o.corpus, ontology);
  const auto outputs = parse_tracker_output(read_text_file(o.outputs), o.outputs);
  const Metrics metrics = score(outputs, gold, ontology);
  std::cout << metrics_table(metrics);

  json report = json::parse(metrics_to_json(metrics));
  if (!o.compare.empty()) {
    const auto other = parse_tracker_output(read_text_file(o.compare), o.compare);
    const auto sig = paired_bootstrap(outputs, other, gold, ontology, o.iterations, o.seed);
    std::cout << "difference vs " << o.compare << ": " << fixed(sig.observed_difference)
              << " (bootstrap p=" << fixed(sig.bootstrap_p) << ", Welch t=" << fixed(sig.welch_t, 3)
              << " p=" << fixed(sig.welch_p) << ")\n";
    report["comparison"] = {{"against", o.compare},
                            {"difference", sig.observed_difference},
                            {"bootstrap_p", sig.bootstrap_p},
                            {"iterations", sig.iterations},
                            {"welch_t", sig.welch_t},
                            {"welch_p", sig.welch_p}};
  }
  const std::string json_out = o.json_out.empty() ? o.outputs + ".metrics.json" : o.json_out;
  write_text_file(json_out, report.dump(2) + "\n");
  if (o.min_joint_goal && metrics.joint_goal < *o.min_joint_goal) {
    log("joint goal " + fixed(metrics.joint_goal) + " is below the required " +
        fixed(*o.min_joint_goal));
    return kFailure;
  }
  return kOk;
}

int cmd_gen_toy(const GenToyOptions& o) {
  ToyCorpusSpec spec;
  spec.seed = o.seed;
  spec.n_dialogues = o.dialogues;
  spec.paraphrase_rate = o.paraphrase_rate;
  spec.dim = o.dim;
  spec.vector_seed = o.vector_seed;
  spec.asr = o.asr;
  spec.id_prefix = o.prefix;
  const ToyCorpus toy = generate_toy_corpus(spec);

  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);
  write_text_file(dir / "ontology.json", toy.ontology.to_json());
  write_text_file(dir / "corpus.json", corpus_to_json(toy.corpus));
  write_text_file(dir / "dictionary.json", toy.dictionary.to_json());
  if (o.random_vectors) {
    random_table(toy.vectors.tokens(), toy.vectors.dim(), o.vector_seed).save(dir / "vectors.txt");
  } else {
    toy.vectors.save(dir / "vectors.txt");
  }
  const CorpusStats stats = corpus_stats(toy.corpus);
  log("wrote " + std::to_string(stats.dialogues) + " dialogues (" +
      std::to_string(stats.turns) + " turns) to " + o.out_dir);
  return kOk;
}

int cmd_gradcheck(const GradcheckOptionsCli& o) {
  std::vector<Variant> variants;
  if (o.variant == "both") {
    variants = {Variant::kDnn, Variant::kCnn};
  } else {
    variants = {parse_variant(o.variant)};
  }
  GradCheckOptions options;
  options.seed = o.seed;
  options.samples_per_group = o.samples;
  double worst = 0.0;
  for (Variant v : variants) {
    const GradCheckReport report = gradient_check(v, options);
    std::cout << to_string(v) << '\n';
    for (const auto& g : report.groups) {
      char line[160];
      std::snprintf(line, sizeof line, "  %-18s %3zu checked  max rel. error %.3e\n",
                    g.name.c_str(), g.checked, g.max_rel_error);
      std::cout << line;
    }
    char line[96];
    std::snprintf(line, sizeof line, "  max rel. error %.3e\n", report.max_rel_error);
    std::cout << line;
    worst = std::max(worst, report.max_rel_error);
  }
  return worst < o.threshold ? kOk : kFailure;
}

int cmd_validate(const ValidateOptions& o) {
  require_path(o.paths.ontology, "--ontology");
  const Ontology ontology = Ontology::load(o.paths.ontology);
  std::size_t values = 0;
  for (const auto& s : ontology.informable()) values += s.values.size();
  std::cout << "ontology: " << ontology.informable().size() << " informable slots, " << values
            << " values, " << ontology.requestable().size() << " requestable slots\n";

  std::optional<Corpus> corpus;
  if (!o.paths.corpus.empty()) {
    corpus = load_corpus(o.paths.corpus, ontology);
    const CorpusStats s = corpus_stats(*corpus);
    std::cout << "corpus: " << s.dialogues << " dialogues, " << s.turns << " turns, "
              << s.labeled_turns << " labeled, " << s.asr_turns << " with ASR\n";
  }
  if (!o.paths.dictionary.empty()) {
    const auto dict = baseline::SemanticDictionary::load(o.paths.dictionary, ontology);
    std::cout << "dictionary: " << dict.phrase_count() << " rephrasings\n";
  }
  if (!o.paths.vectors.empty()) {
    const WordVectorTable table = WordVectorTable::load(o.paths.vectors);
    std::cout << "vectors: " << table.size() << " words, D=" << table.dim() << ", "
              << table.duplicate_count() << " duplicates\n";
    if (corpus) {
      std::vector<std::vector<std::string>> sentences;
      for (const auto& d : *corpus) {
        for (const auto& t : d.turns) sentences.push_back(tokenize(t.transcript));
      }
      const LookupStats oov = oov_report(table, sentences);
      std::cout << "corpus OOV rate: " << fixed(oov.oov_rate()) << " (" << oov.oov << " of "
                << oov.lookups << " tokens)\n";
    }
    std::size_t missing = 0;
    for (const auto& pair : candidate_pairs(ontology)) {
      for (const auto& tok : tokenize(pair.value)) missing += !table.contains(tok);
    }
    if (missing > 0) std::cout << "warning: " << missing << " ontology value words have no vector\n";
  }
  return kOk;
}

}  // namespace nbt::cli
