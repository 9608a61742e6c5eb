#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "nbt/errors.hpp"

namespace {

using namespace nbt::cli;

void add_paths(CLI::App* cmd, DataPaths& p, bool models) {
  cmd->add_option("--ontology", p.ontology, "Ontology JSON")->envname("NBT_ONTOLOGY");
  cmd->add_option("--corpus", p.corpus, "Corpus JSON")->envname("NBT_CORPUS");
  cmd->add_option("--vectors", p.vectors, "Word vector text file")->envname("NBT_VECTORS");
  cmd->add_option("--dictionary", p.dictionary, "Semantic dictionary JSON (baseline)")
      ->envname("NBT_DICTIONARY");
  if (models) {
    cmd->add_option("--model-dir", p.model_dir, "Directory of per-slot model files")
        ->envname("NBT_MODEL_DIR");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural belief tracker: training, tracking and evaluation"};
  app.set_config("--config", "", "TOML/INI file of option values (flags take precedence)");
  app.require_subcommand(1);

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Train one model per slot");
  add_paths(c_train, train.paths, true);
  c_train->add_option("--variant", train.variant, "cnn, dnn or baseline")
      ->check(CLI::IsMember({"cnn", "dnn", "baseline"}))
      ->envname("NBT_VARIANT")
      ->capture_default_str();
  c_train->add_option("--validation-corpus", train.validation_corpus,
                      "Held-out corpus for early stopping");
  c_train->add_option("--seed", train.seed, "Seed for all randomness (required)")
      ->envname("NBT_SEED");
  c_train->add_option("--lr", train.lr, "Adam learning rate")->capture_default_str();
  c_train->add_option("--batch", train.batch, "Minibatch size")->capture_default_str();
  c_train->add_option("--pos-frac", train.pos_frac, "Fraction of positives per batch")
      ->capture_default_str();
  c_train->add_option("--dropout", train.dropout, "Dropout rate")->capture_default_str();
  c_train->add_option("--epochs", train.epochs, "Maximum epochs")->capture_default_str();
  c_train->add_option("--patience", train.patience, "Early-stopping patience")
      ->capture_default_str();
  c_train->add_option("--filters", train.filters, "CNN filters per n-gram size")
      ->capture_default_str();
  c_train->add_option("--hidden", train.hidden, "Decision-layer width")->capture_default_str();
  c_train->add_option("--l2", train.l2, "Baseline L2 penalty")->capture_default_str();
  c_train->add_flag("--squashed-logits", train.squashed_logits,
                    "Apply a sigmoid to the output layer before the softmax");
  c_train->add_flag("--tag-slot-names", train.tag_slot_names,
                    "Baseline: also delexicalise informable slot names");
  c_train->add_option("--report", train.report, "Training report path");
  c_train->add_option("--jobs", train.jobs, "Slots trained in parallel")
      ->envname("NBT_JOBS")
      ->capture_default_str();

  TrackOptionsCli track;
  auto* c_track = app.add_subcommand("track", "Run the belief tracker over a corpus");
  add_paths(c_track, track.paths, true);
  c_track->add_option("--lambda", track.lambda, "Turn-level weight of the belief update")
      ->check(CLI::Range(0.0, 1.0))
      ->envname("NBT_LAMBDA")
      ->capture_default_str();
  c_track->add_flag("--use-asr", track.use_asr, "Track ASR N-best lists instead of transcripts");
  c_track->add_flag("--renormalize-asr", track.renormalize_asr,
                    "Rescale ASR posteriors to sum to one");
  c_track->add_option("--out", track.out, "Output JSON-lines file (default stdout)");
  c_track->add_option("--jobs", track.jobs, "Dialogues tracked in parallel")
      ->envname("NBT_JOBS")
      ->capture_default_str();

  EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval", "Score tracker output against gold labels");
  c_eval->add_option("--ontology", eval.ontology, "Ontology JSON")->envname("NBT_ONTOLOGY");
  c_eval->add_option("--corpus", eval.corpus, "Gold corpus JSON")->envname("NBT_CORPUS");
  c_eval->add_option("--outputs", eval.outputs, "Tracker output to score");
  c_eval->add_option("--compare", eval.compare, "Second tracker output for a significance test");
  c_eval->add_option("--json-out", eval.json_out, "Metrics JSON path");
  c_eval->add_option("--iterations", eval.iterations, "Bootstrap resamples")
      ->capture_default_str();
  c_eval->add_option("--seed", eval.seed, "Bootstrap seed")->envname("NBT_SEED");
  c_eval->add_option("--min-joint-goal", eval.min_joint_goal,
                     "Exit with status 1 below this joint goal accuracy");

  GenToyOptions toy;
  auto* c_toy = app.add_subcommand("gen-toy", "Write a synthetic corpus and vector table");
  c_toy->add_option("--seed", toy.seed, "Corpus seed")->envname("NBT_SEED")->capture_default_str();
  c_toy->add_option("--dialogues", toy.dialogues, "Number of dialogues")->capture_default_str();
  c_toy->add_option("--paraphrase-rate", toy.paraphrase_rate, "Synonym probability per mention")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c_toy->add_option("--dim", toy.dim, "Vector dimension")->capture_default_str();
  c_toy->add_option("--vector-seed", toy.vector_seed, "Seed of the vector table")
      ->capture_default_str();
  c_toy->add_flag("--asr", toy.asr, "Add simulated ASR N-best lists");
  c_toy->add_flag("--random-vectors", toy.random_vectors,
                  "Write Xavier-random vectors instead of the constructed table");
  c_toy->add_option("--prefix", toy.prefix, "Dialogue id prefix")->capture_default_str();
  c_toy->add_option("--out-dir", toy.out_dir, "Output directory")->capture_default_str();

  GradcheckOptionsCli grad;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  c_grad->add_option("--variant", grad.variant, "dnn, cnn or both")
      ->check(CLI::IsMember({"dnn", "cnn", "both"}))
      ->capture_default_str();
  c_grad->add_option("--threshold", grad.threshold, "Maximum tolerated relative error")
      ->capture_default_str();
  c_grad->add_option("--seed", grad.seed, "Initialization seed")->capture_default_str();
  c_grad->add_option("--samples", grad.samples, "Entries checked per parameter group")
      ->capture_default_str();

  ValidateOptions validate;
  auto* c_validate = app.add_subcommand("validate", "Check input files and report statistics");
  add_paths(c_validate, validate.paths, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kFailure;
  }

  try {
    if (c_train->parsed()) return cmd_train(train);
    if (c_track->parsed()) return cmd_track(track);
    if (c_eval->parsed()) return cmd_eval(eval);
    if (c_toy->parsed()) return cmd_gen_toy(toy);
    if (c_grad->parsed()) return cmd_gradcheck(grad);
    if (c_validate->parsed()) return cmd_validate(validate);
  } catch (const nbt::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const nbt::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const nbt::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const nbt::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const nbt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
