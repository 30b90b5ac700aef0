// Command-line entry point: synth / train / decode / eval / gradcheck /
// lambda-sweep. Exit codes: 0 success, 1 validation or usage error,
// 2 numerical failure, 3 I/O error.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lstmc/commands.hpp"
#include "lstmc/error.hpp"

namespace {

lstmc::FeatureMode parse_mode(const std::string& s) {
  if (s == "one_hot") return lstmc::FeatureMode::one_hot;
  if (s == "combined" || s == "one_hot_plus_pretrained")
    return lstmc::FeatureMode::one_hot_plus_pretrained;
  throw lstmc::ValidationError("unknown feature mode '" + s +
                               "' (expected one_hot or combined)");
}

void add_train_config_flags(CLI::App* cmd, lstmc::TrainConfig& cfg) {
  cmd->add_option("--lr", cfg.learning_rate, "learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", cfg.epochs, "training epochs")->check(CLI::NonNegativeNumber);
  cmd->add_option("--batch", cfg.batch_size, "mini-batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--reg", cfg.reg_weight, "L2 regularization weight")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--clip", cfg.grad_clip, "global gradient-norm clip (0 = off)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSTM caption decoder with a detection-gated copying head"};
  app.require_subcommand(1);

  lstmc::SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")->required();
  synth_cmd->add_option("--n-templates", synth.spec.n_templates, "caption templates");
  synth_cmd->add_option("--n-common", synth.spec.n_common, "common object count");
  synth_cmd->add_option("--n-novel", synth.spec.n_novel, "novel object count");
  synth_cmd->add_option("--n-train", synth.spec.n_examples, "training examples");
  synth_cmd->add_option("--n-test", synth.spec.n_test, "test examples");
  synth_cmd->add_option("--feature-dim", synth.spec.feature_dim, "image feature dimension");
  synth_cmd->add_option("--noise-std", synth.spec.noise_std, "feature noise stddev");
  synth_cmd->add_option("--delta-noise", synth.spec.delta_noise,
                        "multiplicative noise on the true object's detection score");
  synth_cmd->add_option("--background-delta", synth.spec.background_delta,
                        "ceiling for absent-object detection scores");
  synth_cmd->add_option("--seed", synth.spec.seed, "random seed");

  lstmc::TrainArgs train;
  std::string train_mode = "one_hot";
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--train", train.train_path, "training dataset (tsv)")->required();
  train_cmd->add_option("--vocab", train.vocab_path, "vocabulary file")->required();
  train_cmd->add_option("--out", train.out_checkpoint, "output checkpoint")->required();
  train_cmd->add_option("--trace", train.out_trace, "loss trace output (default <out>.loss.tsv)");
  train_cmd->add_option("--vectors", train.vectors_path, "pretrained word vectors");
  train_cmd->add_option("--feature-mode", train_mode, "one_hot | combined");
  train_cmd->add_option("--de", train.d_e, "LSTM input dimension")->check(CLI::PositiveNumber);
  train_cmd->add_option("--dh", train.d_h, "LSTM output dimension")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lambda", train.lambda, "generative/copy tradeoff")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--mask-tau", train.mask_tau,
                        "detection-floor mask threshold (negative = off)");
  train_cmd->add_flag("--no-copy", train.no_copy, "ablation: empty W_c, drop detections");
  train_cmd->add_option("--text-corpus", train.text_corpus_path,
                        "image-free sentence corpus (one caption per line)");
  train_cmd->add_option("--text-weight", train.cfg.text_only_weight,
                        "weight on image-free loss gradients")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--val", train.val_path, "validation dataset for early stopping");
  train_cmd->add_option("--patience", train.cfg.patience,
                        "early-stopping patience in epochs (0 = off)");
  add_train_config_flags(train_cmd, train.cfg);

  lstmc::DecodeArgs decode;
  CLI::App* decode_cmd = app.add_subcommand("decode", "greedy-decode a dataset");
  decode_cmd->add_option("--model", decode.model_path, "checkpoint")->required();
  decode_cmd->add_option("--input", decode.input_path, "input dataset (tsv)")->required();
  decode_cmd->add_option("--out", decode.out_path, "caption output file")->required();
  decode_cmd->add_option("--max-len", decode.max_len, "maximum caption length")
      ->check(CLI::PositiveNumber);
  decode_cmd->add_option("--mask-tau", decode.mask_tau,
                         "detection-floor mask threshold (negative = off)");
  decode_cmd->add_flag("--drop-unknown-detections", decode.drop_unknown_detections,
                       "ignore detection scores for tokens outside W_c");

  lstmc::EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score generated captions");
  eval_cmd->add_option("--captions", eval.captions_path, "generated captions")->required();
  eval_cmd->add_option("--refs", eval.refs_path, "reference dataset (tsv)")->required();
  eval_cmd->add_option("--novel", eval.novel_path, "novel object list")->required();
  eval_cmd->add_option("--out", eval.out_path, "key=value report output")->required();

  lstmc::GradcheckArgs gradcheck;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
  gradcheck_cmd->add_option("--dv", gradcheck.d_v, "image feature dimension");
  gradcheck_cmd->add_option("--de", gradcheck.d_e, "LSTM input dimension");
  gradcheck_cmd->add_option("--dh", gradcheck.d_h, "LSTM output dimension");
  gradcheck_cmd->add_option("--wg", gradcheck.wg, "|W_g| including sentinels");
  gradcheck_cmd->add_option("--wc", gradcheck.wc, "|W_c|");
  gradcheck_cmd->add_option("--overlap", gradcheck.overlap, "overlap size");
  gradcheck_cmd->add_option("--seed", gradcheck.seed, "random seed");
  gradcheck_cmd->add_option("--lambda", gradcheck.lambda, "tradeoff parameter")
      ->check(CLI::Range(0.0, 1.0));
  gradcheck_cmd->add_option("--mask-tau", gradcheck.mask_tau,
                            "detection-floor mask threshold (negative = off)");
  gradcheck_cmd->add_option("--eps", gradcheck.epsilon, "finite-difference step")
      ->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--tol", gradcheck.tolerance, "max relative error tolerance")
      ->check(CLI::PositiveNumber);
  gradcheck_cmd->add_option("--manifest", gradcheck.manifest_path, "manifest output path");

  lstmc::SweepArgs sweep;
  std::string sweep_mode = "one_hot";
  std::string sweep_lambdas = "0,0.2,0.5,0.8,0.95";
  std::string sweep_seeds = "1,2,3";
  CLI::App* sweep_cmd =
      app.add_subcommand("lambda-sweep", "train/decode/eval across lambda values");
  sweep_cmd->add_option("--train", sweep.train_path, "training dataset")->required();
  sweep_cmd->add_option("--vocab", sweep.vocab_path, "vocabulary file")->required();
  sweep_cmd->add_option("--test", sweep.test_path, "test dataset")->required();
  sweep_cmd->add_option("--novel", sweep.novel_path, "novel object list")->required();
  sweep_cmd->add_option("--out", sweep.out_path, "result table output")->required();
  sweep_cmd->add_option("--vectors", sweep.vectors_path, "pretrained word vectors");
  sweep_cmd->add_option("--feature-mode", sweep_mode, "one_hot | combined");
  sweep_cmd->add_option("--lambdas", sweep_lambdas, "comma-separated lambda values");
  sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated seeds");
  sweep_cmd->add_option("--de", sweep.d_e, "LSTM input dimension");
  sweep_cmd->add_option("--dh", sweep.d_h, "LSTM output dimension");
  sweep_cmd->add_option("--max-len", sweep.max_len, "maximum caption length");
  sweep_cmd->add_option("--mask-tau", sweep.mask_tau,
                        "detection-floor mask threshold (negative = off)");
  add_train_config_flags(sweep_cmd, sweep.cfg);
  sweep_cmd->add_option("--text-weight", sweep.cfg.text_only_weight,
                        "weight on image-free loss gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth_cmd) {
      lstmc::run_synth(synth);
    } else if (*train_cmd) {
      train.mode = parse_mode(train_mode);
      lstmc::run_train(train);
    } else if (*decode_cmd) {
      lstmc::run_decode(decode);
    } else if (*eval_cmd) {
      lstmc::run_eval(eval);
    } else if (*gradcheck_cmd) {
      const lstmc::GradCheckReport report = lstmc::run_gradcheck(gradcheck);
      return report.pass ? 0 : 2;
    } else if (*sweep_cmd) {
      sweep.mode = parse_mode(sweep_mode);
      for (const std::string& part : CLI::detail::split(sweep_lambdas, ','))
        sweep.lambdas.push_back(std::stod(part));
      for (const std::string& part : CLI::detail::split(sweep_seeds, ','))
        sweep.seeds.push_back(std::stoull(part));
      lstmc::run_lambda_sweep(sweep);
    }
  } catch (const lstmc::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const lstmc::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const lstmc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
