#include "lstmc/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "lstmc/decode.hpp"
#include "lstmc/error.hpp"
#include "lstmc/rng.hpp"

namespace lstmc {

namespace fs = std::filesystem;

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for checksum: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  return hash;
}

void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& config,
                    const std::vector<std::string>& input_files) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "command=" << command << '\n';
  auto sorted = config;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& [key, value] : sorted) out << key << '=' << value << '\n';
  for (const std::string& file : input_files) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(file_checksum(file)));
    out << "input." << fs::path(file).filename().string() << ".fnv1a=" << hex << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void run_synth(const SynthArgs& args) {
  if (args.out_dir.empty()) throw ValidationError("synth: --out-dir is required");
  fs::create_directories(args.out_dir);
  const SynthResult result = generate_synthetic(args.spec);
  const fs::path dir(args.out_dir);
  write_records((dir / "train.tsv").string(), result.train_records);
  write_records((dir / "test.tsv").string(), result.test_records);
  save_vocab((dir / "vocab.tsv").string(), result.vocab);
  save_token_list((dir / "novel.txt").string(), result.novel);
  save_pretrained_vectors((dir / "vectors.txt").string(), result.vectors);

  const SynthSpec& s = args.spec;
  write_manifest((dir / "synth.manifest").string(), "synth",
                 {{"n_templates", std::to_string(s.n_templates)},
                  {"n_common", std::to_string(s.n_common)},
                  {"n_novel", std::to_string(s.n_novel)},
                  {"n_examples", std::to_string(s.n_examples)},
                  {"n_test", std::to_string(s.n_test)},
                  {"feature_dim", std::to_string(s.feature_dim)},
                  {"noise_std", format_double(s.noise_std)},
                  {"delta_noise", format_double(s.delta_noise)},
                  {"background_delta", format_double(s.background_delta)},
                  {"seed", std::to_string(s.seed)}},
                 {});
  std::cout << "synth: wrote " << result.train_records.size() << " train / "
            << result.test_records.size() << " test records, |vocab| = "
            << result.vocab.size() << ", novel objects = " << result.novel.size() << "\n";
}

namespace {

Mask mask_from_tau(double tau) {
  Mask mask;
  if (tau >= 0.0) {
    mask.enabled = true;
    mask.tau = tau;
  }
  return mask;
}

std::vector<TrainingExample> load_text_corpus(const std::string& path, const Vocabulary& vocab,
                                              std::size_t feature_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::vector<TrainingExample> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    TrainingExample ex;
    ex.id = "text-" + std::to_string(line_no);
    ex.image_feature = Vector(feature_dim, 0.0);  // unused in image-free mode
    ex.tokens.push_back(vocab.start_id());
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) {
      const TokenId id = vocab.id_of(tok);
      if (id < 0)
        throw ValidationError(path + ":" + std::to_string(line_no) + ": token '" + tok +
                              "' outside W_g ∪ W_c");
      ex.tokens.push_back(id);
    }
    ex.tokens.push_back(vocab.end_id());
    if (ex.tokens.size() < 3)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": empty caption");
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace

void run_train(const TrainArgs& args) {
  if (args.train_path.empty() || args.vocab_path.empty() || args.out_checkpoint.empty())
    throw ValidationError("train: --train, --vocab and --out are required");
  if (args.mode == FeatureMode::one_hot_plus_pretrained && args.vectors_path.empty())
    throw ValidationError("train: combined feature mode requires --vectors");

  Vocabulary vocab = load_vocab(args.vocab_path);
  if (args.no_copy) vocab = strip_copy_vocab(vocab);

  LoadOptions load_opts;
  if (args.no_copy) load_opts.unknown_detections = UnknownDetectionPolicy::drop;
  const Dataset dataset = load_dataset(args.train_path, vocab, load_opts);

  WordFeatures feats = WordFeatures::one_hot(vocab);
  if (args.mode == FeatureMode::one_hot_plus_pretrained) {
    std::size_t ignored = 0;
    feats = WordFeatures::combined(vocab, load_pretrained_vectors(args.vectors_path), &ignored);
    if (ignored > 0)
      std::cout << "train: warning: ignored " << ignored
                << " pretrained vectors for tokens outside the vocabulary\n";
  }

  Dims dims{dataset.feature_dim, feats.dim(), args.d_e, args.d_h};
  TrainConfig cfg = args.cfg;
  cfg.mask = mask_from_tau(args.mask_tau);

  ModelParams params = init_params(dims, args.lambda, cfg.seed);

  std::vector<TrainingExample> text_corpus;
  if (!args.text_corpus_path.empty())
    text_corpus = load_text_corpus(args.text_corpus_path, vocab, dims.d_v);
  std::vector<TrainingExample> validation;
  if (!args.val_path.empty())
    validation = load_dataset(args.val_path, vocab, load_opts).examples;

  const TrainResult result =
      sgd_train(params, dataset.examples, cfg, feats, vocab,
                text_corpus.empty() ? nullptr : &text_corpus,
                validation.empty() ? nullptr : &validation);

  save_checkpoint(args.out_checkpoint, result.params, vocab, feats);
  const std::string trace_path =
      args.out_trace.empty() ? args.out_checkpoint + ".loss.tsv" : args.out_trace;
  save_loss_trace(trace_path, result.epoch_loss);

  std::vector<std::string> inputs = {args.train_path, args.vocab_path};
  if (!args.vectors_path.empty()) inputs.push_back(args.vectors_path);
  if (!args.text_corpus_path.empty()) inputs.push_back(args.text_corpus_path);
  if (!args.val_path.empty()) inputs.push_back(args.val_path);
  write_manifest(args.out_checkpoint + ".manifest", "train",
                 {{"train", args.train_path},
                  {"vocab", args.vocab_path},
                  {"vectors", args.vectors_path},
                  {"feature_mode", args.mode == FeatureMode::one_hot ? "one_hot"
                                                                     : "one_hot_plus_pretrained"},
                  {"d_e", std::to_string(args.d_e)},
                  {"d_h", std::to_string(args.d_h)},
                  {"lambda", format_double(args.lambda)},
                  {"mask_tau", format_double(args.mask_tau)},
                  {"no_copy", args.no_copy ? "1" : "0"},
                  {"learning_rate", format_double(cfg.learning_rate)},
                  {"epochs", std::to_string(cfg.epochs)},
                  {"batch_size", std::to_string(cfg.batch_size)},
                  {"reg_weight", format_double(cfg.reg_weight)},
                  {"seed", std::to_string(cfg.seed)},
                  {"text_only_weight", format_double(cfg.text_only_weight)},
                  {"grad_clip", format_double(cfg.grad_clip)},
                  {"patience", std::to_string(cfg.patience)}},
                 inputs);
  std::cout << "train: " << result.epochs_run << " epochs, final mean loss = "
            << format_double(result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back())
            << ", checkpoint -> " << args.out_checkpoint << "\n";
}

void run_decode(const DecodeArgs& args) {
  if (args.model_path.empty() || args.input_path.empty() || args.out_path.empty())
    throw ValidationError("decode: --model, --input and --out are required");
  const Checkpoint ck = load_checkpoint(args.model_path);

  LoadOptions load_opts;
  if (args.drop_unknown_detections || ck.vocab.c_ids().empty())
    load_opts.unknown_detections = UnknownDetectionPolicy::drop;
  const std::vector<DecodeInput> inputs =
      make_decode_inputs(read_records(args.input_path), ck.vocab, load_opts);

  DecodeOptions opts;
  opts.max_len = args.max_len;
  opts.mask = mask_from_tau(args.mask_tau);
  const std::vector<DecodeResult> results = decode_corpus(ck.params, ck.feats, ck.vocab,
                                                          inputs, opts);

  std::vector<CaptionRecord> captions;
  captions.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    CaptionRecord rec;
    rec.id = inputs[i].id;
    rec.tokens = results[i].tokens;
    if (results[i].terminated == DecodeResult::Termination::end_token) rec.tokens.pop_back();
    captions.push_back(std::move(rec));
  }
  save_captions(args.out_path, captions);
  write_manifest(args.out_path + ".manifest", "decode",
                 {{"model", args.model_path},
                  {"input", args.input_path},
                  {"max_len", std::to_string(args.max_len)},
                  {"mask_tau", format_double(args.mask_tau)}},
                 {args.model_path, args.input_path});
  std::cout << "decode: wrote " << captions.size() << " captions -> " << args.out_path << "\n";
}

MetricsReport run_eval(const EvalArgs& args) {
  if (args.captions_path.empty() || args.refs_path.empty() || args.novel_path.empty() ||
      args.out_path.empty())
    throw ValidationError("eval: --captions, --refs, --novel and --out are required");
  const std::vector<CaptionRecord> generated = load_captions(args.captions_path);
  const std::vector<RawRecord> refs = read_records(args.refs_path);
  const std::vector<std::string> novel_list = load_token_list(args.novel_path);
  const std::set<std::string> novel_set(novel_list.begin(), novel_list.end());
  if (novel_set.empty()) throw ValidationError("eval: novel token list is empty");

  const EvalCorpus corpus = build_eval_corpus(generated, refs, novel_set);
  const MetricsReport report = evaluate(corpus, novel_set);

  std::ofstream out(args.out_path);
  if (!out) throw IoError("cannot open for writing: " + args.out_path);
  out << format_report_keyvalues(report);
  if (!out) throw IoError("write failed: " + args.out_path);
  std::cout << format_report_table(report);

  write_manifest(args.out_path + ".manifest", "eval",
                 {{"captions", args.captions_path},
                  {"refs", args.refs_path},
                  {"novel", args.novel_path}},
                 {args.captions_path, args.refs_path, args.novel_path});
  return report;
}

GradcheckFixture make_gradcheck_fixture(const GradcheckArgs& args) {
  if (args.wg < 3) throw ValidationError("gradcheck: |W_g| must be at least 3");
  if (args.overlap > args.wc || args.overlap > args.wg - 2)
    throw ValidationError("gradcheck: overlap larger than W_g or W_c allows");
  const std::size_t n_g_only = args.wg - 2 - args.overlap;  // sentinels live in W_g
  const std::size_t n_c_only = args.wc - args.overlap;

  std::vector<std::string> paired, detect;
  for (std::size_t i = 0; i < n_g_only; ++i) paired.push_back("p" + std::to_string(i));
  for (std::size_t i = 0; i < args.overlap; ++i) paired.push_back("o" + std::to_string(i));
  for (std::size_t i = 0; i < args.overlap; ++i) detect.push_back("o" + std::to_string(i));
  for (std::size_t i = 0; i < n_c_only; ++i) detect.push_back("c" + std::to_string(i));

  GradcheckFixture fx;
  fx.vocab = Vocabulary::build(paired, detect);
  fx.feats = WordFeatures::one_hot(fx.vocab);

  const Dims dims{args.d_v, fx.feats.dim(), args.d_e, args.d_h};
  fx.params = init_params(dims, args.lambda, args.seed);

  Rng rng(Rng::derive(args.seed, 3));
  std::vector<TokenId> candidates;
  for (std::size_t id = 0; id < fx.vocab.size(); ++id) {
    const TokenId t = static_cast<TokenId>(id);
    if (t == fx.vocab.start_id() || t == fx.vocab.end_id()) continue;
    candidates.push_back(t);
  }
  for (int e = 0; e < 3; ++e) {
    TrainingExample ex;
    ex.id = "fixture-" + std::to_string(e);
    ex.image_feature.resize(args.d_v);
    for (double& x : ex.image_feature) x = rng.normal();
    const std::size_t n_words = 2 + static_cast<std::size_t>(rng.below(3));  // 2..4
    ex.tokens.push_back(fx.vocab.start_id());
    for (std::size_t w = 0; w < n_words; ++w)
      ex.tokens.push_back(candidates[static_cast<std::size_t>(rng.below(candidates.size()))]);
    ex.tokens.push_back(fx.vocab.end_id());

    ex.detections = DetectionScores(fx.vocab);
    std::set<TokenId> targets(ex.tokens.begin() + 1, ex.tokens.end());
    for (TokenId c : fx.vocab.c_ids()) {
      const double score = targets.count(c) ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.3);
      ex.detections.set(fx.vocab, c, score);
    }
    fx.batch.push_back(std::move(ex));
  }
  return fx;
}

GradCheckReport run_gradcheck(const GradcheckArgs& args) {
  const GradcheckFixture fx = make_gradcheck_fixture(args);
  ObjectiveConfig cfg;
  cfg.reg_weight = 1e-4;
  cfg.mask = mask_from_tau(args.mask_tau);
  const GradCheckReport report = grad_check(fx.params, fx.feats, fx.vocab,
                                            std::span<const TrainingExample>(fx.batch), cfg,
                                            args.epsilon, args.tolerance);
  for (const auto& b : report.blocks) {
    std::cout << "block " << b.name << ": max rel err = " << format_double(b.max_rel_err)
              << " (analytic " << format_double(b.analytic) << ", numeric "
              << format_double(b.numeric) << ")\n";
  }
  std::cout << "gradcheck " << (report.pass ? "PASS" : "FAIL") << ": max rel err = "
            << format_double(report.max_rel_err) << " vs tolerance "
            << format_double(report.tolerance) << "\n";
  write_manifest(args.manifest_path, "gradcheck",
                 {{"d_v", std::to_string(args.d_v)},
                  {"d_e", std::to_string(args.d_e)},
                  {"d_h", std::to_string(args.d_h)},
                  {"wg", std::to_string(args.wg)},
                  {"wc", std::to_string(args.wc)},
                  {"overlap", std::to_string(args.overlap)},
                  {"seed", std::to_string(args.seed)},
                  {"lambda", format_double(args.lambda)},
                  {"mask_tau", format_double(args.mask_tau)},
                  {"epsilon", format_double(args.epsilon)},
                  {"tolerance", format_double(args.tolerance)}},
                 {});
  return report;
}

std::vector<SweepRow> run_lambda_sweep(const SweepArgs& args) {
  if (args.train_path.empty() || args.vocab_path.empty() || args.test_path.empty() ||
      args.novel_path.empty() || args.out_path.empty())
    throw ValidationError("lambda-sweep: --train, --vocab, --test, --novel and --out are required");
  if (args.lambdas.empty()) throw ValidationError("lambda-sweep: no lambda values given");
  if (args.seeds.empty()) throw ValidationError("lambda-sweep: no seeds given");
  if (args.mode == FeatureMode::one_hot_plus_pretrained && args.vectors_path.empty())
    throw ValidationError("lambda-sweep: combined feature mode requires --vectors");

  const Vocabulary vocab = load_vocab(args.vocab_path);
  const Dataset train_set = load_dataset(args.train_path, vocab);
  const std::vector<RawRecord> test_records = read_records(args.test_path);
  const std::vector<DecodeInput> test_inputs = make_decode_inputs(test_records, vocab);
  const std::vector<std::string> novel_list = load_token_list(args.novel_path);
  const std::set<std::string> novel_set(novel_list.begin(), novel_list.end());

  WordFeatures feats = WordFeatures::one_hot(vocab);
  if (args.mode == FeatureMode::one_hot_plus_pretrained)
    feats = WordFeatures::combined(vocab, load_pretrained_vectors(args.vectors_path));

  const Dims dims{train_set.feature_dim, feats.dim(), args.d_e, args.d_h};
  TrainConfig cfg = args.cfg;
  cfg.mask = mask_from_tau(args.mask_tau);
  DecodeOptions dopts;
  dopts.max_len = args.max_len;
  dopts.mask = cfg.mask;

  std::vector<SweepRow> rows;
  for (const double lambda : args.lambdas) {
    std::vector<double> f1s, novels, losses;
    for (const std::uint64_t seed : args.seeds) {
      TrainConfig run_cfg = cfg;
      run_cfg.seed = seed;
      const ModelParams init = init_params(dims, lambda, seed);
      const TrainResult trained = sgd_train(init, train_set.examples, run_cfg, feats, vocab);
      const std::vector<DecodeResult> decoded =
          decode_corpus(trained.params, feats, vocab, test_inputs, dopts);
      std::vector<CaptionRecord> captions;
      for (std::size_t i = 0; i < decoded.size(); ++i) {
        CaptionRecord rec;
        rec.id = test_inputs[i].id;
        rec.tokens = decoded[i].tokens;
        if (decoded[i].terminated == DecodeResult::Termination::end_token) rec.tokens.pop_back();
        captions.push_back(std::move(rec));
      }
      const EvalCorpus corpus = build_eval_corpus(captions, test_records, novel_set);
      const MetricsReport report = evaluate(corpus, novel_set);
      f1s.push_back(report.average_f1);
      novels.push_back(report.novel_score);
      losses.push_back(trained.epoch_loss.empty() ? 0.0 : trained.epoch_loss.back());
      std::cout << "lambda " << format_double(lambda) << " seed " << seed << ": f1 = "
                << format_double(report.average_f1) << ", novel = "
                << format_double(report.novel_score) << ", final loss = "
                << format_double(losses.back()) << "\n";
    }
    rows.push_back({lambda, median(f1s), median(novels), median(losses)});
  }

  std::ofstream out(args.out_path);
  if (!out) throw IoError("cannot open for writing: " + args.out_path);
  out << "lambda\tf1_median\tnovel_median\tfinal_loss_median\n";
  for (const SweepRow& r : rows)
    out << format_double(r.lambda) << '\t' << format_double(r.median_f1) << '\t'
        << format_double(r.median_novel) << '\t' << format_double(r.median_final_loss) << '\n';
  if (!out) throw IoError("write failed: " + args.out_path);

  std::vector<std::string> inputs = {args.train_path, args.vocab_path, args.test_path,
                                     args.novel_path};
  if (!args.vectors_path.empty()) inputs.push_back(args.vectors_path);
  std::string lambda_str, seed_str;
  for (double l : args.lambdas) lambda_str += (lambda_str.empty() ? "" : ",") + format_double(l);
  for (std::uint64_t s : args.seeds)
    seed_str += (seed_str.empty() ? "" : ",") + std::to_string(s);
  write_manifest(args.out_path + ".manifest", "lambda-sweep",
                 {{"lambdas", lambda_str},
                  {"seeds", seed_str},
                  {"epochs", std::to_string(cfg.epochs)},
                  {"learning_rate", format_double(cfg.learning_rate)},
                  {"batch_size", std::to_string(cfg.batch_size)},
                  {"reg_weight", format_double(cfg.reg_weight)},
                  {"d_e", std::to_string(args.d_e)},
                  {"d_h", std::to_string(args.d_h)}},
                 inputs);
  return rows;
}

}  // namespace lstmc
