#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lstmc/data_io.hpp"
#include "lstmc/metrics.hpp"
#include "lstmc/train.hpp"

namespace lstmc {

// Command bodies behind the CLI; each validates its inputs, does the work,
// and writes a run manifest (resolved configuration plus input checksums)
// next to its primary output.

struct SynthArgs {
  SynthSpec spec;
  std::string out_dir;
};
void run_synth(const SynthArgs& args);

struct TrainArgs {
  std::string train_path;
  std::string vocab_path;
  std::string vectors_path;      // required for combined mode
  std::string text_corpus_path;  // optional, one caption per line
  std::string val_path;          // optional, enables early stopping with patience
  std::string out_checkpoint;
  std::string out_trace;         // default: <out_checkpoint>.loss.tsv
  FeatureMode mode = FeatureMode::one_hot;
  std::size_t d_e = 24;
  std::size_t d_h = 24;
  double lambda = 0.2;
  double mask_tau = -1.0;  // < 0 keeps the detection-floor mask off
  bool no_copy = false;    // ablation: empty W_c, detections dropped
  TrainConfig cfg;
};
void run_train(const TrainArgs& args);

struct DecodeArgs {
  std::string model_path;
  std::string input_path;
  std::string out_path;
  std::size_t max_len = 20;
  double mask_tau = -1.0;
  bool drop_unknown_detections = false;  // implied when the model has no W_c
};
void run_decode(const DecodeArgs& args);

struct EvalArgs {
  std::string captions_path;
  std::string refs_path;
  std::string novel_path;
  std::string out_path;  // machine-readable key=value report
};
MetricsReport run_eval(const EvalArgs& args);

struct GradcheckArgs {
  std::size_t d_v = 6;
  std::size_t d_e = 8;
  std::size_t d_h = 8;
  std::size_t wg = 10;  // |W_g| including sentinels
  std::size_t wc = 4;
  std::size_t overlap = 2;
  std::uint64_t seed = 1;
  double lambda = 0.2;
  double mask_tau = -1.0;
  double epsilon = 4e-3;
  double tolerance = 1e-5;
  std::string manifest_path = "gradcheck.manifest";
};

struct GradcheckFixture {
  Vocabulary vocab;
  WordFeatures feats;
  ModelParams params;
  std::vector<TrainingExample> batch;
};
// Small random model plus a batch of 3 sequences (length <= 6 including
// sentinels). Tokens that occur as targets get detection scores >= 0.5 so
// the fixture stays feasible under a detection-floor mask.
GradcheckFixture make_gradcheck_fixture(const GradcheckArgs& args);

GradCheckReport run_gradcheck(const GradcheckArgs& args);

struct SweepArgs {
  std::string train_path;
  std::string vocab_path;
  std::string vectors_path;
  std::string test_path;
  std::string novel_path;
  std::string out_path;
  FeatureMode mode = FeatureMode::one_hot;
  std::vector<double> lambdas;
  std::vector<std::uint64_t> seeds;
  std::size_t d_e = 24;
  std::size_t d_h = 24;
  std::size_t max_len = 20;
  double mask_tau = -1.0;
  TrainConfig cfg;
};

struct SweepRow {
  double lambda = 0.0;
  double median_f1 = 0.0;
  double median_novel = 0.0;
  double median_final_loss = 0.0;
};
std::vector<SweepRow> run_lambda_sweep(const SweepArgs& args);

// FNV-1a over a file's bytes; used for manifest input checksums.
std::uint64_t file_checksum(const std::string& path);

void write_manifest(const std::string& path, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& config,
                    const std::vector<std::string>& input_files);

double median(std::vector<double> values);

}  // namespace lstmc
