#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "lstmc/decode.hpp"
#include "lstmc/metrics.hpp"
#include "lstmc/model.hpp"
#include "lstmc/train.hpp"
#include "lstmc/vocab.hpp"

namespace lstmc {

// One dataset line: `id<TAB>f1,f2,...<TAB>tok1 tok2 ...<TAB>obj:score;...`
// The caption field is empty for unlabeled decode inputs.
struct RawRecord {
  std::string id;
  Vector features;
  std::vector<std::string> caption;
  std::vector<std::pair<std::string, double>> detections;
};

std::vector<RawRecord> read_records(const std::string& path);
void write_records(const std::string& path, const std::vector<RawRecord>& records);

struct Dataset {
  std::vector<TrainingExample> examples;
  std::size_t feature_dim = 0;
};

// A detection score naming a non-W_c token is an error by default; the drop
// policy exists for the no-copy ablation where W_c is emptied.
enum class UnknownDetectionPolicy { error, drop };

struct LoadOptions {
  UnknownDetectionPolicy unknown_detections = UnknownDetectionPolicy::error;
};

Dataset make_training_dataset(const std::vector<RawRecord>& records, const Vocabulary& vocab,
                              const LoadOptions& opts = {});
std::vector<DecodeInput> make_decode_inputs(const std::vector<RawRecord>& records,
                                            const Vocabulary& vocab,
                                            const LoadOptions& opts = {});
Dataset load_dataset(const std::string& path, const Vocabulary& vocab,
                     const LoadOptions& opts = {});

// Vocab file: `token<TAB>g|c|gc` per line; sentinels implicit.
void save_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab(const std::string& path);

// Rebuilds the vocabulary with W_c emptied (ablation): c-only tokens are
// dropped, overlap tokens become g-only.
Vocabulary strip_copy_vocab(const Vocabulary& vocab);

// Pretrained vectors: `token v1 v2 ... vD` per line.
PretrainedVectors load_pretrained_vectors(const std::string& path);
void save_pretrained_vectors(const std::string& path, const PretrainedVectors& vecs);

std::vector<std::string> load_token_list(const std::string& path);
void save_token_list(const std::string& path, const std::vector<std::string>& tokens);

// Versioned checkpoint: text header (magic, dims, lambda slot, feature mode,
// inline vocabulary) followed by little-endian binary matrices with shape
// headers. Round-trips bit-exactly.
struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
  WordFeatures feats;
};
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& vocab, const WordFeatures& feats);
Checkpoint load_checkpoint(const std::string& path);

void save_loss_trace(const std::string& path, const std::vector<double>& epoch_loss);

struct CaptionRecord {
  std::string id;
  std::vector<std::string> tokens;
};
void save_captions(const std::string& path, const std::vector<CaptionRecord>& captions);
std::vector<CaptionRecord> load_captions(const std::string& path);

// Joins generated captions with reference records; ground-truth labels are
// the novel tokens present in an image's reference caption.
EvalCorpus build_eval_corpus(const std::vector<CaptionRecord>& generated,
                             const std::vector<RawRecord>& refs,
                             const std::set<std::string>& novel_set);

// Desk-scale stand-in for the held-out corpus construction: templated
// captions with one object slot, image features that are noisy object
// prototypes plus a template-context vector, and detection scores near 1 for
// the pictured object. Novel objects never occur in training captions but
// keep prototypes and detections in the test split.
struct SynthSpec {
  int n_templates = 6;
  int n_common = 8;
  int n_novel = 4;
  int n_examples = 400;  // training split size
  int n_test = 100;
  int feature_dim = 16;
  double noise_std = 0.1;
  double delta_noise = 0.1;       // multiplicative noise on the true object's score
  double background_delta = 0.05; // ceiling for scores of absent objects
  std::uint64_t seed = 1;
};

struct SynthResult {
  Vocabulary vocab;
  std::vector<std::string> novel;
  std::vector<RawRecord> train_records, test_records;
  PretrainedVectors vectors;  // object prototypes doubling as word vectors
  Dataset train, test;
};

SynthResult generate_synthetic(const SynthSpec& spec);

std::string format_double(double v);  // shortest round-trip decimal

}  // namespace lstmc
