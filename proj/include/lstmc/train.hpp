#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lstmc/model.hpp"
#include "lstmc/vocab.hpp"

namespace lstmc {

// One paired sample: image feature, token ids wrapped in sentinels, and the
// detection-score map for W_c tokens.
struct TrainingExample {
  std::string id;
  Vector image_feature;
  std::vector<TokenId> tokens;  // starts with start_id, ends with end_id
  DetectionScores detections;
};

void validate_example(const TrainingExample& ex, const Vocabulary& vocab,
                      std::size_t feature_dim);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 100;
  int batch_size = 16;
  double reg_weight = 1e-4;
  std::uint64_t seed = 1;
  double text_only_weight = 0.0;
  Mask mask;
  double grad_clip = 0.0;  // 0 disables clipping
  int patience = 0;        // 0 disables early stopping
};

struct ObjectiveConfig {
  double reg_weight = 0.0;
  Mask mask;
  bool use_image = true;
};

// Negative log probability of the token sequence under teacher forcing:
// image injected at step -1 (unless use_image is false), then one fused
// distribution per target token.
double sequence_loss(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                     const TrainingExample& ex, const Mask& mask = {}, bool use_image = true);

struct SequenceTrace {
  double loss = 0.0;
  std::vector<StepDistribution> distributions;  // one per predicted token
};
SequenceTrace sequence_loss_trace(const ModelParams& p, const WordFeatures& feats,
                                  const Vocabulary& vocab, const TrainingExample& ex,
                                  const Mask& mask = {}, bool use_image = true);

// Mean per-example loss plus reg_weight times the squared Frobenius norms of
// every parameter block, summed in canonical block order.
double batch_objective(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                       std::span<const TrainingExample> batch, const ObjectiveConfig& cfg);

struct BackwardResult {
  ModelParams grad;  // same shape family as the parameters
  double mean_data_loss = 0.0;
  double objective = 0.0;
};

// Analytic gradient of batch_objective with respect to every trainable
// tensor; detection scores and word features are constants.
BackwardResult backward(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                        std::span<const TrainingExample> batch, const ObjectiveConfig& cfg);

struct GradCheckBlock {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double epsilon = 0.0;
  double tolerance = 0.0;
  double max_rel_err = 0.0;
  bool pass = false;
};

GradCheckReport grad_check(const ModelParams& p, const WordFeatures& feats,
                           const Vocabulary& vocab, std::span<const TrainingExample> batch,
                           const ObjectiveConfig& cfg, double epsilon, double tolerance,
                           std::size_t max_param_count = 20000);

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean data loss per epoch
  int epochs_run = 0;
};

// Plain SGD over seeded shuffles. Deterministic given (seed, config, data).
// When a text corpus is supplied and text_only_weight > 0, each epoch also
// applies image-free sequence-loss gradients scaled by that weight.
TrainResult sgd_train(const ModelParams& initial, const std::vector<TrainingExample>& data,
                      const TrainConfig& cfg, const WordFeatures& feats, const Vocabulary& vocab,
                      const std::vector<TrainingExample>* text_corpus = nullptr,
                      const std::vector<TrainingExample>* validation = nullptr);

}  // namespace lstmc
