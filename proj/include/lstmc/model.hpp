#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lstmc/tensor.hpp"
#include "lstmc/vocab.hpp"

namespace lstmc {

struct LstmParams {
  Matrix T_g, T_i, T_f, T_o;  // D_h x D_e input weights
  Matrix R_g, R_i, R_f, R_o;  // D_h x D_h recurrent weights
  Vector b_g, b_i, b_f, b_o;  // D_h biases
};

struct Dims {
  std::size_t d_v = 0;  // image feature
  std::size_t d_w = 0;  // word feature
  std::size_t d_e = 0;  // LSTM input
  std::size_t d_h = 0;  // LSTM output
};

struct ModelParams {
  LstmParams lstm;
  Matrix T_I;  // D_e x D_v image embedding
  Matrix T_s;  // D_e x D_w word embedding
  Matrix M_g;  // D_w x D_h generative head
  Matrix M_c;  // D_w x D_h copying head
  Dims dims;
  double lambda = 0.2;  // generative/copy tradeoff for overlap tokens
};

struct LstmState {
  Vector h, c;
};

// Fused, normalized next-token distribution over the union vocabulary.
struct StepDistribution {
  Vector probs;      // sums to 1; exactly 0 only for mask-suppressed tokens
  Vector log_probs;  // -inf where probs == 0
};

// Optional detection-floor mask: when enabled, c-only tokens whose score is
// below tau get zero fused mass instead of the literal e^0.
struct Mask {
  bool enabled = false;
  double tau = 0.0;
};

ModelParams init_params(const Dims& dims, double lambda, std::uint64_t seed);
void validate_params(const ModelParams& p);

LstmState zero_state(std::size_t d_h);
LstmState lstm_step(const LstmParams& p, const Vector& x, const LstmState& prev);

// Gate activations kept for backpropagation through time.
struct LstmStepTrace {
  Vector g, i, f, o, c, h, c_tanh;
};
LstmStepTrace lstm_step_traced(const LstmParams& p, const Vector& x, const LstmState& prev);

Vector embed_image(const ModelParams& p, const Vector& image);
Vector embed_word(const ModelParams& p, const WordFeatures& feats, TokenId id);

// Scores aligned with vocab.g_ids(): f_w^T (M_g h).
Vector generative_scores(const ModelParams& p, const WordFeatures& feats,
                         const Vocabulary& vocab, const Vector& h);

// Scores aligned with vocab.c_ids(): tanh(f_w^T M_c) . h . delta(w).
Vector copy_scores(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                   const Vector& h, const DetectionScores& delta);

// Case-wise fusion over the vocabulary partition, computed in log space with
// a single global max shift.
StepDistribution fuse(const ModelParams& p, const Vector& gen, const Vector& copy,
                      const Vocabulary& vocab, const DetectionScores& delta,
                      const Mask& mask = {});

// Named views over every trainable block, in canonical order. The same order
// backs flattening, checkpoints, and gradient reports.
struct BlockView {
  std::string name;
  std::span<double> values;
};
std::vector<BlockView> param_blocks(ModelParams& p);
std::size_t param_count(const ModelParams& p);
Vector flatten(const ModelParams& p);
void unflatten(ModelParams& p, std::span<const double> flat);
ModelParams zeros_like(const ModelParams& p);

}  // namespace lstmc
