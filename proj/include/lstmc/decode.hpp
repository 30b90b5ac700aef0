#pragma once

#include <string>
#include <vector>

#include "lstmc/model.hpp"
#include "lstmc/vocab.hpp"

namespace lstmc {

struct DecodeResult {
  std::vector<TokenId> token_ids;        // end token included when reached
  std::vector<std::string> tokens;
  std::vector<double> step_log_probs;    // log prob of each chosen token
  enum class Termination { end_token, max_length } terminated = Termination::max_length;
  // Filled only when requested; one fused distribution per emitted token.
  std::vector<StepDistribution> step_distributions;
};

struct DecodeOptions {
  std::size_t max_len = 20;
  Mask mask;
  bool keep_distributions = false;
};

// Greedy argmax decoding: image at step -1, start token at step 0, then the
// chosen token feeds the next step until the end token or max_len. Argmax
// ties break toward the lowest token index.
DecodeResult greedy_decode(const ModelParams& p, const WordFeatures& feats,
                           const Vocabulary& vocab, const Vector& image,
                           const DetectionScores& detections, const DecodeOptions& opts = {});

struct DecodeInput {
  std::string id;
  Vector image_feature;
  DetectionScores detections;
};

std::vector<DecodeResult> decode_corpus(const ModelParams& p, const WordFeatures& feats,
                                        const Vocabulary& vocab,
                                        const std::vector<DecodeInput>& inputs,
                                        const DecodeOptions& opts = {});

}  // namespace lstmc
