#include "lstmc/decode.hpp"

#include "lstmc/error.hpp"

namespace lstmc {

DecodeResult greedy_decode(const ModelParams& p, const WordFeatures& feats,
                           const Vocabulary& vocab, const Vector& image,
                           const DetectionScores& detections, const DecodeOptions& opts) {
  if (opts.max_len < 1) throw ValidationError("greedy_decode: max_len must be >= 1");
  DecodeResult result;
  LstmState state = zero_state(p.dims.d_h);
  state = lstm_step(p.lstm, embed_image(p, image), state);
  TokenId current = vocab.start_id();
  for (std::size_t step = 0; step < opts.max_len; ++step) {
    state = lstm_step(p.lstm, embed_word(p, feats, current), state);
    const Vector gen = generative_scores(p, feats, vocab, state.h);
    const Vector copy = copy_scores(p, feats, vocab, state.h, detections);
    StepDistribution dist = fuse(p, gen, copy, vocab, detections, opts.mask);
    // argmax with lowest-index tie break; the start sentinel is a control
    // token and never emitted
    TokenId best = -1;
    for (std::size_t id = 0; id < dist.probs.size(); ++id) {
      if (static_cast<TokenId>(id) == vocab.start_id()) continue;
      if (best < 0 || dist.probs[id] > dist.probs[static_cast<std::size_t>(best)])
        best = static_cast<TokenId>(id);
    }
    result.token_ids.push_back(best);
    result.tokens.push_back(vocab.token(best));
    result.step_log_probs.push_back(dist.log_probs[static_cast<std::size_t>(best)]);
    if (opts.keep_distributions) result.step_distributions.push_back(std::move(dist));
    if (best == vocab.end_id()) {
      result.terminated = DecodeResult::Termination::end_token;
      return result;
    }
    current = best;
  }
  result.terminated = DecodeResult::Termination::max_length;
  return result;
}

std::vector<DecodeResult> decode_corpus(const ModelParams& p, const WordFeatures& feats,
                                        const Vocabulary& vocab,
                                        const std::vector<DecodeInput>& inputs,
                                        const DecodeOptions& opts) {
  std::vector<DecodeResult> out;
  out.reserve(inputs.size());
  for (const DecodeInput& in : inputs)
    out.push_back(greedy_decode(p, feats, vocab, in.image_feature, in.detections, opts));
  return out;
}

}  // namespace lstmc
