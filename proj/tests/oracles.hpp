// Independent reference implementations used only as test oracles. These are
// deliberately written as literal, naive evaluations (direct exponentials,
// scalar loops, per-definition counting) so they share no code path with the
// library under test.
#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "lstmc/metrics.hpp"
#include "lstmc/model.hpp"
#include "lstmc/vocab.hpp"

namespace oracle {

// Literal case-wise fusion with naive exponentials; valid at small score
// magnitudes only.
inline std::vector<double> naive_fuse(double lambda, const std::vector<double>& gen,
                                      const std::vector<double>& copy,
                                      const lstmc::Vocabulary& vocab,
                                      const lstmc::DetectionScores& delta, bool mask_on = false,
                                      double tau = 0.0) {
  const std::size_t n = vocab.size();
  std::vector<double> mass(n, 0.0);
  for (std::size_t id = 0; id < n; ++id) {
    const lstmc::TokenId t = static_cast<lstmc::TokenId>(id);
    const bool g = vocab.in_g(t), c = vocab.in_c(t);
    if (g && !c) {
      mass[id] = std::exp(gen[static_cast<std::size_t>(vocab.g_index(t))]);
    } else if (g && c) {
      mass[id] = lambda * std::exp(gen[static_cast<std::size_t>(vocab.g_index(t))]) +
                 (1.0 - lambda) * std::exp(copy[static_cast<std::size_t>(vocab.c_index(t))]);
    } else if (!g && c) {
      const std::size_t ci = static_cast<std::size_t>(vocab.c_index(t));
      if (mask_on && delta.at_c_index(ci) < tau)
        mass[id] = 0.0;
      else
        mass[id] = std::exp(copy[ci]);
    }
  }
  double k = 0.0;
  for (double m : mass) k += m;
  std::vector<double> probs(n);
  for (std::size_t id = 0; id < n; ++id) probs[id] = mass[id] / k;
  return probs;
}

// Scalar straight-line LSTM step (no shared kernels, no saturation guards).
inline void straight_lstm_step(const lstmc::LstmParams& p, const std::vector<double>& x,
                               const std::vector<double>& h_prev,
                               const std::vector<double>& c_prev, std::vector<double>& h_out,
                               std::vector<double>& c_out) {
  const std::size_t n = p.b_g.size();
  h_out.assign(n, 0.0);
  c_out.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double ag = p.b_g[k], ai = p.b_i[k], af = p.b_f[k], ao = p.b_o[k];
    for (std::size_t j = 0; j < x.size(); ++j) {
      ag += p.T_g(k, j) * x[j];
      ai += p.T_i(k, j) * x[j];
      af += p.T_f(k, j) * x[j];
      ao += p.T_o(k, j) * x[j];
    }
    for (std::size_t j = 0; j < h_prev.size(); ++j) {
      ag += p.R_g(k, j) * h_prev[j];
      ai += p.R_i(k, j) * h_prev[j];
      af += p.R_f(k, j) * h_prev[j];
      ao += p.R_o(k, j) * h_prev[j];
    }
    const double g = std::tanh(ag);
    const double i = 1.0 / (1.0 + std::exp(-ai));
    const double f = 1.0 / (1.0 + std::exp(-af));
    const double o = 1.0 / (1.0 + std::exp(-ao));
    c_out[k] = g * i + c_prev[k] * f;
    h_out[k] = std::tanh(c_out[k]) * o;
  }
}

// Full straight-line teacher-forced sequence loss over the fused
// distributions; uses dense word features so nothing is shared with the
// library's column-extraction paths.
inline double straight_sequence_loss(const lstmc::ModelParams& p,
                                     const lstmc::WordFeatures& feats,
                                     const lstmc::Vocabulary& vocab,
                                     const std::vector<double>& image,
                                     const std::vector<lstmc::TokenId>& tokens,
                                     const lstmc::DetectionScores& delta) {
  const std::size_t d_e = p.dims.d_e, d_h = p.dims.d_h, d_w = p.dims.d_w;
  std::vector<double> h(d_h, 0.0), c(d_h, 0.0), h_next, c_next;

  std::vector<double> x(d_e, 0.0);
  for (std::size_t r = 0; r < d_e; ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < image.size(); ++j) acc += p.T_I(r, j) * image[j];
    x[r] = acc;
  }
  straight_lstm_step(p.lstm, x, h, c, h_next, c_next);
  h = h_next;
  c = c_next;

  double loss = 0.0;
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    const std::vector<double> fw = feats.vector(tokens[t]);
    for (std::size_t r = 0; r < d_e; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d_w; ++j) acc += p.T_s(r, j) * fw[j];
      x[r] = acc;
    }
    straight_lstm_step(p.lstm, x, h, c, h_next, c_next);
    h = h_next;
    c = c_next;

    std::vector<double> gen(vocab.g_ids().size(), 0.0);
    for (std::size_t gi = 0; gi < vocab.g_ids().size(); ++gi) {
      const std::vector<double> f = feats.vector(vocab.g_ids()[gi]);
      double s = 0.0;
      for (std::size_t r = 0; r < d_w; ++r) {
        double mg_h = 0.0;
        for (std::size_t k = 0; k < d_h; ++k) mg_h += p.M_g(r, k) * h[k];
        s += f[r] * mg_h;
      }
      gen[gi] = s;
    }
    std::vector<double> copy(vocab.c_ids().size(), 0.0);
    for (std::size_t ci = 0; ci < vocab.c_ids().size(); ++ci) {
      const std::vector<double> f = feats.vector(vocab.c_ids()[ci]);
      double s = 0.0;
      for (std::size_t k = 0; k < d_h; ++k) {
        double row_k = 0.0;
        for (std::size_t r = 0; r < d_w; ++r) row_k += f[r] * p.M_c(r, k);
        s += std::tanh(row_k) * h[k];
      }
      copy[ci] = s * delta.at_c_index(ci);
    }
    const std::vector<double> probs = naive_fuse(p.lambda, gen, copy, vocab, delta);
    loss -= std::log(probs[static_cast<std::size_t>(tokens[t + 1])]);
  }
  return loss;
}

// Brute-force metric counting straight from the definitions.
struct BruteMetrics {
  std::map<std::string, double> f1;
  double avg_f1 = 0.0;
  double novel = 0.0;
  double accuracy = 0.0;
};

inline BruteMetrics brute_force_metrics(const lstmc::EvalCorpus& corpus,
                                        const std::set<std::string>& novel_set) {
  BruteMetrics out;
  double f1_sum = 0.0;
  int ever_mentioned = 0;
  double recall_sum = 0.0;
  int recall_objects = 0;
  for (const std::string& object : novel_set) {
    int tp = 0, fp = 0, fn = 0;
    int containing = 0, described = 0;
    bool hit = false;
    for (const lstmc::EvalItem& item : corpus.items) {
      bool said = false;
      for (const std::string& tok : item.generated)
        if (tok == object) said = true;
      const bool has = item.labels.find(object) != item.labels.end();
      if (said && has) ++tp;
      if (said && !has) ++fp;
      if (!said && has) ++fn;
      if (has) {
        ++containing;
        if (said) {
          ++described;
          hit = true;
        }
      }
    }
    double f1 = 0.0;
    if (tp > 0) {
      const double prec = double(tp) / double(tp + fp);
      const double rec = double(tp) / double(tp + fn);
      f1 = 2.0 * prec * rec / (prec + rec);
    }
    out.f1[object] = f1;
    f1_sum += f1;
    if (hit) ++ever_mentioned;
    if (containing > 0) {
      recall_sum += double(described) / double(containing);
      ++recall_objects;
    }
  }
  out.avg_f1 = f1_sum / double(novel_set.size());
  out.novel = double(ever_mentioned) / double(novel_set.size());
  out.accuracy = recall_objects > 0 ? recall_sum / double(recall_objects) : 0.0;
  return out;
}

}  // namespace oracle
