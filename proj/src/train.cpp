#include "lstmc/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lstmc/error.hpp"
#include "lstmc/rng.hpp"

namespace lstmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct StepTrace {
  Vector x;
  LstmStepTrace cell;
  bool predicts = false;
  TokenId input_token = -1;  // -1 on the image step
  TokenId target = -1;
  Vector gen;        // |W_g|
  Vector copy;       // |W_c|
  Matrix copy_tanh;  // |W_c| x D_h, tanh(f_w^T M_c) rows
  StepDistribution dist;
};

struct ExampleTrace {
  std::vector<StepTrace> steps;
  double loss = 0.0;
};

// copy_scores with the per-token tanh rows kept for the backward pass.
Vector copy_scores_traced(const ModelParams& p, const WordFeatures& feats,
                          const Vocabulary& vocab, const Vector& h,
                          const DetectionScores& delta, Matrix& copy_tanh) {
  const std::size_t d_h = p.dims.d_h;
  const std::size_t base = feats.union_size();
  const std::size_t nc = vocab.c_ids().size();
  copy_tanh = Matrix(nc, d_h);
  Vector out(nc, 0.0);
  Vector r(d_h);
  for (std::size_t ci = 0; ci < nc; ++ci) {
    const TokenId id = vocab.c_ids()[ci];
    const double* row = p.M_c.row(static_cast<std::size_t>(id));
    for (std::size_t k = 0; k < d_h; ++k) r[k] = row[k];
    if (const double* pre = feats.pretrained_row(id)) {
      for (std::size_t j = 0; j < feats.pretrained_dim(); ++j) {
        const double pj = pre[j];
        if (pj == 0.0) continue;
        const double* prow = p.M_c.row(base + j);
        for (std::size_t k = 0; k < d_h; ++k) r[k] += pj * prow[k];
      }
    }
    double s = 0.0;
    double* trow = copy_tanh.row(ci);
    for (std::size_t k = 0; k < d_h; ++k) {
      trow[k] = tanh_open(r[k]);
      s += trow[k] * h[k];
    }
    out[ci] = s * delta.at_c_index(ci);
  }
  return out;
}

ExampleTrace forward_example(const ModelParams& p, const WordFeatures& feats,
                             const Vocabulary& vocab, const TrainingExample& ex,
                             const Mask& mask, bool use_image) {
  ExampleTrace trace;
  // accumulate in extended precision; loss noise propagates into the
  // finite-difference oracle divided by 2*epsilon
  long double loss_acc = 0.0L;
  LstmState state = zero_state(p.dims.d_h);
  if (use_image) {
    StepTrace st;
    st.x = embed_image(p, ex.image_feature);
    st.cell = lstm_step_traced(p.lstm, st.x, state);
    state = {st.cell.h, st.cell.c};
    trace.steps.push_back(std::move(st));
  }
  const std::size_t n_predict = ex.tokens.size() - 1;
  for (std::size_t t = 0; t < n_predict; ++t) {
    StepTrace st;
    st.input_token = ex.tokens[t];
    st.x = embed_word(p, feats, st.input_token);
    st.cell = lstm_step_traced(p.lstm, st.x, state);
    state = {st.cell.h, st.cell.c};
    st.predicts = true;
    st.target = ex.tokens[t + 1];
    st.gen = generative_scores(p, feats, vocab, st.cell.h);
    st.copy = copy_scores_traced(p, feats, vocab, st.cell.h, ex.detections, st.copy_tanh);
    st.dist = fuse(p, st.gen, st.copy, vocab, ex.detections, mask);
    const double lp = st.dist.log_probs[static_cast<std::size_t>(st.target)];
    if (!std::isfinite(lp)) {
      throw NumericError("sequence_loss: target token '" + vocab.token(st.target) +
                         "' has zero fused mass at step " + std::to_string(t) +
                         (mask.enabled ? " (detection-floor mask is on)" : ""));
    }
    loss_acc -= lp;
    trace.steps.push_back(std::move(st));
  }
  trace.loss = static_cast<double>(loss_acc);
  return trace;
}

// Branch weights of an overlap token: d log_mass / d gen and / d copy.
void overlap_weights(double lambda, double gen, double copy, double& w_gen, double& w_copy) {
  if (lambda <= 0.0) {
    w_gen = 0.0;
    w_copy = 1.0;
    return;
  }
  if (lambda >= 1.0) {
    w_gen = 1.0;
    w_copy = 0.0;
    return;
  }
  const double a = std::log(lambda) + gen;
  const double b = std::log1p(-lambda) + copy;
  const double m = a > b ? a : b;
  const double ea = std::exp(a - m);
  const double eb = std::exp(b - m);
  w_gen = ea / (ea + eb);
  w_copy = eb / (ea + eb);
}

// Accumulates the gradient of one example's loss into grad (unscaled).
void backward_example(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                      const TrainingExample& ex, const ExampleTrace& trace, ModelParams& grad) {
  const std::size_t d_h = p.dims.d_h;
  const std::size_t d_w = feats.dim();
  const std::size_t base = feats.union_size();

  Vector dh_carry(d_h, 0.0);
  Vector dc_carry(d_h, 0.0);
  Vector dh(d_h), dc(d_h), dg(d_h), di(d_h), df(d_h), do_(d_h);
  Vector dpg(d_h), dpi(d_h), dpf(d_h), dpo(d_h);
  Vector a(d_w);
  Vector dr(d_h);

  for (std::size_t si = trace.steps.size(); si-- > 0;) {
    const StepTrace& st = trace.steps[si];
    dh = dh_carry;
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);

    if (st.predicts) {
      // d loss / d log_mass(w) = p(w) - [w == target]
      std::fill(a.begin(), a.end(), 0.0);
      bool any_gen = false;
      for (std::size_t id = 0; id < vocab.size(); ++id) {
        const TokenId t = static_cast<TokenId>(id);
        double dlm = st.dist.probs[id];
        if (t == st.target) dlm -= 1.0;
        if (dlm == 0.0) continue;
        double dgen_w = 0.0, dcopy_w = 0.0;
        switch (vocab.token_case(t)) {
          case TokenCase::g_only:
            dgen_w = dlm;
            break;
          case TokenCase::c_only:
            dcopy_w = dlm;
            break;
          case TokenCase::overlap: {
            double wg, wc;
            overlap_weights(p.lambda, st.gen[static_cast<std::size_t>(vocab.g_index(t))],
                            st.copy[static_cast<std::size_t>(vocab.c_index(t))], wg, wc);
            dgen_w = dlm * wg;
            dcopy_w = dlm * wc;
            break;
          }
        }
        if (dgen_w != 0.0) {
          any_gen = true;
          a[id] += dgen_w;
          if (const double* pre = feats.pretrained_row(t)) {
            for (std::size_t j = 0; j < feats.pretrained_dim(); ++j)
              a[base + j] += dgen_w * pre[j];
          }
        }
        if (dcopy_w != 0.0) {
          const std::size_t ci = static_cast<std::size_t>(vocab.c_index(t));
          const double delta = ex.detections.at_c_index(ci);
          if (delta != 0.0) {
            const double* trow = st.copy_tanh.row(ci);
            const double scale = dcopy_w * delta;
            for (std::size_t k = 0; k < d_h; ++k) {
              dh[k] += scale * trow[k];
              dr[k] = scale * (1.0 - trow[k] * trow[k]) * st.cell.h[k];
            }
            double* grow = grad.M_c.row(id);
            for (std::size_t k = 0; k < d_h; ++k) grow[k] += dr[k];
            if (const double* pre = feats.pretrained_row(t)) {
              for (std::size_t j = 0; j < feats.pretrained_dim(); ++j) {
                const double pj = pre[j];
                if (pj == 0.0) continue;
                double* prow = grad.M_c.row(base + j);
                for (std::size_t k = 0; k < d_h; ++k) prow[k] += pj * dr[k];
              }
            }
          }
        }
      }
      if (any_gen) {
        // s_g(w) = f_w^T M_g h  =>  dM_g += a h^T, dh += M_g^T a
        add_outer(grad.M_g, a, st.cell.h);
        const Vector dh_gen = matvec_transposed(p.M_g, a);
        for (std::size_t k = 0; k < d_h; ++k) dh[k] += dh_gen[k];
      }
    }

    // LSTM cell backward
    const Vector zero(d_h, 0.0);
    const Vector& c_prev = si > 0 ? trace.steps[si - 1].cell.c : zero;
    const Vector& h_prev = si > 0 ? trace.steps[si - 1].cell.h : zero;
    const LstmStepTrace& cell = st.cell;
    for (std::size_t k = 0; k < d_h; ++k) {
      do_[k] = dh[k] * cell.c_tanh[k];
      dc[k] = dc_carry[k] + dh[k] * cell.o[k] * (1.0 - cell.c_tanh[k] * cell.c_tanh[k]);
      dg[k] = dc[k] * cell.i[k];
      di[k] = dc[k] * cell.g[k];
      df[k] = dc[k] * c_prev[k];
      dc_carry[k] = dc[k] * cell.f[k];
      dpg[k] = dg[k] * (1.0 - cell.g[k] * cell.g[k]);
      dpi[k] = di[k] * cell.i[k] * (1.0 - cell.i[k]);
      dpf[k] = df[k] * cell.f[k] * (1.0 - cell.f[k]);
      dpo[k] = do_[k] * cell.o[k] * (1.0 - cell.o[k]);
    }
    add_outer(grad.lstm.T_g, dpg, st.x);
    add_outer(grad.lstm.T_i, dpi, st.x);
    add_outer(grad.lstm.T_f, dpf, st.x);
    add_outer(grad.lstm.T_o, dpo, st.x);
    add_outer(grad.lstm.R_g, dpg, h_prev);
    add_outer(grad.lstm.R_i, dpi, h_prev);
    add_outer(grad.lstm.R_f, dpf, h_prev);
    add_outer(grad.lstm.R_o, dpo, h_prev);
    for (std::size_t k = 0; k < d_h; ++k) {
      grad.lstm.b_g[k] += dpg[k];
      grad.lstm.b_i[k] += dpi[k];
      grad.lstm.b_f[k] += dpf[k];
      grad.lstm.b_o[k] += dpo[k];
    }

    Vector dx = matvec_transposed(p.lstm.T_g, dpg);
    {
      const Vector t1 = matvec_transposed(p.lstm.T_i, dpi);
      const Vector t2 = matvec_transposed(p.lstm.T_f, dpf);
      const Vector t3 = matvec_transposed(p.lstm.T_o, dpo);
      for (std::size_t k = 0; k < dx.size(); ++k) dx[k] += t1[k] + t2[k] + t3[k];
    }
    {
      const Vector r1 = matvec_transposed(p.lstm.R_g, dpg);
      const Vector r2 = matvec_transposed(p.lstm.R_i, dpi);
      const Vector r3 = matvec_transposed(p.lstm.R_f, dpf);
      const Vector r4 = matvec_transposed(p.lstm.R_o, dpo);
      for (std::size_t k = 0; k < d_h; ++k) dh_carry[k] += r1[k] + r2[k] + r3[k] + r4[k];
    }

    if (st.input_token < 0) {
      add_outer(grad.T_I, dx, ex.image_feature);
    } else {
      const std::size_t col = static_cast<std::size_t>(st.input_token);
      for (std::size_t r = 0; r < dx.size(); ++r) grad.T_s(r, col) += dx[r];
      if (const double* pre = feats.pretrained_row(st.input_token)) {
        for (std::size_t j = 0; j < feats.pretrained_dim(); ++j) {
          const double pj = pre[j];
          if (pj == 0.0) continue;
          for (std::size_t r = 0; r < dx.size(); ++r) grad.T_s(r, base + j) += pj * dx[r];
        }
      }
    }
  }
}

double regularizer_sum(const ModelParams& p) {
  double acc = 0.0;
  for (const auto& b : param_blocks(const_cast<ModelParams&>(p)))
    for (double x : b.values) acc += x * x;
  return acc;
}

}  // namespace

void validate_example(const TrainingExample& ex, const Vocabulary& vocab,
                      std::size_t feature_dim) {
  if (ex.tokens.size() < 2)
    throw ValidationError("example '" + ex.id + "': token sequence shorter than 2");
  if (ex.tokens.front() != vocab.start_id())
    throw ValidationError("example '" + ex.id + "': sequence does not begin with start token");
  if (ex.tokens.back() != vocab.end_id())
    throw ValidationError("example '" + ex.id + "': sequence does not end with end token");
  for (TokenId t : ex.tokens)
    if (!vocab.valid(t))
      throw ValidationError("example '" + ex.id + "': token id out of range");
  if (ex.image_feature.size() != feature_dim)
    throw ValidationError("example '" + ex.id + "': feature length " +
                          std::to_string(ex.image_feature.size()) + ", expected " +
                          std::to_string(feature_dim));
}

double sequence_loss(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                     const TrainingExample& ex, const Mask& mask, bool use_image) {
  return forward_example(p, feats, vocab, ex, mask, use_image).loss;
}

SequenceTrace sequence_loss_trace(const ModelParams& p, const WordFeatures& feats,
                                  const Vocabulary& vocab, const TrainingExample& ex,
                                  const Mask& mask, bool use_image) {
  ExampleTrace trace = forward_example(p, feats, vocab, ex, mask, use_image);
  SequenceTrace out;
  out.loss = trace.loss;
  for (auto& st : trace.steps)
    if (st.predicts) out.distributions.push_back(std::move(st.dist));
  return out;
}

double batch_objective(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                       std::span<const TrainingExample> batch, const ObjectiveConfig& cfg) {
  if (batch.empty()) throw ValidationError("batch_objective: empty batch");
  long double total = 0.0L;
  for (const TrainingExample& ex : batch)
    total += sequence_loss(p, feats, vocab, ex, cfg.mask, cfg.use_image);
  const double mean = static_cast<double>(total / static_cast<long double>(batch.size()));
  return mean + cfg.reg_weight * regularizer_sum(p);
}

BackwardResult backward(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                        std::span<const TrainingExample> batch, const ObjectiveConfig& cfg) {
  if (batch.empty()) throw ValidationError("backward: empty batch");
  BackwardResult result;
  result.grad = zeros_like(p);
  long double total = 0.0L;
  for (const TrainingExample& ex : batch) {
    ExampleTrace trace = forward_example(p, feats, vocab, ex, cfg.mask, cfg.use_image);
    total += trace.loss;
    backward_example(p, feats, vocab, ex, trace, result.grad);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (auto& b : param_blocks(result.grad))
    for (double& x : b.values) x *= inv_n;
  if (cfg.reg_weight != 0.0) {
    ModelParams& gp = result.grad;
    auto gblocks = param_blocks(gp);
    auto pblocks = param_blocks(const_cast<ModelParams&>(p));
    for (std::size_t i = 0; i < gblocks.size(); ++i) {
      const double two_r = 2.0 * cfg.reg_weight;
      for (std::size_t k = 0; k < gblocks[i].values.size(); ++k)
        gblocks[i].values[k] += two_r * pblocks[i].values[k];
    }
  }
  result.mean_data_loss =
      static_cast<double>(total / static_cast<long double>(batch.size()));
  result.objective = result.mean_data_loss + cfg.reg_weight * regularizer_sum(p);
  for (const auto& b : param_blocks(result.grad)) {
    for (double x : b.values) {
      if (!std::isfinite(x))
        throw NumericError("backward: non-finite gradient in block " + b.name);
    }
  }
  return result;
}

GradCheckReport grad_check(const ModelParams& p, const WordFeatures& feats,
                           const Vocabulary& vocab, std::span<const TrainingExample> batch,
                           const ObjectiveConfig& cfg, double epsilon, double tolerance,
                           std::size_t max_param_count) {
  const std::size_t n_params = param_count(p);
  if (n_params > max_param_count)
    throw ValidationError("grad_check: model has " + std::to_string(n_params) +
                          " parameters, above the configured bound of " +
                          std::to_string(max_param_count));

  ModelParams scratch = p;
  Vector flat = flatten(p);
  auto objective = [&](std::span<const double> theta) {
    unflatten(scratch, theta);
    return batch_objective(scratch, feats, vocab, batch, cfg);
  };
  // Richardson-extrapolated central differences: combining steps epsilon and
  // epsilon/2 cancels the O(eps^2) truncation term, so epsilon can stay large
  // enough to keep the objective's rounding noise (which enters divided by
  // 2*epsilon) below the tolerance.
  const std::span<double> view(flat.data(), flat.size());
  const Vector coarse = finite_diff(objective, view, epsilon);
  const Vector fine = finite_diff(objective, view, epsilon / 2.0);
  Vector numeric(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i)
    numeric[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
  const Vector analytic = flatten(backward(p, feats, vocab, batch, cfg).grad);

  GradCheckReport report;
  report.epsilon = epsilon;
  report.tolerance = tolerance;
  std::size_t offset = 0;
  for (const auto& b : param_blocks(const_cast<ModelParams&>(p))) {
    GradCheckBlock gb;
    gb.name = b.name;
    for (std::size_t k = 0; k < b.values.size(); ++k) {
      const double an = analytic[offset + k];
      const double nu = numeric[offset + k];
      const double rel = std::abs(an - nu) / std::max({std::abs(an), std::abs(nu), 1e-8});
      if (rel >= gb.max_rel_err) {
        gb.max_rel_err = rel;
        gb.worst_index = k;
        gb.analytic = an;
        gb.numeric = nu;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, gb.max_rel_err);
    report.blocks.push_back(std::move(gb));
    offset += b.values.size();
  }
  report.pass = report.max_rel_err < tolerance;
  return report;
}

namespace {

void apply_update(ModelParams& params, const ModelParams& grad, double step) {
  auto pb = param_blocks(params);
  auto gb = param_blocks(const_cast<ModelParams&>(grad));
  for (std::size_t i = 0; i < pb.size(); ++i)
    for (std::size_t k = 0; k < pb[i].values.size(); ++k)
      pb[i].values[k] -= step * gb[i].values[k];
}

double grad_norm(const ModelParams& grad) {
  double acc = 0.0;
  for (const auto& b : param_blocks(const_cast<ModelParams&>(grad)))
    for (double x : b.values) acc += x * x;
  return std::sqrt(acc);
}

void scale_grad(ModelParams& grad, double s) {
  for (auto& b : param_blocks(grad))
    for (double& x : b.values) x *= s;
}

}  // namespace

TrainResult sgd_train(const ModelParams& initial, const std::vector<TrainingExample>& data,
                      const TrainConfig& cfg, const WordFeatures& feats, const Vocabulary& vocab,
                      const std::vector<TrainingExample>* text_corpus,
                      const std::vector<TrainingExample>* validation) {
  if (data.empty()) throw ValidationError("sgd_train: dataset is empty");
  if (cfg.learning_rate < 0.0) throw ValidationError("sgd_train: negative learning rate");
  if (cfg.batch_size < 1) throw ValidationError("sgd_train: batch_size must be >= 1");
  if (cfg.epochs < 0) throw ValidationError("sgd_train: negative epoch count");

  TrainResult result;
  result.params = initial;
  Rng rng(Rng::derive(cfg.seed, 1));

  const ObjectiveConfig paired_cfg{cfg.reg_weight, cfg.mask, true};
  const ObjectiveConfig text_cfg{0.0, cfg.mask, false};
  const bool use_text =
      text_corpus != nullptr && !text_corpus->empty() && cfg.text_only_weight > 0.0;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::size_t> text_order;
  if (use_text) {
    text_order.resize(text_corpus->size());
    std::iota(text_order.begin(), text_order.end(), 0);
  }

  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;
  ModelParams best_params = result.params;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<TrainingExample> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
      BackwardResult br = backward(result.params, feats, vocab,
                                   std::span<const TrainingExample>(batch), paired_cfg);
      if (!std::isfinite(br.objective))
        throw NumericError("sgd_train: objective diverged at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(start / cfg.batch_size));
      epoch_total += br.mean_data_loss * static_cast<double>(batch.size());
      if (cfg.grad_clip > 0.0) {
        const double norm = grad_norm(br.grad);
        if (norm > cfg.grad_clip) scale_grad(br.grad, cfg.grad_clip / norm);
      }
      apply_update(result.params, br.grad, cfg.learning_rate);
    }
    if (use_text) {
      rng.shuffle(text_order);
      for (std::size_t start = 0; start < text_order.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop =
            std::min(text_order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        std::vector<TrainingExample> batch;
        batch.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) batch.push_back((*text_corpus)[text_order[i]]);
        BackwardResult br = backward(result.params, feats, vocab,
                                     std::span<const TrainingExample>(batch), text_cfg);
        if (!std::isfinite(br.objective))
          throw NumericError("sgd_train: text-only objective diverged at epoch " +
                             std::to_string(epoch));
        if (cfg.grad_clip > 0.0) {
          const double norm = grad_norm(br.grad);
          if (norm > cfg.grad_clip) scale_grad(br.grad, cfg.grad_clip / norm);
        }
        apply_update(result.params, br.grad, cfg.learning_rate * cfg.text_only_weight);
      }
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(data.size()));
    result.epochs_run = epoch + 1;

    if (validation != nullptr && cfg.patience > 0 && !validation->empty()) {
      double val_total = 0.0;
      for (const TrainingExample& ex : *validation)
        val_total += sequence_loss(result.params, feats, vocab, ex, cfg.mask, true);
      const double val_mean = val_total / static_cast<double>(validation->size());
      if (val_mean < best_val) {
        best_val = val_mean;
        epochs_since_best = 0;
        best_params = result.params;
      } else if (++epochs_since_best >= cfg.patience) {
        result.params = best_params;
        break;
      }
    }
  }
  return result;
}

}  // namespace lstmc
