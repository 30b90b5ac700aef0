#include "lstmc/model.hpp"

#include <cmath>
#include <limits>

#include "lstmc/error.hpp"
#include "lstmc/rng.hpp"

namespace lstmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& x : m.data()) x = rng.uniform(-s, s);
  return m;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace

ModelParams init_params(const Dims& dims, double lambda, std::uint64_t seed) {
  require(dims.d_v > 0 && dims.d_w > 0 && dims.d_e > 0 && dims.d_h > 0,
          "all model dimensions must be positive");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0,1]");
  Rng rng(seed);
  ModelParams p;
  p.dims = dims;
  p.lambda = lambda;
  p.lstm.T_g = glorot(dims.d_h, dims.d_e, rng);
  p.lstm.T_i = glorot(dims.d_h, dims.d_e, rng);
  p.lstm.T_f = glorot(dims.d_h, dims.d_e, rng);
  p.lstm.T_o = glorot(dims.d_h, dims.d_e, rng);
  p.lstm.R_g = glorot(dims.d_h, dims.d_h, rng);
  p.lstm.R_i = glorot(dims.d_h, dims.d_h, rng);
  p.lstm.R_f = glorot(dims.d_h, dims.d_h, rng);
  p.lstm.R_o = glorot(dims.d_h, dims.d_h, rng);
  p.lstm.b_g = Vector(dims.d_h, 0.0);
  p.lstm.b_i = Vector(dims.d_h, 0.0);
  p.lstm.b_f = Vector(dims.d_h, 0.0);
  p.lstm.b_o = Vector(dims.d_h, 0.0);
  p.T_I = glorot(dims.d_e, dims.d_v, rng);
  p.T_s = glorot(dims.d_e, dims.d_w, rng);
  p.M_g = glorot(dims.d_w, dims.d_h, rng);
  p.M_c = glorot(dims.d_w, dims.d_h, rng);
  return p;
}

void validate_params(const ModelParams& p) {
  const Dims& d = p.dims;
  require(p.lambda >= 0.0 && p.lambda <= 1.0, "lambda must lie in [0,1]");
  auto shape = [](const Matrix& m, std::size_t r, std::size_t c, const char* name) {
    if (m.rows() != r || m.cols() != c)
      throw ValidationError(std::string(name) + " has shape " + shape_str(m) + ", expected " +
                            std::to_string(r) + "x" + std::to_string(c));
  };
  shape(p.lstm.T_g, d.d_h, d.d_e, "T_g");
  shape(p.lstm.T_i, d.d_h, d.d_e, "T_i");
  shape(p.lstm.T_f, d.d_h, d.d_e, "T_f");
  shape(p.lstm.T_o, d.d_h, d.d_e, "T_o");
  shape(p.lstm.R_g, d.d_h, d.d_h, "R_g");
  shape(p.lstm.R_i, d.d_h, d.d_h, "R_i");
  shape(p.lstm.R_f, d.d_h, d.d_h, "R_f");
  shape(p.lstm.R_o, d.d_h, d.d_h, "R_o");
  require(p.lstm.b_g.size() == d.d_h && p.lstm.b_i.size() == d.d_h &&
              p.lstm.b_f.size() == d.d_h && p.lstm.b_o.size() == d.d_h,
          "bias length mismatch");
  shape(p.T_I, d.d_e, d.d_v, "T_I");
  shape(p.T_s, d.d_e, d.d_w, "T_s");
  shape(p.M_g, d.d_w, d.d_h, "M_g");
  shape(p.M_c, d.d_w, d.d_h, "M_c");
}

LstmState zero_state(std::size_t d_h) { return {Vector(d_h, 0.0), Vector(d_h, 0.0)}; }

LstmStepTrace lstm_step_traced(const LstmParams& p, const Vector& x, const LstmState& prev) {
  require(p.T_g.cols() == x.size(), "lstm_step: input length " + std::to_string(x.size()) +
                                        " vs expected " + std::to_string(p.T_g.cols()));
  require(prev.h.size() == p.R_g.cols() && prev.c.size() == p.R_g.cols(),
          "lstm_step: state length mismatch");
  const std::size_t n = p.b_g.size();
  LstmStepTrace t;
  Vector ag = matvec(p.T_g, x), ai = matvec(p.T_i, x), af = matvec(p.T_f, x),
         ao = matvec(p.T_o, x);
  Vector rg = matvec(p.R_g, prev.h), ri = matvec(p.R_i, prev.h), rf = matvec(p.R_f, prev.h),
         ro = matvec(p.R_o, prev.h);
  t.g.resize(n);
  t.i.resize(n);
  t.f.resize(n);
  t.o.resize(n);
  t.c.resize(n);
  t.h.resize(n);
  t.c_tanh.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    t.g[k] = tanh_open(ag[k] + rg[k] + p.b_g[k]);
    t.i[k] = sigmoid(ai[k] + ri[k] + p.b_i[k]);
    t.f[k] = sigmoid(af[k] + rf[k] + p.b_f[k]);
    t.o[k] = sigmoid(ao[k] + ro[k] + p.b_o[k]);
    t.c[k] = t.g[k] * t.i[k] + prev.c[k] * t.f[k];
    t.c_tanh[k] = tanh_open(t.c[k]);
    t.h[k] = t.c_tanh[k] * t.o[k];
  }
  return t;
}

LstmState lstm_step(const LstmParams& p, const Vector& x, const LstmState& prev) {
  LstmStepTrace t = lstm_step_traced(p, x, prev);
  return {std::move(t.h), std::move(t.c)};
}

Vector embed_image(const ModelParams& p, const Vector& image) {
  return matvec(p.T_I, image);
}

Vector embed_word(const ModelParams& p, const WordFeatures& feats, TokenId id) {
  require(feats.dim() == p.T_s.cols(), "embed_word: feature dim mismatch");
  if (id < 0 || static_cast<std::size_t>(id) >= feats.union_size())
    throw ValidationError("embed_word: token id out of range: " + std::to_string(id));
  // one-hot block selects a column of T_s; pretrained block adds a weighted
  // combination of the trailing columns
  const std::size_t d_e = p.T_s.rows();
  Vector out(d_e, 0.0);
  for (std::size_t r = 0; r < d_e; ++r) out[r] = p.T_s(r, static_cast<std::size_t>(id));
  if (const double* pre = feats.pretrained_row(id)) {
    const std::size_t base = feats.union_size();
    for (std::size_t j = 0; j < feats.pretrained_dim(); ++j) {
      const double pj = pre[j];
      if (pj == 0.0) continue;
      for (std::size_t r = 0; r < d_e; ++r) out[r] += pj * p.T_s(r, base + j);
    }
  }
  return out;
}

Vector generative_scores(const ModelParams& p, const WordFeatures& feats,
                         const Vocabulary& vocab, const Vector& h) {
  require(h.size() == p.dims.d_h, "generative_scores: h length mismatch");
  require(feats.dim() == p.M_g.rows(), "generative_scores: feature dim mismatch");
  const Vector u = matvec(p.M_g, h);  // D_w
  const std::size_t base = feats.union_size();
  Vector out(vocab.g_ids().size(), 0.0);
  for (std::size_t gi = 0; gi < vocab.g_ids().size(); ++gi) {
    const TokenId id = vocab.g_ids()[gi];
    double s = u[static_cast<std::size_t>(id)];
    if (const double* pre = feats.pretrained_row(id)) {
      for (std::size_t j = 0; j < feats.pretrained_dim(); ++j) s += pre[j] * u[base + j];
    }
    out[gi] = s;
  }
  return out;
}

Vector copy_scores(const ModelParams& p, const WordFeatures& feats, const Vocabulary& vocab,
                   const Vector& h, const DetectionScores& delta) {
  require(h.size() == p.dims.d_h, "copy_scores: h length mismatch");
  require(feats.dim() == p.M_c.rows(), "copy_scores: feature dim mismatch");
  const std::size_t d_h = p.dims.d_h;
  const std::size_t base = feats.union_size();
  Vector out(vocab.c_ids().size(), 0.0);
  Vector r(d_h);
  for (std::size_t ci = 0; ci < vocab.c_ids().size(); ++ci) {
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
    for (std::size_t k = 0; k < d_h; ++k) s += tanh_open(r[k]) * h[k];
    out[ci] = s * delta.at_c_index(ci);
  }
  return out;
}

StepDistribution fuse(const ModelParams& p, const Vector& gen, const Vector& copy,
                      const Vocabulary& vocab, const DetectionScores& delta,
                      const Mask& mask) {
  const std::size_t n = vocab.size();
  require(n > 0, "fuse: empty union vocabulary");
  require(gen.size() == vocab.g_ids().size(), "fuse: generative score support mismatch");
  require(copy.size() == vocab.c_ids().size(), "fuse: copy score support mismatch");
  const double lambda = p.lambda;
  require(lambda >= 0.0 && lambda <= 1.0, "fuse: lambda must lie in [0,1]");
  const double log_lambda = lambda > 0.0 ? std::log(lambda) : kNegInf;
  const double log_one_minus = lambda < 1.0 ? std::log1p(-lambda) : kNegInf;

  Vector log_mass(n, kNegInf);
  for (std::size_t id = 0; id < n; ++id) {
    const TokenId t = static_cast<TokenId>(id);
    switch (vocab.token_case(t)) {
      case TokenCase::g_only:
        log_mass[id] = gen[static_cast<std::size_t>(vocab.g_index(t))];
        break;
      case TokenCase::c_only: {
        const std::size_t ci = static_cast<std::size_t>(vocab.c_index(t));
        if (mask.enabled && delta.at_c_index(ci) < mask.tau) break;  // mass 0
        log_mass[id] = copy[ci];
        break;
      }
      case TokenCase::overlap: {
        const double a = log_lambda + gen[static_cast<std::size_t>(vocab.g_index(t))];
        const double b = log_one_minus + copy[static_cast<std::size_t>(vocab.c_index(t))];
        if (a == kNegInf) {
          log_mass[id] = b;
        } else if (b == kNegInf) {
          log_mass[id] = a;
        } else {
          const double m = a > b ? a : b;
          log_mass[id] = m + std::log(std::exp(a - m) + std::exp(b - m));
        }
        break;
      }
    }
  }

  const double log_k = log_sum_exp(log_mass);
  if (!std::isfinite(log_k))
    throw NumericError("fuse: normalizer is not finite (log K = " + std::to_string(log_k) + ")");

  StepDistribution dist;
  dist.probs.resize(n);
  dist.log_probs.resize(n);
  double total = 0.0;
  for (std::size_t id = 0; id < n; ++id) {
    dist.log_probs[id] = log_mass[id] - log_k;
    dist.probs[id] = std::exp(dist.log_probs[id]);
    total += dist.probs[id];
  }
  for (std::size_t id = 0; id < n; ++id) dist.probs[id] /= total;
  return dist;
}

std::vector<BlockView> param_blocks(ModelParams& p) {
  auto mat = [](const std::string& name, Matrix& m) {
    return BlockView{name, std::span<double>(m.data().data(), m.data().size())};
  };
  auto vec = [](const std::string& name, Vector& v) {
    return BlockView{name, std::span<double>(v.data(), v.size())};
  };
  return {
      mat("T_g", p.lstm.T_g), mat("T_i", p.lstm.T_i), mat("T_f", p.lstm.T_f),
      mat("T_o", p.lstm.T_o), mat("R_g", p.lstm.R_g), mat("R_i", p.lstm.R_i),
      mat("R_f", p.lstm.R_f), mat("R_o", p.lstm.R_o), vec("b_g", p.lstm.b_g),
      vec("b_i", p.lstm.b_i), vec("b_f", p.lstm.b_f), vec("b_o", p.lstm.b_o),
      mat("T_I", p.T_I),      mat("T_s", p.T_s),      mat("M_g", p.M_g),
      mat("M_c", p.M_c),
  };
}

std::size_t param_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const auto& b : param_blocks(const_cast<ModelParams&>(p))) n += b.values.size();
  return n;
}

Vector flatten(const ModelParams& p) {
  Vector out;
  out.reserve(param_count(p));
  for (const auto& b : param_blocks(const_cast<ModelParams&>(p)))
    out.insert(out.end(), b.values.begin(), b.values.end());
  return out;
}

void unflatten(ModelParams& p, std::span<const double> flat) {
  std::size_t off = 0;
  for (auto& b : param_blocks(p)) {
    if (off + b.values.size() > flat.size())
      throw ValidationError("unflatten: flat vector too short");
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + b.values.size()),
              b.values.begin());
    off += b.values.size();
  }
  if (off != flat.size()) throw ValidationError("unflatten: flat vector too long");
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (auto& b : param_blocks(z))
    for (double& x : b.values) x = 0.0;
  return z;
}

}  // namespace lstmc
