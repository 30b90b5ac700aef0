#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lstmc/error.hpp"
#include "lstmc/model.hpp"
#include "lstmc/rng.hpp"
#include "oracles.hpp"

using namespace lstmc;

namespace {

LstmParams zero_lstm(std::size_t d_e, std::size_t d_h) {
  LstmParams p;
  p.T_g = Matrix(d_h, d_e);
  p.T_i = Matrix(d_h, d_e);
  p.T_f = Matrix(d_h, d_e);
  p.T_o = Matrix(d_h, d_e);
  p.R_g = Matrix(d_h, d_h);
  p.R_i = Matrix(d_h, d_h);
  p.R_f = Matrix(d_h, d_h);
  p.R_o = Matrix(d_h, d_h);
  p.b_g = Vector(d_h, 0.0);
  p.b_i = Vector(d_h, 0.0);
  p.b_f = Vector(d_h, 0.0);
  p.b_o = Vector(d_h, 0.0);
  return p;
}

Vocabulary toy_vocab() {
  // 2 g-only words + sentinels, 2 overlap, 1 c-only -> union of 7
  return Vocabulary::build({"red", "blue", "cat", "dog"}, {"cat", "dog", "fox"});
}

}  // namespace

TEST_CASE("lstm_step with zero parameters and unit previous cell") {
  LstmParams p = zero_lstm(2, 2);
  LstmState prev{Vector{0.0, 0.0}, Vector{1.0, 1.0}};
  const LstmState next = lstm_step(p, Vector{0.3, -0.7}, prev);
  // gates all sigma(0)=0.5, cell input tanh(0)=0
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(next.c[k] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(next.h[k] == doctest::Approx(std::tanh(0.5) * 0.5).epsilon(1e-15));
  }
}

TEST_CASE("lstm_step fixed point at the origin") {
  LstmParams p = zero_lstm(3, 2);
  const LstmState next = lstm_step(p, Vector{0.0, 0.0, 0.0}, zero_state(2));
  CHECK(next.h == Vector{0.0, 0.0});
  CHECK(next.c == Vector{0.0, 0.0});
}

TEST_CASE("lstm_step matches a straight-line reference") {
  Rng rng(31);
  LstmParams p = zero_lstm(4, 4);
  for (Matrix* m : {&p.T_g, &p.T_i, &p.T_f, &p.T_o, &p.R_g, &p.R_i, &p.R_f, &p.R_o})
    for (double& x : m->data()) x = rng.uniform(-1.0, 1.0);
  for (Vector* v : {&p.b_g, &p.b_i, &p.b_f, &p.b_o})
    for (double& x : *v) x = rng.uniform(-0.5, 0.5);

  for (int trial = 0; trial < 20; ++trial) {
    Vector x(4), h(4), c(4);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    for (double& v : h) v = rng.uniform(-0.9, 0.9);
    for (double& v : c) v = rng.uniform(-2.0, 2.0);
    const LstmState got = lstm_step(p, x, {h, c});
    std::vector<double> h_ref, c_ref;
    oracle::straight_lstm_step(p, x, h, c, h_ref, c_ref);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(got.h[k] == doctest::Approx(h_ref[k]).epsilon(1e-14));
      CHECK(got.c[k] == doctest::Approx(c_ref[k]).epsilon(1e-14));
    }
  }
}

TEST_CASE("lstm_step output stays strictly inside (-1,1)") {
  Rng rng(32);
  LstmParams p = zero_lstm(3, 5);
  for (Matrix* m : {&p.T_g, &p.T_i, &p.T_f, &p.T_o, &p.R_g, &p.R_i, &p.R_f, &p.R_o})
    for (double& x : m->data()) x = rng.uniform(-50.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vector x(3), h(5), c(5);
    for (double& v : x) v = rng.uniform(-100.0, 100.0);
    for (double& v : h) v = rng.uniform(-1.0, 1.0);
    for (double& v : c) v = rng.uniform(-100.0, 100.0);
    const LstmState next = lstm_step(p, x, {h, c});
    for (double v : next.h) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("embed_image") {
  Rng rng(33);
  const Vocabulary v = toy_vocab();
  const WordFeatures f = WordFeatures::one_hot(v);
  ModelParams p = init_params({5, f.dim(), 3, 4}, 0.2, 7);

  CHECK(embed_image(p, Vector(5, 0.0)) == Vector(3, 0.0));

  // identity map when D_e == D_v
  ModelParams q = init_params({3, f.dim(), 3, 4}, 0.2, 7);
  q.T_I = Matrix(3, 3);
  for (int i = 0; i < 3; ++i) q.T_I(i, i) = 1.0;
  const Vector img{0.5, -1.5, 2.0};
  CHECK(embed_image(q, img) == img);

  // random 5 -> 3 map against matvec
  Vector image(5);
  for (double& x : image) x = rng.uniform(-1.0, 1.0);
  CHECK(embed_image(p, image) == matvec(p.T_I, image));

  CHECK_THROWS_AS(embed_image(p, Vector(4, 1.0)), ValidationError);
}

TEST_CASE("embed_word equals T_s times the dense feature") {
  Rng rng(34);
  const Vocabulary v = toy_vocab();

  SUBCASE("one_hot mode selects a column") {
    const WordFeatures f = WordFeatures::one_hot(v);
    ModelParams p = init_params({4, f.dim(), 3, 4}, 0.2, 9);
    for (std::size_t id = 0; id < v.size(); ++id) {
      const Vector direct = embed_word(p, f, static_cast<TokenId>(id));
      const Vector full = matvec(p.T_s, f.vector(static_cast<TokenId>(id)));
      for (std::size_t r = 0; r < direct.size(); ++r)
        CHECK(direct[r] == doctest::Approx(full[r]).epsilon(1e-15));
    }
    p.T_s = Matrix(3, f.dim());
    CHECK(embed_word(p, f, 0) == Vector(3, 0.0));
    CHECK_THROWS_AS(embed_word(p, f, static_cast<TokenId>(v.size())), ValidationError);
  }

  SUBCASE("combined mode") {
    PretrainedVectors vecs;
    vecs.dim = 3;
    for (const char* tok : {"cat", "dog", "fox"}) {
      Vector w(3);
      for (double& x : w) x = rng.uniform(-1.0, 1.0);
      vecs.entries.emplace_back(tok, w);
    }
    const WordFeatures f = WordFeatures::combined(v, vecs);
    ModelParams p = init_params({4, f.dim(), 3, 4}, 0.2, 10);
    for (std::size_t id = 0; id < v.size(); ++id) {
      const Vector direct = embed_word(p, f, static_cast<TokenId>(id));
      const Vector full = matvec(p.T_s, f.vector(static_cast<TokenId>(id)));
      for (std::size_t r = 0; r < direct.size(); ++r)
        CHECK(direct[r] == doctest::Approx(full[r]).epsilon(1e-14));
    }
  }
}

TEST_CASE("generative_scores") {
  Rng rng(35);
  const Vocabulary v = toy_vocab();
  const WordFeatures f = WordFeatures::one_hot(v);
  ModelParams p = init_params({4, f.dim(), 3, 4}, 0.2, 11);

  CHECK(generative_scores(p, f, v, Vector(4, 0.0)) == Vector(v.g_ids().size(), 0.0));
  ModelParams zero_head = p;
  zero_head.M_g = Matrix(f.dim(), 4);
  Vector h(4);
  for (double& x : h) x = rng.uniform(-1.0, 1.0);
  CHECK(generative_scores(zero_head, f, v, h) == Vector(v.g_ids().size(), 0.0));

  // explicit w^T (M_g h) loop per token
  const Vector got = generative_scores(p, f, v, h);
  const Vector mgh = matvec(p.M_g, h);
  for (std::size_t gi = 0; gi < v.g_ids().size(); ++gi) {
    const Vector fw = f.vector(v.g_ids()[gi]);
    double expected = 0.0;
    for (std::size_t r = 0; r < fw.size(); ++r) expected += fw[r] * mgh[r];
    CHECK(got[gi] == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("copy_scores hand oracle with gating") {
  const Vocabulary v = toy_vocab();
  const WordFeatures f = WordFeatures::one_hot(v);
  ModelParams p = init_params({4, f.dim(), 3, 3}, 0.2, 12);
  Rng rng(36);
  for (double& x : p.M_c.data()) x = rng.uniform(-1.0, 1.0);

  DetectionScores delta(v);
  const std::vector<TokenId>& cids = v.c_ids();
  REQUIRE(cids.size() == 3);
  delta.set(v, cids[0], 1.0);
  delta.set(v, cids[1], 0.5);
  delta.set(v, cids[2], 0.0);

  Vector h{0.3, -0.8, 0.5};
  const Vector got = copy_scores(p, f, v, h, delta);
  for (std::size_t ci = 0; ci < cids.size(); ++ci) {
    double s = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
      s += std::tanh(p.M_c(static_cast<std::size_t>(cids[ci]), k)) * h[k];
    const double expected = s * delta.at_c_index(ci);
    CHECK(got[ci] == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(got[2] == 0.0);  // delta = 0 forces an exact zero

  CHECK(copy_scores(p, f, v, Vector(3, 0.0), delta) == Vector(3, 0.0));
}

TEST_CASE("fuse gives uniform distribution for all-zero scores") {
  const Vocabulary v = toy_vocab();
  ModelParams p;
  for (double lambda : {0.0, 0.2, 0.7, 1.0}) {
    p.lambda = lambda;
    const StepDistribution d = fuse(p, Vector(v.g_ids().size(), 0.0),
                                    Vector(v.c_ids().size(), 0.0), v, DetectionScores(v));
    for (double prob : d.probs)
      CHECK(prob == doctest::Approx(1.0 / static_cast<double>(v.size())).epsilon(1e-14));
  }
}

TEST_CASE("fuse with empty W_c is an exact softmax over W_g") {
  const Vocabulary v = Vocabulary::build({"a", "b", "c"}, {});
  ModelParams p;
  p.lambda = 0.2;
  Rng rng(37);
  Vector gen(v.g_ids().size());
  for (double& x : gen) x = rng.uniform(-3.0, 3.0);
  const StepDistribution d = fuse(p, gen, {}, v, DetectionScores(v));
  double z = 0.0;
  for (double s : gen) z += std::exp(s);
  for (std::size_t gi = 0; gi < gen.size(); ++gi) {
    const std::size_t id = static_cast<std::size_t>(v.g_ids()[gi]);
    CHECK(d.probs[id] == doctest::Approx(std::exp(gen[gi]) / z).epsilon(1e-13));
  }
}

TEST_CASE("fuse matches the naive literal evaluation") {
  const Vocabulary v = toy_vocab();
  Rng rng(38);
  ModelParams p;
  p.lambda = 0.2;
  for (int trial = 0; trial < 200; ++trial) {
    Vector gen(v.g_ids().size()), copy(v.c_ids().size());
    for (double& x : gen) x = rng.uniform(-4.0, 4.0);
    for (double& x : copy) x = rng.uniform(-4.0, 4.0);
    DetectionScores delta(v);
    for (TokenId c : v.c_ids()) delta.set(v, c, rng.uniform());
    const StepDistribution d = fuse(p, gen, copy, v, delta);
    const std::vector<double> expected = oracle::naive_fuse(p.lambda, gen, copy, v, delta);
    for (std::size_t id = 0; id < v.size(); ++id)
      CHECK(std::abs(d.probs[id] - expected[id]) < 1e-12);
  }
}

TEST_CASE("fuse normalization across partitions and lambdas") {
  Rng rng(39);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n_g = 1 + rng.below(6);
    const std::size_t n_overlap = rng.below(4);
    const std::size_t n_c = rng.below(4);
    std::vector<std::string> paired, detect;
    for (std::size_t i = 0; i < n_g; ++i) paired.push_back("g" + std::to_string(i));
    for (std::size_t i = 0; i < n_overlap; ++i) {
      paired.push_back("o" + std::to_string(i));
      detect.push_back("o" + std::to_string(i));
    }
    for (std::size_t i = 0; i < n_c; ++i) detect.push_back("c" + std::to_string(i));
    const Vocabulary v = Vocabulary::build(paired, detect);

    ModelParams p;
    p.lambda = std::vector<double>{0.0, 0.2, 1.0}[rng.below(3)];
    Vector gen(v.g_ids().size()), copy(v.c_ids().size());
    for (double& x : gen) x = rng.uniform(-300.0, 300.0);
    for (double& x : copy) x = rng.uniform(-300.0, 300.0);
    DetectionScores delta(v);
    for (TokenId c : v.c_ids()) delta.set(v, c, rng.uniform());

    const StepDistribution d = fuse(p, gen, copy, v, delta);
    double total = 0.0;
    for (double prob : d.probs) {
      CHECK(prob >= 0.0);
      total += prob;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    for (std::size_t id = 0; id < v.size(); ++id)
      if (d.probs[id] > 0.0)
        CHECK(std::abs(d.probs[id] - std::exp(d.log_probs[id])) < 1e-12);
  }
}

TEST_CASE("lambda moves only overlap masses") {
  const Vocabulary v = toy_vocab();
  Rng rng(40);
  Vector gen(v.g_ids().size()), copy(v.c_ids().size());
  for (double& x : gen) x = rng.uniform(-2.0, 2.0);
  for (double& x : copy) x = rng.uniform(-2.0, 2.0);
  DetectionScores delta(v);
  for (TokenId c : v.c_ids()) delta.set(v, c, rng.uniform());

  ModelParams p1, p2;
  p1.lambda = 0.15;
  p2.lambda = 0.85;
  const StepDistribution d1 = fuse(p1, gen, copy, v, delta);
  const StepDistribution d2 = fuse(p2, gen, copy, v, delta);
  // non-overlap tokens keep their unnormalized mass, so their log-prob shift
  // is a common constant (the renormalization)
  double shift = 0.0;
  bool first = true;
  for (std::size_t id = 0; id < v.size(); ++id) {
    if (v.token_case(static_cast<TokenId>(id)) == TokenCase::overlap) continue;
    const double diff = d1.log_probs[id] - d2.log_probs[id];
    if (first) {
      shift = diff;
      first = false;
    } else {
      CHECK(diff == doctest::Approx(shift).epsilon(1e-12));
    }
  }
}

TEST_CASE("a c-only token with zero copy score still gets unit mass") {
  const Vocabulary v = Vocabulary::build({"a"}, {"c0", "c1"});
  ModelParams p;
  p.lambda = 0.2;
  Vector gen(v.g_ids().size(), 0.0);
  Vector copy{0.0, 1.3};  // c0 gated to zero score, c1 has score 1.3
  DetectionScores delta(v);
  delta.set(v, v.require_id("c0"), 0.0);
  delta.set(v, v.require_id("c1"), 1.0);
  const StepDistribution d = fuse(p, gen, copy, v, delta);
  const std::size_t c0 = static_cast<std::size_t>(v.require_id("c0"));
  const std::size_t c1 = static_cast<std::size_t>(v.require_id("c1"));
  // log mass difference equals the score difference
  CHECK(d.log_probs[c0] - d.log_probs[c1] == doctest::Approx(0.0 - 1.3).epsilon(1e-13));

  // with the detection-floor mask on, the undetected token is removed
  Mask mask{true, 0.1};
  const StepDistribution dm = fuse(p, gen, copy, v, delta, mask);
  CHECK(dm.probs[c0] == 0.0);
  CHECK(std::isinf(dm.log_probs[c0]));
  double total = 0.0;
  for (double prob : dm.probs) total += prob;
  CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("final probability is monotone in delta for a c-only token") {
  const Vocabulary v = toy_vocab();
  const WordFeatures f = WordFeatures::one_hot(v);
  ModelParams p = init_params({4, f.dim(), 3, 3}, 0.2, 13);
  Rng rng(41);
  Vector h{0.4, -0.6, 0.7};
  const TokenId fox = v.require_id("fox");
  const std::size_t fox_ci = static_cast<std::size_t>(v.c_index(fox));

  for (double sign : {1.0, -1.0}) {
    // force the sign of tanh(row) . h
    for (std::size_t k = 0; k < 3; ++k)
      p.M_c(static_cast<std::size_t>(fox), k) = sign * h[k];  // tanh keeps the sign
    double prev_prob = -1.0;
    bool increasing = true, decreasing = true;
    for (double dval : {0.1, 0.4, 0.7, 1.0}) {
      DetectionScores delta(v);
      for (TokenId c : v.c_ids()) delta.set(v, c, 0.5);
      delta.set(v, fox, dval);
      const Vector gen = generative_scores(p, f, v, h);
      const Vector copy = copy_scores(p, f, v, h, delta);
      const StepDistribution d = fuse(p, gen, copy, v, delta);
      const double prob = d.probs[static_cast<std::size_t>(fox)];
      if (prev_prob >= 0.0) {
        increasing = increasing && prob > prev_prob;
        decreasing = decreasing && prob < prev_prob;
      }
      prev_prob = prob;
      CHECK(copy[fox_ci] * sign >= 0.0);
    }
    if (sign > 0) CHECK(increasing);
    if (sign < 0) CHECK(decreasing);
  }
}

TEST_CASE("flatten and unflatten round-trip") {
  const Vocabulary v = toy_vocab();
  const WordFeatures f = WordFeatures::one_hot(v);
  ModelParams p = init_params({4, f.dim(), 3, 5}, 0.2, 14);
  const Vector flat = flatten(p);
  CHECK(flat.size() == param_count(p));
  ModelParams q = zeros_like(p);
  unflatten(q, flat);
  CHECK(flatten(q) == flat);
  CHECK_THROWS_AS(unflatten(q, std::span<const double>(flat.data(), flat.size() - 1)),
                  ValidationError);
}

TEST_CASE("init_params validates inputs") {
  CHECK_THROWS_AS(init_params({0, 4, 4, 4}, 0.2, 1), ValidationError);
  CHECK_THROWS_AS(init_params({4, 4, 4, 4}, 1.5, 1), ValidationError);
  CHECK_THROWS_AS(init_params({4, 4, 4, 4}, -0.1, 1), ValidationError);
}
