#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "lstmc/data_io.hpp"
#include "lstmc/error.hpp"
#include "lstmc/rng.hpp"
#include "lstmc/vocab.hpp"

using namespace lstmc;

TEST_CASE("partition of a small vocabulary") {
  const Vocabulary v = Vocabulary::build({"a", "b"}, {"b", "z"});
  REQUIRE(v.size() == 5);
  // g-only by first appearance, sentinels, overlap, c-only
  CHECK(v.token(0) == "a");
  CHECK(v.token(1) == kStartToken);
  CHECK(v.token(2) == kEndToken);
  CHECK(v.token(3) == "b");
  CHECK(v.token(4) == "z");
  CHECK(v.token_case(v.require_id("a")) == TokenCase::g_only);
  CHECK(v.token_case(v.require_id("b")) == TokenCase::overlap);
  CHECK(v.token_case(v.require_id("z")) == TokenCase::c_only);
  CHECK(v.start_id() == 1);
  CHECK(v.end_id() == 2);
  CHECK(v.in_g(v.start_id()));
  CHECK_FALSE(v.in_c(v.start_id()));
}

TEST_CASE("empty detection list gives a pure generative vocabulary") {
  const Vocabulary v = Vocabulary::build({"a"}, {});
  CHECK(v.size() == 3);
  CHECK(v.c_ids().empty());
  CHECK(v.g_ids().size() == 3);
}

TEST_CASE("reserved sentinels are rejected") {
  CHECK_THROWS_AS(Vocabulary::build({"a"}, {kStartToken}), ValidationError);
  CHECK_THROWS_AS(Vocabulary::build({kEndToken}, {}), ValidationError);
}

TEST_CASE("random vocabularies match independent set arithmetic") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::string> paired, detect;
    for (int i = 0; i < 1000; ++i)
      paired.push_back("w" + std::to_string(rng.below(300)));
    for (int i = 0; i < 1000; ++i)
      detect.push_back("w" + std::to_string(200 + rng.below(300)));

    const Vocabulary v = Vocabulary::build(paired, detect);

    std::set<std::string> pset(paired.begin(), paired.end());
    std::set<std::string> dset(detect.begin(), detect.end());
    pset.insert(kStartToken);
    pset.insert(kEndToken);
    std::set<std::string> uni = pset;
    uni.insert(dset.begin(), dset.end());
    REQUIRE(v.size() == uni.size());

    std::size_t n_overlap = 0, n_g_only = 0, n_c_only = 0;
    for (std::size_t id = 0; id < v.size(); ++id) {
      const TokenId t = static_cast<TokenId>(id);
      const std::string& tok = v.token(t);
      const bool in_p = pset.count(tok) > 0, in_d = dset.count(tok) > 0;
      CHECK(v.in_g(t) == in_p);
      CHECK(v.in_c(t) == in_d);
      // exactly one case holds per token
      switch (v.token_case(t)) {
        case TokenCase::g_only:
          ++n_g_only;
          CHECK((in_p && !in_d));
          break;
        case TokenCase::overlap:
          ++n_overlap;
          CHECK((in_p && in_d));
          break;
        case TokenCase::c_only:
          ++n_c_only;
          CHECK((!in_p && in_d));
          break;
      }
    }
    CHECK(n_g_only + n_overlap + n_c_only == v.size());
    CHECK(v.g_ids().size() == pset.size());
    CHECK(v.c_ids().size() == dset.size());
  }
}

TEST_CASE("one-hot word features") {
  const Vocabulary v = Vocabulary::build({"a", "b", "c"}, {});
  const WordFeatures f = WordFeatures::one_hot(v);
  REQUIRE(f.dim() == 5);
  const Vector x = f.vector(2);
  CHECK(x == Vector{0.0, 0.0, 1.0, 0.0, 0.0});
  CHECK_THROWS_AS(f.vector(5), ValidationError);
  CHECK_THROWS_AS(f.vector(-1), ValidationError);

  // distinct one-hot features are orthogonal
  for (TokenId i = 0; i < 5; ++i)
    for (TokenId j = 0; j < 5; ++j)
      CHECK(dot(f.vector(i), f.vector(j)) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("combined features append the pretrained block") {
  const Vocabulary v = Vocabulary::build({"a", "b"}, {"z"});
  PretrainedVectors vecs;
  vecs.dim = 3;
  vecs.entries = {{"b", {0.1, -0.2, 0.3}}, {"missing", {9.0, 9.0, 9.0}}};
  std::size_t ignored = 0;
  const WordFeatures f = WordFeatures::combined(v, vecs, &ignored);
  CHECK(ignored == 1);
  REQUIRE(f.dim() == v.size() + 3);

  const TokenId b = v.require_id("b");
  const Vector xb = f.vector(b);
  CHECK(xb[static_cast<std::size_t>(b)] == 1.0);
  CHECK(xb[v.size() + 0] == 0.1);
  CHECK(xb[v.size() + 1] == -0.2);
  CHECK(xb[v.size() + 2] == 0.3);

  // token without a pretrained vector falls back to the zero block
  const TokenId a = v.require_id("a");
  const Vector xa = f.vector(a);
  for (std::size_t j = 0; j < 3; ++j) CHECK(xa[v.size() + j] == 0.0);
}

TEST_CASE("combined feature oracle against an input file") {
  const Vocabulary v = Vocabulary::build({"cat", "dog"}, {"bird"});
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "lstmc_vocab_vectors_test.txt";
  {
    std::ofstream out(path);
    out << "cat 0.5 -0.25\nbird 1.5 2.5\n";
  }
  const PretrainedVectors vecs = load_pretrained_vectors(path.string());
  REQUIRE(vecs.dim == 2);
  const WordFeatures f = WordFeatures::combined(v, vecs);
  const Vector xc = f.vector(v.require_id("cat"));
  CHECK(xc[v.size() + 0] == 0.5);
  CHECK(xc[v.size() + 1] == -0.25);
  const Vector xb = f.vector(v.require_id("bird"));
  CHECK(xb[v.size() + 0] == 1.5);
  CHECK(xb[v.size() + 1] == 2.5);
  std::filesystem::remove(path);
}

TEST_CASE("vocab file round-trip preserves ordering and flags") {
  const Vocabulary v = Vocabulary::build({"a", "b", "c", "b"}, {"b", "z", "q"});
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "lstmc_vocab_roundtrip_test.tsv";
  save_vocab(path.string(), v);
  const Vocabulary loaded = load_vocab(path.string());
  REQUIRE(loaded.size() == v.size());
  for (std::size_t id = 0; id < v.size(); ++id) {
    const TokenId t = static_cast<TokenId>(id);
    CHECK(loaded.token(t) == v.token(t));
    CHECK(loaded.in_g(t) == v.in_g(t));
    CHECK(loaded.in_c(t) == v.in_c(t));
  }
  CHECK(loaded.start_id() == v.start_id());
  CHECK(loaded.end_id() == v.end_id());
  std::filesystem::remove(path);
}

TEST_CASE("detection scores validate membership and range") {
  const Vocabulary v = Vocabulary::build({"a", "b"}, {"b", "z"});
  DetectionScores d(v);
  d.set(v, v.require_id("z"), 0.7);
  CHECK(d.get(v, v.require_id("z")) == 0.7);
  CHECK(d.get(v, v.require_id("b")) == 0.0);  // absent reads 0
  CHECK_THROWS_AS(d.set(v, v.require_id("a"), 0.5), ValidationError);
  CHECK_THROWS_AS(d.set(v, v.require_id("z"), 1.5), ValidationError);
  CHECK_THROWS_AS(d.set(v, v.require_id("z"), -0.1), ValidationError);
}
