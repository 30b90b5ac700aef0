#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "lstmc/tensor.hpp"

namespace lstmc {

using TokenId = int;

inline constexpr const char* kStartToken = "<s>";
inline constexpr const char* kEndToken = "</s>";

enum class TokenCase { g_only, overlap, c_only };

// Partitioned token universe: paired-data words (in_g), detection words
// (in_c), and their overlap. Index order is deterministic: g-only tokens by
// first appearance, then the sentinels, then overlap, then c-only. Immutable
// after construction.
class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  TokenId id_of(const std::string& token) const;          // -1 when absent
  TokenId require_id(const std::string& token) const;     // throws when absent

  bool in_g(TokenId id) const { return flags_.at(static_cast<std::size_t>(id)).in_g; }
  bool in_c(TokenId id) const { return flags_.at(static_cast<std::size_t>(id)).in_c; }
  TokenCase token_case(TokenId id) const;

  TokenId start_id() const { return start_id_; }
  TokenId end_id() const { return end_id_; }

  // Token ids of W_g and W_c in ascending order.
  const std::vector<TokenId>& g_ids() const { return g_ids_; }
  const std::vector<TokenId>& c_ids() const { return c_ids_; }

  // Position of a token inside g_ids()/c_ids(), or -1.
  int g_index(TokenId id) const { return g_index_[static_cast<std::size_t>(id)]; }
  int c_index(TokenId id) const { return c_index_[static_cast<std::size_t>(id)]; }

  bool valid(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }

  static Vocabulary build(const std::vector<std::string>& paired_tokens,
                          const std::vector<std::string>& detection_tokens);

  // Reconstruction from explicit (token, in_g, in_c) rows in index order;
  // used by checkpoint loading. Sentinels must be present.
  struct Entry {
    std::string token;
    bool in_g = false;
    bool in_c = false;
  };
  static Vocabulary from_entries(const std::vector<Entry>& entries);
  std::vector<Entry> entries() const;

 private:
  struct Flags {
    bool in_g = false;
    bool in_c = false;
  };

  void finalize();  // builds index maps, id lists, locates sentinels

  std::vector<std::string> tokens_;
  std::vector<Flags> flags_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId start_id_ = -1;
  TokenId end_id_ = -1;
  std::vector<TokenId> g_ids_, c_ids_;
  std::vector<int> g_index_, c_index_;
};

enum class FeatureMode { one_hot, one_hot_plus_pretrained };

// Pretrained word vectors loaded from text ("token v1 .. vD" per line).
struct PretrainedVectors {
  int dim = 0;
  std::vector<std::pair<std::string, Vector>> entries;
};

// Word feature construction over the union vocabulary. In one_hot mode the
// feature is a |U|-dim indicator; in combined mode a pretrained block is
// appended (zero for tokens without a vector).
class WordFeatures {
 public:
  static WordFeatures one_hot(const Vocabulary& vocab);
  // Returns the features plus the count of file entries ignored because the
  // token is not in the vocabulary.
  static WordFeatures combined(const Vocabulary& vocab, const PretrainedVectors& vecs,
                               std::size_t* ignored_count = nullptr);

  FeatureMode mode() const { return mode_; }
  std::size_t dim() const { return union_size_ + pretrained_dim_; }
  std::size_t union_size() const { return union_size_; }
  std::size_t pretrained_dim() const { return pretrained_dim_; }

  Vector vector(TokenId id) const;  // dense D_w feature
  const double* pretrained_row(TokenId id) const;  // null in one_hot mode

  const Matrix& pretrained_table() const { return pretrained_; }
  void set_pretrained_table(Matrix table);  // checkpoint loading

 private:
  FeatureMode mode_ = FeatureMode::one_hot;
  std::size_t union_size_ = 0;
  std::size_t pretrained_dim_ = 0;
  Matrix pretrained_;  // union_size x pretrained_dim, combined mode only
};

// Detection scores over W_c tokens; absent entries read 0, values in [0,1].
class DetectionScores {
 public:
  DetectionScores() = default;
  explicit DetectionScores(const Vocabulary& vocab)
      : scores_(vocab.c_ids().size(), 0.0) {}

  // Throws if the token is not in W_c or the score is outside [0,1].
  void set(const Vocabulary& vocab, TokenId id, double score);
  double get(const Vocabulary& vocab, TokenId id) const;

  // Score aligned with vocab.c_ids() order; a default-constructed object
  // reads 0 everywhere.
  double at_c_index(std::size_t c_idx) const {
    return scores_.empty() ? 0.0 : scores_.at(c_idx);
  }
  std::size_t c_count() const { return scores_.size(); }

 private:
  std::vector<double> scores_;
};

}  // namespace lstmc
