#include "lstmc/vocab.hpp"

#include <algorithm>

#include "lstmc/error.hpp"

namespace lstmc {

const std::string& Vocabulary::token(TokenId id) const {
  if (!valid(id)) throw ValidationError("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

TokenId Vocabulary::require_id(const std::string& token) const {
  TokenId id = id_of(token);
  if (id < 0) throw ValidationError("unknown token: '" + token + "'");
  return id;
}

TokenCase Vocabulary::token_case(TokenId id) const {
  const Flags& f = flags_.at(static_cast<std::size_t>(id));
  if (f.in_g && f.in_c) return TokenCase::overlap;
  if (f.in_g) return TokenCase::g_only;
  return TokenCase::c_only;
}

namespace {

void check_token_string(const std::string& t) {
  if (t.empty()) throw ValidationError("empty token string");
  for (char c : t) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
      throw ValidationError("token contains whitespace: '" + t + "'");
  }
}

}  // namespace

Vocabulary Vocabulary::build(const std::vector<std::string>& paired_tokens,
                             const std::vector<std::string>& detection_tokens) {
  if (paired_tokens.empty()) throw ValidationError("paired token list is empty");
  for (const auto& t : detection_tokens) {
    if (t == kStartToken || t == kEndToken)
      throw ValidationError("reserved sentinel '" + t + "' in detection tokens");
  }
  for (const auto& t : paired_tokens) {
    if (t == kStartToken || t == kEndToken)
      throw ValidationError("reserved sentinel '" + t + "' in paired tokens");
  }

  // Distinct tokens by first appearance.
  std::vector<std::string> paired_order, detect_order;
  std::unordered_map<std::string, int> seen;
  for (const auto& t : paired_tokens) {
    check_token_string(t);
    if (seen.emplace(t, 1).second) paired_order.push_back(t);
  }
  seen.clear();
  std::unordered_map<std::string, int> in_detect;
  for (const auto& t : detection_tokens) {
    check_token_string(t);
    if (in_detect.emplace(t, 1).second) detect_order.push_back(t);
  }
  std::unordered_map<std::string, int> in_paired;
  for (const auto& t : paired_order) in_paired.emplace(t, 1);

  Vocabulary v;
  auto push = [&v](const std::string& t, bool g, bool c) {
    v.tokens_.push_back(t);
    v.flags_.push_back({g, c});
  };
  // g-only by first appearance, sentinels appended to W_g
  for (const auto& t : paired_order)
    if (!in_detect.count(t)) push(t, true, false);
  push(kStartToken, true, false);
  push(kEndToken, true, false);
  // overlap by first appearance in the paired stream
  for (const auto& t : paired_order)
    if (in_detect.count(t)) push(t, true, true);
  // c-only by first appearance in the detection stream
  for (const auto& t : detect_order)
    if (!in_paired.count(t)) push(t, false, true);

  v.finalize();
  return v;
}

Vocabulary Vocabulary::from_entries(const std::vector<Entry>& entries) {
  Vocabulary v;
  for (const auto& e : entries) {
    check_token_string(e.token);
    if (!e.in_g && !e.in_c)
      throw ValidationError("token '" + e.token + "' belongs to neither W_g nor W_c");
    v.tokens_.push_back(e.token);
    v.flags_.push_back({e.in_g, e.in_c});
  }
  v.finalize();
  return v;
}

std::vector<Vocabulary::Entry> Vocabulary::entries() const {
  std::vector<Entry> out;
  out.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    out.push_back({tokens_[i], flags_[i].in_g, flags_[i].in_c});
  return out;
}

void Vocabulary::finalize() {
  index_.clear();
  g_ids_.clear();
  c_ids_.clear();
  g_index_.assign(tokens_.size(), -1);
  c_index_.assign(tokens_.size(), -1);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw ValidationError("duplicate token: '" + tokens_[i] + "'");
    if (flags_[i].in_g) {
      g_index_[i] = static_cast<int>(g_ids_.size());
      g_ids_.push_back(static_cast<TokenId>(i));
    }
    if (flags_[i].in_c) {
      c_index_[i] = static_cast<int>(c_ids_.size());
      c_ids_.push_back(static_cast<TokenId>(i));
    }
  }
  start_id_ = id_of(kStartToken);
  end_id_ = id_of(kEndToken);
  if (start_id_ < 0 || end_id_ < 0)
    throw ValidationError("vocabulary is missing sentinel tokens");
  if (in_c(start_id_) || in_c(end_id_) || !in_g(start_id_) || !in_g(end_id_))
    throw ValidationError("sentinel tokens must be W_g-only");
}

WordFeatures WordFeatures::one_hot(const Vocabulary& vocab) {
  WordFeatures f;
  f.mode_ = FeatureMode::one_hot;
  f.union_size_ = vocab.size();
  f.pretrained_dim_ = 0;
  return f;
}

WordFeatures WordFeatures::combined(const Vocabulary& vocab, const PretrainedVectors& vecs,
                                    std::size_t* ignored_count) {
  if (vecs.dim <= 0) throw ValidationError("pretrained vector dimension must be positive");
  WordFeatures f;
  f.mode_ = FeatureMode::one_hot_plus_pretrained;
  f.union_size_ = vocab.size();
  f.pretrained_dim_ = static_cast<std::size_t>(vecs.dim);
  f.pretrained_ = Matrix(f.union_size_, f.pretrained_dim_, 0.0);
  std::size_t ignored = 0;
  for (const auto& [token, values] : vecs.entries) {
    if (values.size() != f.pretrained_dim_)
      throw ValidationError("pretrained vector for '" + token + "' has length " +
                            std::to_string(values.size()) + ", expected " +
                            std::to_string(f.pretrained_dim_));
    TokenId id = vocab.id_of(token);
    if (id < 0) {
      ++ignored;
      continue;
    }
    double* row = f.pretrained_.row(static_cast<std::size_t>(id));
    std::copy(values.begin(), values.end(), row);
  }
  if (ignored_count) *ignored_count = ignored;
  return f;
}

Vector WordFeatures::vector(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= union_size_)
    throw ValidationError("word_feature: token id out of range: " + std::to_string(id));
  Vector out(dim(), 0.0);
  out[static_cast<std::size_t>(id)] = 1.0;
  if (mode_ == FeatureMode::one_hot_plus_pretrained) {
    const double* row = pretrained_.row(static_cast<std::size_t>(id));
    for (std::size_t j = 0; j < pretrained_dim_; ++j) out[union_size_ + j] = row[j];
  }
  return out;
}

const double* WordFeatures::pretrained_row(TokenId id) const {
  if (mode_ == FeatureMode::one_hot) return nullptr;
  if (id < 0 || static_cast<std::size_t>(id) >= union_size_)
    throw ValidationError("pretrained_row: token id out of range: " + std::to_string(id));
  return pretrained_.row(static_cast<std::size_t>(id));
}

void WordFeatures::set_pretrained_table(Matrix table) {
  if (table.rows() != union_size_ || table.cols() != pretrained_dim_)
    throw ValidationError("pretrained table shape mismatch");
  pretrained_ = std::move(table);
}

void DetectionScores::set(const Vocabulary& vocab, TokenId id, double score) {
  int ci = vocab.valid(id) ? vocab.c_index(id) : -1;
  if (ci < 0)
    throw ValidationError("detection score for token '" +
                          (vocab.valid(id) ? vocab.token(id) : std::to_string(id)) +
                          "' which is not in W_c");
  if (!(score >= 0.0 && score <= 1.0))
    throw ValidationError("detection score out of [0,1] for token '" + vocab.token(id) +
                          "': " + std::to_string(score));
  if (scores_.empty()) scores_.resize(vocab.c_ids().size(), 0.0);
  scores_.at(static_cast<std::size_t>(ci)) = score;
}

double DetectionScores::get(const Vocabulary& vocab, TokenId id) const {
  int ci = vocab.valid(id) ? vocab.c_index(id) : -1;
  if (ci < 0) return 0.0;
  return at_c_index(static_cast<std::size_t>(ci));
}

}  // namespace lstmc
