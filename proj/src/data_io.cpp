#include "lstmc/data_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "lstmc/error.hpp"
#include "lstmc/rng.hpp"

namespace lstmc {

namespace {

std::string line_err(const std::string& path, std::size_t line_no, const std::string& what) {
  return path + ":" + std::to_string(line_no) + ": " + what;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> parts;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) parts.push_back(tok);
  return parts;
}

double parse_double(const std::string& s, const std::string& path, std::size_t line_no) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw IoError(line_err(path, line_no, "malformed number '" + s + "'"));
  return v;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, 8);
}

std::uint64_t read_u64_le(std::istream& in, const std::string& path) {
  char buf[8];
  in.read(buf, 8);
  if (in.gcount() != 8)
    throw IoError("checkpoint truncated at offset " +
                  std::to_string(static_cast<long long>(in.tellg())) + ": " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

void write_f64_le(std::ostream& out, double d) {
  write_u64_le(out, std::bit_cast<std::uint64_t>(d));
}

double read_f64_le(std::istream& in, const std::string& path) {
  return std::bit_cast<double>(read_u64_le(in, path));
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::vector<RawRecord> read_records(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 4)
      throw IoError(line_err(path, line_no, "expected 4 tab-separated fields, got " +
                                                std::to_string(fields.size())));
    RawRecord rec;
    rec.id = fields[0];
    if (rec.id.empty()) throw IoError(line_err(path, line_no, "empty record id"));
    for (const std::string& f : split(fields[1], ','))
      rec.features.push_back(parse_double(f, path, line_no));
    rec.caption = split_ws(fields[2]);
    if (!fields[3].empty()) {
      for (const std::string& entry : split(fields[3], ';')) {
        const std::size_t colon = entry.rfind(':');
        if (colon == std::string::npos || colon == 0)
          throw IoError(line_err(path, line_no, "malformed detection entry '" + entry + "'"));
        rec.detections.emplace_back(entry.substr(0, colon),
                                    parse_double(entry.substr(colon + 1), path, line_no));
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_records(const std::string& path, const std::vector<RawRecord>& records) {
  std::ofstream out = open_out(path);
  for (const RawRecord& rec : records) {
    out << rec.id << '\t';
    for (std::size_t i = 0; i < rec.features.size(); ++i) {
      if (i) out << ',';
      out << format_double(rec.features[i]);
    }
    out << '\t';
    for (std::size_t i = 0; i < rec.caption.size(); ++i) {
      if (i) out << ' ';
      out << rec.caption[i];
    }
    out << '\t';
    for (std::size_t i = 0; i < rec.detections.size(); ++i) {
      if (i) out << ';';
      out << rec.detections[i].first << ':' << format_double(rec.detections[i].second);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace {

DetectionScores map_detections(const RawRecord& rec, const Vocabulary& vocab,
                               const LoadOptions& opts) {
  DetectionScores scores(vocab);
  for (const auto& [token, value] : rec.detections) {
    const TokenId id = vocab.id_of(token);
    if (id < 0 || vocab.c_index(id) < 0) {
      if (opts.unknown_detections == UnknownDetectionPolicy::drop) continue;
      throw ValidationError("record '" + rec.id + "': detection score for token '" + token +
                            "' which is not in W_c");
    }
    scores.set(vocab, id, value);
  }
  return scores;
}

}  // namespace

Dataset make_training_dataset(const std::vector<RawRecord>& records, const Vocabulary& vocab,
                              const LoadOptions& opts) {
  if (records.empty()) throw ValidationError("dataset has no records");
  Dataset ds;
  ds.feature_dim = records.front().features.size();
  for (const RawRecord& rec : records) {
    TrainingExample ex;
    ex.id = rec.id;
    ex.image_feature = rec.features;
    if (rec.caption.empty())
      throw ValidationError("record '" + rec.id + "': empty caption in a training dataset");
    ex.tokens.push_back(vocab.start_id());
    for (const std::string& tok : rec.caption) {
      const TokenId id = vocab.id_of(tok);
      if (id < 0)
        throw ValidationError("record '" + rec.id + "': caption token '" + tok +
                              "' outside W_g ∪ W_c");
      ex.tokens.push_back(id);
    }
    ex.tokens.push_back(vocab.end_id());
    ex.detections = map_detections(rec, vocab, opts);
    validate_example(ex, vocab, ds.feature_dim);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

std::vector<DecodeInput> make_decode_inputs(const std::vector<RawRecord>& records,
                                            const Vocabulary& vocab, const LoadOptions& opts) {
  std::vector<DecodeInput> inputs;
  inputs.reserve(records.size());
  for (const RawRecord& rec : records) {
    DecodeInput in;
    in.id = rec.id;
    in.image_feature = rec.features;
    in.detections = map_detections(rec, vocab, opts);
    inputs.push_back(std::move(in));
  }
  return inputs;
}

Dataset load_dataset(const std::string& path, const Vocabulary& vocab,
                     const LoadOptions& opts) {
  return make_training_dataset(read_records(path), vocab, opts);
}

void save_vocab(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out = open_out(path);
  for (const auto& e : vocab.entries()) {
    if (e.token == kStartToken || e.token == kEndToken) continue;  // implicit
    out << e.token << '\t' << (e.in_g ? "g" : "") << (e.in_c ? "c" : "") << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<Vocabulary::Entry> g_only, overlap, c_only;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 2)
      throw IoError(line_err(path, line_no, "expected `token<TAB>flags`"));
    const std::string& token = fields[0];
    const std::string& flags = fields[1];
    if (token == kStartToken || token == kEndToken)
      throw IoError(line_err(path, line_no, "sentinel tokens are implicit"));
    Vocabulary::Entry e;
    e.token = token;
    if (flags == "g") {
      e.in_g = true;
    } else if (flags == "c") {
      e.in_c = true;
    } else if (flags == "gc") {
      e.in_g = e.in_c = true;
    } else {
      throw IoError(line_err(path, line_no, "flags must be g, c, or gc; got '" + flags + "'"));
    }
    (e.in_g ? (e.in_c ? overlap : g_only) : c_only).push_back(e);
  }
  std::vector<Vocabulary::Entry> entries = std::move(g_only);
  entries.push_back({kStartToken, true, false});
  entries.push_back({kEndToken, true, false});
  entries.insert(entries.end(), overlap.begin(), overlap.end());
  entries.insert(entries.end(), c_only.begin(), c_only.end());
  return Vocabulary::from_entries(entries);
}

Vocabulary strip_copy_vocab(const Vocabulary& vocab) {
  std::vector<Vocabulary::Entry> entries;
  for (const auto& e : vocab.entries()) {
    if (!e.in_g) continue;
    entries.push_back({e.token, true, false});
  }
  return Vocabulary::from_entries(entries);
}

PretrainedVectors load_pretrained_vectors(const std::string& path) {
  std::ifstream in = open_in(path);
  PretrainedVectors vecs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> parts = split_ws(line);
    if (parts.size() < 2)
      throw IoError(line_err(path, line_no, "expected `token v1 ... vD`"));
    Vector values;
    values.reserve(parts.size() - 1);
    for (std::size_t i = 1; i < parts.size(); ++i)
      values.push_back(parse_double(parts[i], path, line_no));
    if (vecs.dim == 0) vecs.dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != vecs.dim)
      throw IoError(line_err(path, line_no, "vector length " + std::to_string(values.size()) +
                                                " differs from first entry's " +
                                                std::to_string(vecs.dim)));
    vecs.entries.emplace_back(parts[0], std::move(values));
  }
  if (vecs.entries.empty()) throw IoError("pretrained vector file is empty: " + path);
  return vecs;
}

void save_pretrained_vectors(const std::string& path, const PretrainedVectors& vecs) {
  std::ofstream out = open_out(path);
  for (const auto& [token, values] : vecs.entries) {
    out << token;
    for (double v : values) out << ' ' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::string> load_token_list(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return tokens;
}

void save_token_list(const std::string& path, const std::vector<std::string>& tokens) {
  std::ofstream out = open_out(path);
  for (const std::string& t : tokens) out << t << '\n';
  if (!out) throw IoError("write failed: " + path);
}

namespace {

constexpr const char* kCheckpointMagic = "LSTMC-CKPT 1";

void write_shaped(std::ostream& out, std::uint64_t rows, std::uint64_t cols,
                  const double* data) {
  write_u64_le(out, rows);
  write_u64_le(out, cols);
  for (std::uint64_t i = 0; i < rows * cols; ++i) write_f64_le(out, data[i]);
}

void read_shaped(std::istream& in, const std::string& path, std::uint64_t rows,
                 std::uint64_t cols, double* data, const char* name) {
  const std::uint64_t r = read_u64_le(in, path);
  const std::uint64_t c = read_u64_le(in, path);
  if (r != rows || c != cols)
    throw IoError("checkpoint block " + std::string(name) + " has shape " + std::to_string(r) +
                  "x" + std::to_string(c) + ", expected " + std::to_string(rows) + "x" +
                  std::to_string(cols) + ": " + path);
  for (std::uint64_t i = 0; i < rows * cols; ++i) data[i] = read_f64_le(in, path);
}

std::string header_line(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint header truncated: " + path);
  return line;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& vocab, const WordFeatures& feats) {
  validate_params(params);
  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  out << kCheckpointMagic << '\n';
  out << "dims " << params.dims.d_v << ' ' << params.dims.d_w << ' ' << params.dims.d_e << ' '
      << params.dims.d_h << '\n';
  out << "feature_mode "
      << (feats.mode() == FeatureMode::one_hot ? "one_hot" : "one_hot_plus_pretrained") << '\n';
  out << "pretrained_dim " << feats.pretrained_dim() << '\n';
  out << "vocab " << vocab.size() << " start " << vocab.start_id() << " end " << vocab.end_id()
      << '\n';
  for (const auto& e : vocab.entries())
    out << e.token << '\t' << (e.in_g ? "g" : "") << (e.in_c ? "c" : "") << '\n';
  out << "binary\n";
  write_shaped(out, 1, 1, &params.lambda);
  ModelParams& mutable_params = const_cast<ModelParams&>(params);
  for (const auto& b : param_blocks(mutable_params)) {
    // biases stored as 1 x D_h
    std::uint64_t rows = 1, cols = b.values.size();
    if (b.name[0] == 'T' || b.name[0] == 'R' || b.name[0] == 'M') {
      const Matrix* m = nullptr;
      if (b.name == "T_g") m = &params.lstm.T_g;
      else if (b.name == "T_i") m = &params.lstm.T_i;
      else if (b.name == "T_f") m = &params.lstm.T_f;
      else if (b.name == "T_o") m = &params.lstm.T_o;
      else if (b.name == "R_g") m = &params.lstm.R_g;
      else if (b.name == "R_i") m = &params.lstm.R_i;
      else if (b.name == "R_f") m = &params.lstm.R_f;
      else if (b.name == "R_o") m = &params.lstm.R_o;
      else if (b.name == "T_I") m = &params.T_I;
      else if (b.name == "T_s") m = &params.T_s;
      else if (b.name == "M_g") m = &params.M_g;
      else if (b.name == "M_c") m = &params.M_c;
      if (m) {
        rows = m->rows();
        cols = m->cols();
      }
    }
    write_shaped(out, rows, cols, b.values.data());
  }
  if (feats.mode() == FeatureMode::one_hot_plus_pretrained) {
    const Matrix& table = feats.pretrained_table();
    write_shaped(out, table.rows(), table.cols(), table.data().data());
  }
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  const std::string magic = header_line(in, path);
  if (magic != kCheckpointMagic)
    throw IoError("unsupported checkpoint version '" + magic + "' (expected '" +
                  kCheckpointMagic + "'): " + path);

  Dims dims;
  {
    std::istringstream is(header_line(in, path));
    std::string word;
    if (!(is >> word >> dims.d_v >> dims.d_w >> dims.d_e >> dims.d_h) || word != "dims")
      throw IoError("malformed dims line: " + path);
  }
  FeatureMode mode;
  {
    std::istringstream is(header_line(in, path));
    std::string word, value;
    if (!(is >> word >> value) || word != "feature_mode")
      throw IoError("malformed feature_mode line: " + path);
    if (value == "one_hot") mode = FeatureMode::one_hot;
    else if (value == "one_hot_plus_pretrained") mode = FeatureMode::one_hot_plus_pretrained;
    else throw IoError("unknown feature mode '" + value + "': " + path);
  }
  std::size_t pretrained_dim = 0;
  {
    std::istringstream is(header_line(in, path));
    std::string word;
    if (!(is >> word >> pretrained_dim) || word != "pretrained_dim")
      throw IoError("malformed pretrained_dim line: " + path);
  }
  std::size_t vocab_size = 0;
  TokenId start_id = -1, end_id = -1;
  {
    std::istringstream is(header_line(in, path));
    std::string w1, w2, w3;
    if (!(is >> w1 >> vocab_size >> w2 >> start_id >> w3 >> end_id) || w1 != "vocab" ||
        w2 != "start" || w3 != "end")
      throw IoError("malformed vocab line: " + path);
  }
  std::vector<Vocabulary::Entry> entries;
  entries.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    const std::string line = header_line(in, path);
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 2) throw IoError("malformed vocab entry in checkpoint: " + path);
    Vocabulary::Entry e;
    e.token = fields[0];
    e.in_g = fields[1].find('g') != std::string::npos;
    e.in_c = fields[1].find('c') != std::string::npos;
    entries.push_back(std::move(e));
  }
  if (header_line(in, path) != "binary")
    throw IoError("missing binary section marker: " + path);

  Checkpoint ck;
  ck.vocab = Vocabulary::from_entries(entries);
  if (ck.vocab.start_id() != start_id || ck.vocab.end_id() != end_id)
    throw IoError("checkpoint sentinel ids do not match the stored vocabulary: " + path);
  if (mode == FeatureMode::one_hot) {
    ck.feats = WordFeatures::one_hot(ck.vocab);
  } else {
    PretrainedVectors placeholder;
    placeholder.dim = static_cast<int>(pretrained_dim);
    ck.feats = WordFeatures::combined(ck.vocab, placeholder);
  }
  if (ck.feats.dim() != dims.d_w)
    throw IoError("checkpoint D_w " + std::to_string(dims.d_w) +
                  " does not match vocabulary and feature mode (expected " +
                  std::to_string(ck.feats.dim()) + "): " + path);

  ck.params.dims = dims;
  ck.params.lstm.T_g = Matrix(dims.d_h, dims.d_e);
  ck.params.lstm.T_i = Matrix(dims.d_h, dims.d_e);
  ck.params.lstm.T_f = Matrix(dims.d_h, dims.d_e);
  ck.params.lstm.T_o = Matrix(dims.d_h, dims.d_e);
  ck.params.lstm.R_g = Matrix(dims.d_h, dims.d_h);
  ck.params.lstm.R_i = Matrix(dims.d_h, dims.d_h);
  ck.params.lstm.R_f = Matrix(dims.d_h, dims.d_h);
  ck.params.lstm.R_o = Matrix(dims.d_h, dims.d_h);
  ck.params.lstm.b_g = Vector(dims.d_h);
  ck.params.lstm.b_i = Vector(dims.d_h);
  ck.params.lstm.b_f = Vector(dims.d_h);
  ck.params.lstm.b_o = Vector(dims.d_h);
  ck.params.T_I = Matrix(dims.d_e, dims.d_v);
  ck.params.T_s = Matrix(dims.d_e, dims.d_w);
  ck.params.M_g = Matrix(dims.d_w, dims.d_h);
  ck.params.M_c = Matrix(dims.d_w, dims.d_h);

  read_shaped(in, path, 1, 1, &ck.params.lambda, "lambda");
  for (auto& b : param_blocks(ck.params)) {
    std::uint64_t rows = 1, cols = b.values.size();
    const Matrix* m = nullptr;
    if (b.name == "T_g") m = &ck.params.lstm.T_g;
    else if (b.name == "T_i") m = &ck.params.lstm.T_i;
    else if (b.name == "T_f") m = &ck.params.lstm.T_f;
    else if (b.name == "T_o") m = &ck.params.lstm.T_o;
    else if (b.name == "R_g") m = &ck.params.lstm.R_g;
    else if (b.name == "R_i") m = &ck.params.lstm.R_i;
    else if (b.name == "R_f") m = &ck.params.lstm.R_f;
    else if (b.name == "R_o") m = &ck.params.lstm.R_o;
    else if (b.name == "T_I") m = &ck.params.T_I;
    else if (b.name == "T_s") m = &ck.params.T_s;
    else if (b.name == "M_g") m = &ck.params.M_g;
    else if (b.name == "M_c") m = &ck.params.M_c;
    if (m) {
      rows = m->rows();
      cols = m->cols();
    }
    read_shaped(in, path, rows, cols, b.values.data(), b.name.c_str());
  }
  if (mode == FeatureMode::one_hot_plus_pretrained) {
    Matrix table(ck.vocab.size(), pretrained_dim);
    read_shaped(in, path, table.rows(), table.cols(), table.data().data(), "pretrained");
    ck.feats.set_pretrained_table(std::move(table));
  }
  // trailing bytes indicate corruption
  char extra;
  if (in.read(&extra, 1) && in.gcount() == 1)
    throw IoError("unexpected trailing bytes in checkpoint: " + path);
  validate_params(ck.params);
  if (ck.params.lambda < 0.0 || ck.params.lambda > 1.0)
    throw IoError("checkpoint lambda outside [0,1]: " + path);
  return ck;
}

void save_loss_trace(const std::string& path, const std::vector<double>& epoch_loss) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < epoch_loss.size(); ++i)
    out << i << '\t' << format_double(epoch_loss[i]) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

void save_captions(const std::string& path, const std::vector<CaptionRecord>& captions) {
  std::ofstream out = open_out(path);
  for (const CaptionRecord& c : captions) {
    out << c.id << '\t';
    for (std::size_t i = 0; i < c.tokens.size(); ++i) {
      if (i) out << ' ';
      out << c.tokens[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<CaptionRecord> load_captions(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<CaptionRecord> captions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 2)
      throw IoError(line_err(path, line_no, "expected `id<TAB>caption`"));
    captions.push_back({fields[0], split_ws(fields[1])});
  }
  return captions;
}

EvalCorpus build_eval_corpus(const std::vector<CaptionRecord>& generated,
                             const std::vector<RawRecord>& refs,
                             const std::set<std::string>& novel_set) {
  std::map<std::string, const CaptionRecord*> by_id;
  for (const CaptionRecord& c : generated) {
    if (!by_id.emplace(c.id, &c).second)
      throw ValidationError("duplicate generated caption for image '" + c.id + "'");
  }
  EvalCorpus corpus;
  for (const RawRecord& ref : refs) {
    auto it = by_id.find(ref.id);
    if (it == by_id.end())
      throw ValidationError("no generated caption for image '" + ref.id + "'");
    EvalItem item;
    item.image_id = ref.id;
    item.generated = it->second->tokens;
    if (!ref.caption.empty()) item.references.push_back(ref.caption);
    for (const std::string& tok : ref.caption)
      if (novel_set.count(tok)) item.labels.insert(tok);
    corpus.items.push_back(std::move(item));
  }
  if (corpus.items.size() != generated.size())
    throw ValidationError("generated captions cover " + std::to_string(generated.size()) +
                          " images but the reference set has " +
                          std::to_string(corpus.items.size()));
  return corpus;
}

namespace {

const std::vector<std::vector<std::string>>& template_bank() {
  static const std::vector<std::vector<std::string>> bank = {
      {"a", "{}", "on", "the", "table"},
      {"the", "{}", "is", "near", "the", "window"},
      {"a", "small", "{}", "in", "the", "room"},
      {"someone", "holds", "a", "{}"},
      {"a", "photo", "of", "a", "{}"},
      {"the", "{}", "sits", "on", "the", "floor"},
      {"a", "large", "{}", "beside", "the", "door"},
      {"people", "look", "at", "the", "{}"},
      {"a", "{}", "under", "the", "tree"},
      {"the", "{}", "stands", "in", "the", "corner"},
  };
  return bank;
}

const std::vector<std::string>& common_name_bank() {
  static const std::vector<std::string> bank = {"box",   "cup",   "lamp",  "chair",
                                                "plate", "shirt", "clock", "stone",
                                                "brush", "wheel", "spoon", "glove"};
  return bank;
}

const std::vector<std::string>& novel_name_bank() {
  static const std::vector<std::string> bank = {"zebra",  "piano",  "kayak", "drum",
                                                "helmet", "cactus", "violin", "anchor"};
  return bank;
}

std::string object_name(const std::vector<std::string>& bank, const char* prefix, int i) {
  if (i < static_cast<int>(bank.size())) return bank[static_cast<std::size_t>(i)];
  return std::string(prefix) + std::to_string(i);
}

std::vector<std::string> fill_template(const std::vector<std::string>& tmpl,
                                       const std::string& object) {
  std::vector<std::string> caption;
  caption.reserve(tmpl.size());
  for (const std::string& tok : tmpl) caption.push_back(tok == "{}" ? object : tok);
  return caption;
}

}  // namespace

SynthResult generate_synthetic(const SynthSpec& spec) {
  if (spec.n_novel < 1) throw ValidationError("generate_synthetic: n_novel must be >= 1");
  if (spec.n_common < 1)
    throw ValidationError("generate_synthetic: n_novel must be below the total object count");
  if (spec.n_templates < 1 ||
      spec.n_templates > static_cast<int>(template_bank().size()))
    throw ValidationError("generate_synthetic: n_templates must be in [1, " +
                          std::to_string(template_bank().size()) + "]");
  if (spec.n_examples < spec.n_templates)
    throw ValidationError("generate_synthetic: n_examples must be >= n_templates");
  if (spec.n_test < 1) throw ValidationError("generate_synthetic: n_test must be >= 1");
  if (spec.feature_dim < 1) throw ValidationError("generate_synthetic: feature_dim must be >= 1");
  if (spec.noise_std < 0.0) throw ValidationError("generate_synthetic: negative noise_std");

  Rng rng(Rng::derive(spec.seed, 2));

  std::vector<std::string> common, novel;
  for (int i = 0; i < spec.n_common; ++i)
    common.push_back(object_name(common_name_bank(), "obj", i));
  for (int i = 0; i < spec.n_novel; ++i)
    novel.push_back(object_name(novel_name_bank(), "nov", i));
  std::vector<std::string> objects = common;
  objects.insert(objects.end(), novel.begin(), novel.end());

  // object prototypes and template context vectors
  std::map<std::string, Vector> proto;
  for (const std::string& o : objects) {
    Vector v(static_cast<std::size_t>(spec.feature_dim));
    for (double& x : v) x = rng.normal();
    proto[o] = std::move(v);
  }
  std::vector<Vector> ctx(static_cast<std::size_t>(spec.n_templates));
  for (auto& v : ctx) {
    v.resize(static_cast<std::size_t>(spec.feature_dim));
    for (double& x : v) x = rng.normal(0.0, 0.5);
  }

  auto make_record = [&](const std::string& id, const std::string& object,
                         std::size_t tmpl_idx) {
    RawRecord rec;
    rec.id = id;
    const Vector& pv = proto.at(object);
    const Vector& cv = ctx[tmpl_idx];
    rec.features.resize(static_cast<std::size_t>(spec.feature_dim));
    for (std::size_t d = 0; d < rec.features.size(); ++d)
      rec.features[d] = pv[d] + cv[d] + spec.noise_std * rng.normal();
    rec.caption = fill_template(template_bank()[tmpl_idx], object);
    for (const std::string& o : objects) {
      double score;
      if (o == object) {
        score = 1.0 - spec.delta_noise * rng.uniform();
      } else {
        score = spec.background_delta * rng.uniform();
      }
      score = std::min(1.0, std::max(0.0, score));
      rec.detections.emplace_back(o, score);
    }
    return rec;
  };

  SynthResult result;
  result.novel = novel;
  char idbuf[32];
  for (int i = 0; i < spec.n_examples; ++i) {
    std::snprintf(idbuf, sizeof(idbuf), "train-%04d", i);
    const std::string object = common[static_cast<std::size_t>(i % spec.n_common)];
    const std::size_t tmpl = static_cast<std::size_t>(rng.below(
        static_cast<std::uint64_t>(spec.n_templates)));
    result.train_records.push_back(make_record(idbuf, object, tmpl));
  }
  for (int i = 0; i < spec.n_test; ++i) {
    std::snprintf(idbuf, sizeof(idbuf), "test-%04d", i);
    const std::string object = novel[static_cast<std::size_t>(i % spec.n_novel)];
    const std::size_t tmpl = static_cast<std::size_t>(rng.below(
        static_cast<std::uint64_t>(spec.n_templates)));
    result.test_records.push_back(make_record(idbuf, object, tmpl));
  }

  std::vector<std::string> paired;
  for (const RawRecord& rec : result.train_records)
    paired.insert(paired.end(), rec.caption.begin(), rec.caption.end());
  result.vocab = Vocabulary::build(paired, objects);

  result.vectors.dim = spec.feature_dim;
  for (const std::string& o : objects) result.vectors.entries.emplace_back(o, proto.at(o));

  result.train = make_training_dataset(result.train_records, result.vocab);
  result.test = make_training_dataset(result.test_records, result.vocab);
  return result;
}

}  // namespace lstmc
