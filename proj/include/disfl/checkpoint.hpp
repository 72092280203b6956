// Copyright 2026 The disfl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary parameter checkpoints.
//
// Layout, all integers little-endian u64 unless noted:
//   "DISFLCKP" (8 bytes), format version (u32)
//   config block: 9 sizes, 4 dropout rates (f64), seed
//   word vocabulary, label vocabulary (count, then length-prefixed strings)
//   metadata (length-prefixed JSON text)
//   tensor count, then per tensor: name, rows, cols, rows*cols f64 row-major
// Tensors appear in ModelParams::visit order. A JSON sidecar next to the
// file repeats the config for inspection; loading never reads it.

#ifndef DISFL_CHECKPOINT_HPP
#define DISFL_CHECKPOINT_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "disfl/chart.hpp"
#include "disfl/json_util.hpp"
#include "disfl/model.hpp"

namespace disfl {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void to_json(Json& j, const ModelConfig& c) {
  j = Json{{"vocab_size", c.vocab_size},
           {"num_labels", c.num_labels},
           {"model_dim", c.model_dim},
           {"ff_dim", c.ff_dim},
           {"num_heads", c.num_heads},
           {"head_dim", c.head_dim},
           {"num_layers", c.num_layers},
           {"label_hidden_dim", c.label_hidden_dim},
           {"max_length", c.max_length},
           {"attention_dropout", c.attention_dropout},
           {"relu_dropout", c.relu_dropout},
           {"residual_dropout", c.residual_dropout},
           {"embedding_dropout", c.embedding_dropout},
           {"seed", c.seed}};
}

/// Missing keys keep their current value, so a partial object overrides a
/// preset. "preset" selects "desk" or "paper" first.
inline void from_json(const Json& j, ModelConfig& c) {
  detail::check_keys(j,
                     {"preset", "vocab_size", "num_labels", "model_dim", "ff_dim", "num_heads", "head_dim",
                      "num_layers", "label_hidden_dim", "max_length", "attention_dropout", "relu_dropout",
                      "residual_dropout", "embedding_dropout", "seed"},
                     "model config");
  if (j.contains("preset")) {
    const std::string p = j.at("preset").get<std::string>();
    if (p == "desk")
      c = ModelConfig::desk();
    else if (p == "paper")
      c = ModelConfig::paper();
    else
      throw ConfigError("unknown model preset '" + p + "'");
  }
  detail::read_field(j, "vocab_size", c.vocab_size);
  detail::read_field(j, "num_labels", c.num_labels);
  detail::read_field(j, "model_dim", c.model_dim);
  detail::read_field(j, "ff_dim", c.ff_dim);
  detail::read_field(j, "num_heads", c.num_heads);
  detail::read_field(j, "head_dim", c.head_dim);
  detail::read_field(j, "num_layers", c.num_layers);
  detail::read_field(j, "label_hidden_dim", c.label_hidden_dim);
  detail::read_field(j, "max_length", c.max_length);
  detail::read_field(j, "attention_dropout", c.attention_dropout);
  detail::read_field(j, "relu_dropout", c.relu_dropout);
  detail::read_field(j, "residual_dropout", c.residual_dropout);
  detail::read_field(j, "embedding_dropout", c.embedding_dropout);
  detail::read_field(j, "seed", c.seed);
}

inline bool same_architecture(const ModelConfig& a, const ModelConfig& b) {
  return a.vocab_size == b.vocab_size && a.num_labels == b.num_labels && a.model_dim == b.model_dim &&
         a.ff_dim == b.ff_dim && a.num_heads == b.num_heads && a.key_dim() == b.key_dim() &&
         a.num_layers == b.num_layers && a.label_hidden_dim == b.label_hidden_dim &&
         a.max_length == b.max_length;
}

struct Checkpoint {
  ModelParams params;
  WordVocab words;
  LabelVocab labels;
  Json metadata = Json::object();  // preprocessing and transform used in training

  friend bool operator==(const Checkpoint& a, const Checkpoint& b) {
    return a.params == b.params && a.words == b.words && a.labels == b.labels && a.metadata == b.metadata;
  }
};

inline constexpr std::array<char, 8> kCheckpointMagic{'D', 'I', 'S', 'F', 'L', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(char((v >> (8 * i)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_ += s;
  }
  const std::string& bytes() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) throw CheckpointError(std::string("truncated checkpoint while reading ") + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(data_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(data_[pos_++])) << (8 * i);
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const std::uint64_t n = u64(what);
    need(n, what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string fixed(std::size_t n, const char* what) {
    need(n, what);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
  const ModelConfig& c = ck.params.config;
  if (ck.words.size() != c.vocab_size || ck.labels.size() != c.num_labels)
    throw CheckpointError("vocabulary sizes do not match the model config");
  detail::ByteWriter w;
  w.raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(kCheckpointVersion);
  for (std::size_t v : {c.vocab_size, c.num_labels, c.model_dim, c.ff_dim, c.num_heads, c.head_dim, c.num_layers,
                        c.label_hidden_dim, c.max_length})
    w.u64(v);
  for (double v : {c.attention_dropout, c.relu_dropout, c.residual_dropout, c.embedding_dropout}) w.f64(v);
  w.u64(c.seed);
  w.u64(ck.words.size());
  for (const auto& s : ck.words.words()) w.str(s);
  w.u64(ck.labels.size());
  for (const auto& s : ck.labels.labels()) w.str(s);
  const auto roots = ck.labels.root_labels();
  w.u64(roots.size());
  for (std::size_t i : roots) w.u64(i);
  w.str(ck.metadata.dump());
  w.u64(ck.params.tensors().size());
  ck.params.visit([&](const std::string& name, const Matrix& m) {
    w.str(name);
    w.u64(std::uint64_t(m.rows()));
    w.u64(std::uint64_t(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
  });
  return w.bytes();
}

inline Checkpoint decode_checkpoint(std::string bytes) {
  detail::ByteReader r(std::move(bytes));
  if (r.fixed(kCheckpointMagic.size(), "magic") != std::string(kCheckpointMagic.begin(), kCheckpointMagic.end()))
    throw CheckpointError("not a disfl checkpoint (bad magic)");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  ModelConfig c;
  for (std::size_t* f : {&c.vocab_size, &c.num_labels, &c.model_dim, &c.ff_dim, &c.num_heads, &c.head_dim,
                         &c.num_layers, &c.label_hidden_dim, &c.max_length})
    *f = r.u64("config");
  for (double* f : {&c.attention_dropout, &c.relu_dropout, &c.residual_dropout, &c.embedding_dropout})
    *f = r.f64("config");
  c.seed = r.u64("config");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint config is invalid: ") + e.what());
  }

  Checkpoint ck;
  const std::uint64_t nwords = r.u64("word vocabulary");
  std::vector<std::string> words;
  for (std::uint64_t i = 0; i < nwords; ++i) words.push_back(r.str("word vocabulary"));
  if (nwords != c.vocab_size || nwords < 3 || words[0] != ck.words.word(0) || words[1] != ck.words.word(1) ||
      words[2] != ck.words.word(2))
    throw CheckpointError("word vocabulary does not match config");
  for (std::size_t i = 3; i < words.size(); ++i)
    if (ck.words.add(words[i]) != i) throw CheckpointError("duplicate word in vocabulary");

  const std::uint64_t nlabels = r.u64("label vocabulary");
  std::vector<std::string> labels;
  for (std::uint64_t i = 0; i < nlabels; ++i) labels.push_back(r.str("label vocabulary"));
  if (nlabels != c.num_labels || labels.empty() || !labels[0].empty())
    throw CheckpointError("label vocabulary does not match config");
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (ck.labels.add(labels[i]) != i) throw CheckpointError("duplicate label in vocabulary");
  const std::uint64_t nroots = r.u64("root labels");
  if (nroots >= nlabels) throw CheckpointError("root label count exceeds label vocabulary");
  for (std::uint64_t k = 0; k < nroots; ++k) {
    const std::uint64_t i = r.u64("root labels");
    if (i == kNullLabel || i >= nlabels || ck.labels.is_root(i)) throw CheckpointError("bad root label index");
    ck.labels.mark_root(i);
  }

  try {
    ck.metadata = Json::parse(r.str("metadata"));
  } catch (const Json::parse_error& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  }

  ck.params = ModelParams::zeros(c);
  const std::uint64_t count = r.u64("tensor count");
  if (count != ck.params.tensors().size())
    throw CheckpointError("tensor count " + std::to_string(count) + " does not match config");
  ck.params.visit([&](const std::string& name, Matrix& m) {
    const std::string got = r.str("tensor name");
    if (got != name) throw CheckpointError("expected tensor '" + name + "', found '" + got + "'");
    const std::uint64_t rows = r.u64("tensor shape"), cols = r.u64("tensor shape");
    if (rows != std::uint64_t(m.rows()) || cols != std::uint64_t(m.cols()))
      throw CheckpointError("tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", config implies " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.f64("tensor data");
  });
  if (!r.done()) throw CheckpointError("trailing bytes after last tensor");
  return ck;
}

inline Json checkpoint_sidecar(const Checkpoint& ck) {
  std::vector<std::string> root_names;
  for (std::size_t i : ck.labels.root_labels()) root_names.push_back(ck.labels.label(i));
  return Json{{"format_version", kCheckpointVersion},
              {"model", ck.params.config},
              {"labels", ck.labels.labels()},
              {"root_labels", root_names},
              {"parameter_count", ck.params.parameter_count()},
              {"metadata", ck.metadata}};
}

/// Writes `path` and `path`.json.
inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const std::string bytes = encode_checkpoint(ck);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw CheckpointError("cannot write checkpoint '" + path + "'");
  }
  std::ofstream side(path + ".json", std::ios::trunc);
  side << checkpoint_sidecar(ck).dump(2) << '\n';
  if (!side) throw CheckpointError("cannot write '" + path + ".json'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

}  // namespace disfl

#endif  // DISFL_CHECKPOINT_HPP
