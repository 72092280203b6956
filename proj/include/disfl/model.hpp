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

// Self-attentive encoder and span classifier producing a SpanScoreTable,
// with an exact hand-written backward pass. All arithmetic is in double.
//
// The input sequence is <START> w_1 ... w_n <STOP>. Encoder layers are
// pre-norm: x += drop(attn(norm(x))); x += drop(ffn(norm(x))), followed by a
// final layer norm. A span (i, j) over fenceposts 0..n is represented as
// [f_j - f_i ; b_i - b_j] where f_k is the first half of row k and b_k the
// second half of row k + 1.

#ifndef DISFL_MODEL_HPP
#define DISFL_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "disfl/chart.hpp"

namespace disfl {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 64-bit Mersenne twister with an explicit uniform mapping, so streams are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::size_t below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    return std::size_t(uniform() * double(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a few counters.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return splitmix(splitmix(splitmix(base) ^ a) ^ b);
}

// ---------------------------------------------------------------------------
// Vocabulary

/// Word ids; 0, 1 and 2 are reserved for <UNK>, <START> and <STOP>.
class WordVocab {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kStart = 1;
  static constexpr std::size_t kStop = 2;

  WordVocab() : words_{"<UNK>", "<START>", "<STOP>"} {
    for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
  }

  std::size_t add(const std::string& word) {
    auto [it, inserted] = index_.try_emplace(word, words_.size());
    if (inserted) words_.push_back(word);
    return it->second;
  }

  std::size_t id(std::string_view word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
  }

  std::vector<std::size_t> ids(const std::vector<std::string>& sentence) const {
    std::vector<std::size_t> out;
    out.reserve(sentence.size());
    for (const auto& w : sentence) out.push_back(id(w));
    return out;
  }

  const std::string& word(std::size_t i) const { return words_.at(i); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  friend bool operator==(const WordVocab& a, const WordVocab& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// ---------------------------------------------------------------------------
// Configuration and parameters

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t num_labels = 0;  // including the null label
  std::size_t model_dim = 64;
  std::size_t ff_dim = 128;
  std::size_t num_heads = 2;
  std::size_t head_dim = 0;  // 0: model_dim / num_heads
  std::size_t num_layers = 2;
  std::size_t label_hidden_dim = 32;
  std::size_t max_length = 64;
  double attention_dropout = 0.1;
  double relu_dropout = 0.1;
  double residual_dropout = 0.1;
  double embedding_dropout = 0.1;
  std::uint64_t seed = 1;

  std::size_t key_dim() const { return head_dim != 0 ? head_dim : model_dim / num_heads; }

  void validate() const {
    auto need = [](bool ok, const char* what) {
      if (!ok) throw std::invalid_argument(std::string("invalid model config: ") + what);
    };
    need(vocab_size >= 1, "vocab_size must be >= 1");
    need(num_labels >= 2, "num_labels must include the null label and at least one label");
    need(model_dim >= 2 && model_dim % 2 == 0, "model_dim must be even and >= 2");
    need(ff_dim >= 1 && num_heads >= 1 && num_layers >= 1 && label_hidden_dim >= 1 &&
             max_length >= 1,
         "all dimensions must be >= 1");
    need(head_dim != 0 || model_dim % num_heads == 0,
         "model_dim must be divisible by num_heads unless head_dim is set");
    for (double p : {attention_dropout, relu_dropout, residual_dropout, embedding_dropout})
      need(p >= 0.0 && p < 1.0, "dropout rates must be in [0, 1)");
  }

  /// CPU-trainable defaults.
  static ModelConfig desk() { return {}; }

  /// Sizes and dropout rates of the large published configuration. The
  /// per-head width is pinned because 2048 does not divide into 7 heads.
  static ModelConfig paper() {
    ModelConfig c;
    c.model_dim = 2048;
    c.ff_dim = 2048;
    c.num_heads = 7;
    c.head_dim = 64;
    c.num_layers = 4;
    c.label_hidden_dim = 340;
    c.max_length = 300;
    c.attention_dropout = 0.27;
    c.relu_dropout = 0.09;
    c.residual_dropout = 0.26;
    c.embedding_dropout = 0.2;
    return c;
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerParams {
  Matrix norm1_gain, norm1_bias;
  Matrix query, key, value, output;  // heads are column blocks of query/key/value
  Matrix norm2_gain, norm2_bias;
  Matrix ff1, ff1_bias, ff2, ff2_bias;
};

struct ModelParams {
  ModelConfig config;
  Matrix word_embedding;      // vocab x d
  Matrix position_embedding;  // (max_length + 2) x d
  std::vector<LayerParams> layers;
  Matrix final_gain, final_bias;
  Matrix span_hidden, span_hidden_bias;  // d x h, 1 x h
  Matrix span_output, span_output_bias;  // h x (labels - 1), 1 x (labels - 1)

  /// Visits (name, tensor) in declaration order; this order is the
  /// checkpoint layout.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  std::vector<Matrix*> tensors() {
    std::vector<Matrix*> out;
    visit([&](const std::string&, Matrix& m) { out.push_back(&m); });
    return out;
  }
  std::vector<const Matrix*> tensors() const {
    std::vector<const Matrix*> out;
    visit([&](const std::string&, const Matrix& m) { out.push_back(&m); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* m : tensors()) n += std::size_t(m->size());
    return n;
  }

  void set_zero() {
    for (Matrix* m : tensors()) m->setZero();
  }

  ModelParams& operator+=(const ModelParams& o) {
    auto a = tensors();
    auto b = o.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) *a[i] += *b[i];
    return *this;
  }

  bool all_finite() const {
    for (const Matrix* m : tensors())
      if (!m->allFinite()) return false;
    return true;
  }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    if (!(a.config == b.config)) return false;
    auto x = a.tensors();
    auto y = b.tensors();
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i]->rows() != y[i]->rows() || x[i]->cols() != y[i]->cols() || *x[i] != *y[i]) return false;
    return true;
  }

  /// All-zero tensors of the right shapes.
  static ModelParams zeros(const ModelConfig& c) {
    c.validate();
    const Eigen::Index d = Eigen::Index(c.model_dim);
    const Eigen::Index hk = Eigen::Index(c.num_heads * c.key_dim());
    const Eigen::Index ff = Eigen::Index(c.ff_dim);
    const Eigen::Index hid = Eigen::Index(c.label_hidden_dim);
    const Eigen::Index out = Eigen::Index(c.num_labels - 1);
    ModelParams p;
    p.config = c;
    p.word_embedding = Matrix::Zero(Eigen::Index(c.vocab_size), d);
    p.position_embedding = Matrix::Zero(Eigen::Index(c.max_length + 2), d);
    p.layers.resize(c.num_layers);
    for (auto& l : p.layers) {
      l.norm1_gain = Matrix::Zero(1, d);
      l.norm1_bias = Matrix::Zero(1, d);
      l.query = Matrix::Zero(d, hk);
      l.key = Matrix::Zero(d, hk);
      l.value = Matrix::Zero(d, hk);
      l.output = Matrix::Zero(hk, d);
      l.norm2_gain = Matrix::Zero(1, d);
      l.norm2_bias = Matrix::Zero(1, d);
      l.ff1 = Matrix::Zero(d, ff);
      l.ff1_bias = Matrix::Zero(1, ff);
      l.ff2 = Matrix::Zero(ff, d);
      l.ff2_bias = Matrix::Zero(1, d);
    }
    p.final_gain = Matrix::Zero(1, d);
    p.final_bias = Matrix::Zero(1, d);
    p.span_hidden = Matrix::Zero(d, hid);
    p.span_hidden_bias = Matrix::Zero(1, hid);
    p.span_output = Matrix::Zero(hid, out);
    p.span_output_bias = Matrix::Zero(1, out);
    return p;
  }

  /// Seeded initialization: scaled uniform embeddings, Glorot-uniform
  /// weights, unit gains, zero biases.
  static ModelParams initialize(const ModelConfig& c) {
    ModelParams p = zeros(c);
    Rng rng(mix_seed(c.seed, 0x1a17));
    auto fill = [&](Matrix& m, double limit) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
    };
    auto glorot = [&](Matrix& m) { fill(m, std::sqrt(6.0 / double(m.rows() + m.cols()))); };
    const double emb = std::sqrt(3.0 / double(c.model_dim));
    fill(p.word_embedding, emb);
    // Sinusoidal start for the learned position table, scaled to the word
    // embedding rms.
    const double pos_scale = std::sqrt(2.0 / double(c.model_dim));
    for (Eigen::Index r = 0; r < p.position_embedding.rows(); ++r)
      for (Eigen::Index k = 0; k < p.position_embedding.cols(); ++k) {
        const double freq = std::pow(10000.0, -double(k - k % 2) / double(c.model_dim));
        const double a = double(r) * freq;
        p.position_embedding(r, k) = pos_scale * (k % 2 == 0 ? std::sin(a) : std::cos(a));
      }
    for (auto& l : p.layers) {
      l.norm1_gain.setOnes();
      glorot(l.query);
      glorot(l.key);
      glorot(l.value);
      glorot(l.output);
      l.norm2_gain.setOnes();
      glorot(l.ff1);
      glorot(l.ff2);
    }
    p.final_gain.setOnes();
    glorot(p.span_hidden);
    glorot(p.span_output);
    return p;
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("word_embedding"), self.word_embedding);
    f(std::string("position_embedding"), self.position_embedding);
    for (std::size_t i = 0; i < self.layers.size(); ++i) {
      auto& l = self.layers[i];
      const std::string p = "layer" + std::to_string(i) + ".";
      f(p + "norm1_gain", l.norm1_gain);
      f(p + "norm1_bias", l.norm1_bias);
      f(p + "query", l.query);
      f(p + "key", l.key);
      f(p + "value", l.value);
      f(p + "output", l.output);
      f(p + "norm2_gain", l.norm2_gain);
      f(p + "norm2_bias", l.norm2_bias);
      f(p + "ff1", l.ff1);
      f(p + "ff1_bias", l.ff1_bias);
      f(p + "ff2", l.ff2);
      f(p + "ff2_bias", l.ff2_bias);
    }
    f(std::string("final_gain"), self.final_gain);
    f(std::string("final_bias"), self.final_bias);
    f(std::string("span_hidden"), self.span_hidden);
    f(std::string("span_hidden_bias"), self.span_hidden_bias);
    f(std::string("span_output"), self.span_output);
    f(std::string("span_output_bias"), self.span_output_bias);
  }
};

// ---------------------------------------------------------------------------
// Forward pass

inline constexpr double kLayerNormEpsilon = 1e-9;

struct NormCache {
  Matrix normalized;  // before gain and bias
  Eigen::VectorXd inv_std;
};

struct LayerCache {
  Matrix input;
  NormCache norm1;
  Matrix normed1, query, key, value;
  std::vector<Matrix> attention;       // per head, rows sum to one
  std::vector<Matrix> attention_mask;  // per head; empty when no dropout
  Matrix attended;                     // concatenated head outputs
  Matrix attn_out_mask;
  Matrix middle;
  NormCache norm2;
  Matrix normed2, hidden_pre, relu_mask, hidden;
  Matrix ff_out_mask;
};

struct ForwardCache {
  bool valid = false;
  std::vector<std::size_t> ids;  // including <START> and <STOP>
  Matrix embed_mask;
  std::vector<LayerCache> layers;
  Matrix before_final;
  NormCache final_norm;
  Matrix encoded;
  // Span classifier.
  std::vector<std::pair<std::size_t, std::size_t>> span_index;
  Matrix span_pre;     // spans x hidden
  Matrix span_hidden;  // relu(span_pre)
};

namespace detail {

inline Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, NormCache* cache) {
  const Eigen::Index cols = x.cols();
  Matrix normalized(x.rows(), cols);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const auto centered = (x.row(r).array() - mean).matrix();
    const double var = centered.squaredNorm() / double(cols);
    inv_std(r) = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    normalized.row(r) = centered * inv_std(r);
  }
  Matrix out = (normalized.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

// Accumulates gain/bias gradients and returns the input gradient.
inline Matrix layer_norm_backward(const Matrix& d_out, const NormCache& cache, const Matrix& gain,
                                  Matrix& d_gain, Matrix& d_bias) {
  d_gain.row(0) += (d_out.array() * cache.normalized.array()).colwise().sum().matrix();
  d_bias.row(0) += d_out.colwise().sum();
  const double cols = double(d_out.cols());
  Matrix d_norm = d_out.array().rowwise() * gain.row(0).array();
  Matrix d_in(d_out.rows(), d_out.cols());
  for (Eigen::Index r = 0; r < d_out.rows(); ++r) {
    const double mean_d = d_norm.row(r).sum() / cols;
    const double mean_dx = d_norm.row(r).dot(cache.normalized.row(r)) / cols;
    d_in.row(r) = cache.inv_std(r) *
                  (d_norm.row(r).array() - mean_d - cache.normalized.row(r).array() * mean_dx).matrix();
  }
  return d_in;
}

// Inverted dropout mask (entries 0 or 1/(1-p)); empty when inactive.
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, bool train, Rng* rng) {
  if (!train || p <= 0.0) return {};
  if (!rng) throw std::invalid_argument("training-mode forward pass needs an rng");
  Matrix m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng->uniform() < p ? 0.0 : keep;
  return m;
}

inline void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.size() != 0) x.array() *= mask.array();
}

inline void softmax_rows(Matrix& x) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double top = x.row(r).maxCoeff();
    x.row(r) = (x.row(r).array() - top).exp().matrix();
    x.row(r) /= x.row(r).sum();
  }
}

}  // namespace detail

/// Encodes <START> ids <STOP>; returns (n + 2) x model_dim. With `cache`
/// every activation needed by backward() is kept.
inline Matrix encode(const std::vector<std::size_t>& word_ids, const ModelParams& params, bool train,
                     Rng* rng, ForwardCache* cache = nullptr) {
  const ModelConfig& c = params.config;
  if (word_ids.empty()) throw std::invalid_argument("cannot encode an empty sentence");
  if (word_ids.size() > c.max_length)
    throw std::length_error("sentence of length " + std::to_string(word_ids.size()) +
                            " exceeds max_length " + std::to_string(c.max_length));

  std::vector<std::size_t> ids;
  ids.reserve(word_ids.size() + 2);
  ids.push_back(WordVocab::kStart);
  for (std::size_t w : word_ids) ids.push_back(w < c.vocab_size ? w : WordVocab::kUnk);
  ids.push_back(WordVocab::kStop);

  const Eigen::Index m = Eigen::Index(ids.size());
  const Eigen::Index d = Eigen::Index(c.model_dim);
  const std::size_t dk = c.key_dim();
  const double scale = 1.0 / std::sqrt(double(dk));

  Matrix x(m, d);
  for (Eigen::Index t = 0; t < m; ++t)
    x.row(t) = params.word_embedding.row(Eigen::Index(ids[std::size_t(t)])) + params.position_embedding.row(t);
  Matrix embed_mask = detail::dropout_mask(m, d, c.embedding_dropout, train, rng);
  detail::apply_mask(x, embed_mask);

  if (cache) {
    cache->valid = false;
    cache->ids = ids;
    cache->embed_mask = std::move(embed_mask);
    cache->layers.assign(params.layers.size(), {});
  }

  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const LayerParams& lp = params.layers[li];
    LayerCache local;
    LayerCache& lc = cache ? cache->layers[li] : local;
    lc.input = x;

    lc.normed1 = detail::layer_norm(x, lp.norm1_gain, lp.norm1_bias, &lc.norm1);
    lc.query = lc.normed1 * lp.query;
    lc.key = lc.normed1 * lp.key;
    lc.value = lc.normed1 * lp.value;
    lc.attended = Matrix(m, Eigen::Index(c.num_heads * dk));
    lc.attention.resize(c.num_heads);
    lc.attention_mask.resize(c.num_heads);
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      const Eigen::Index col = Eigen::Index(h * dk), w = Eigen::Index(dk);
      Matrix scores = scale * (lc.query.middleCols(col, w) * lc.key.middleCols(col, w).transpose());
      detail::softmax_rows(scores);
      lc.attention[h] = std::move(scores);
      lc.attention_mask[h] = detail::dropout_mask(m, m, c.attention_dropout, train, rng);
      Matrix weights = lc.attention[h];
      detail::apply_mask(weights, lc.attention_mask[h]);
      lc.attended.middleCols(col, w) = weights * lc.value.middleCols(col, w);
    }
    Matrix attn_out = lc.attended * lp.output;
    lc.attn_out_mask = detail::dropout_mask(m, d, c.residual_dropout, train, rng);
    detail::apply_mask(attn_out, lc.attn_out_mask);
    x += attn_out;
    lc.middle = x;

    lc.normed2 = detail::layer_norm(x, lp.norm2_gain, lp.norm2_bias, &lc.norm2);
    lc.hidden_pre = (lc.normed2 * lp.ff1).rowwise() + lp.ff1_bias.row(0);
    lc.hidden = lc.hidden_pre.cwiseMax(0.0);
    lc.relu_mask = detail::dropout_mask(m, Eigen::Index(c.ff_dim), c.relu_dropout, train, rng);
    detail::apply_mask(lc.hidden, lc.relu_mask);
    Matrix ff_out = (lc.hidden * lp.ff2).rowwise() + lp.ff2_bias.row(0);
    lc.ff_out_mask = detail::dropout_mask(m, d, c.residual_dropout, train, rng);
    detail::apply_mask(ff_out, lc.ff_out_mask);
    x += ff_out;
  }

  if (cache) cache->before_final = x;
  Matrix out = detail::layer_norm(x, params.final_gain, params.final_bias,
                                  cache ? &cache->final_norm : nullptr);
  if (cache) cache->encoded = out;
  return out;
}

/// Scores every span and label from encoder output of n + 2 rows. The null
/// label column stays 0.
inline SpanScoreTable span_scores(const Matrix& encoded, const ModelParams& params,
                                  ForwardCache* cache = nullptr) {
  const ModelConfig& c = params.config;
  if (encoded.rows() < 3) throw std::invalid_argument("encoded sentence is empty");
  const std::size_t n = std::size_t(encoded.rows()) - 2;
  const Eigen::Index half = Eigen::Index(c.model_dim / 2);
  const Eigen::Index fence = Eigen::Index(n + 1);

  const auto forward_half = encoded.topRows(fence).leftCols(half);
  const auto backward_half = encoded.bottomRows(fence).rightCols(half);
  const Matrix proj_f = forward_half * params.span_hidden.topRows(half);
  const Matrix proj_b = backward_half * params.span_hidden.bottomRows(half);

  const Eigen::Index spans = Eigen::Index(n * (n + 1) / 2);
  const Eigen::Index hid = Eigen::Index(c.label_hidden_dim);
  Matrix pre(spans, hid);
  std::vector<std::pair<std::size_t, std::size_t>> index;
  index.reserve(std::size_t(spans));
  Eigen::Index s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j, ++s) {
      const auto I = Eigen::Index(i), J = Eigen::Index(j);
      pre.row(s) = proj_f.row(J) - proj_f.row(I) + proj_b.row(I) - proj_b.row(J) +
                   params.span_hidden_bias.row(0);
      index.emplace_back(i, j);
    }
  }
  Matrix hidden = pre.cwiseMax(0.0);
  const Matrix out = (hidden * params.span_output).rowwise() + params.span_output_bias.row(0);

  SpanScoreTable table(n, c.num_labels);
  for (Eigen::Index r = 0; r < spans; ++r) {
    auto [i, j] = index[std::size_t(r)];
    double* row = table.row(i, j);
    for (Eigen::Index l = 0; l < out.cols(); ++l) row[l + 1] = out(r, l);
  }
  if (cache) {
    cache->span_index = std::move(index);
    cache->span_pre = std::move(pre);
    cache->span_hidden = std::move(hidden);
    cache->valid = true;
  }
  return table;
}

/// encode + span_scores with caching for a later backward().
inline SpanScoreTable forward(const std::vector<std::size_t>& word_ids, const ModelParams& params,
                              bool train, Rng* rng, ForwardCache& cache) {
  Matrix encoded = encode(word_ids, params, train, rng, &cache);
  return span_scores(encoded, params, &cache);
}

inline SpanScoreTable score_sentence(const std::vector<std::size_t>& word_ids, const ModelParams& params) {
  return span_scores(encode(word_ids, params, false, nullptr), params);
}

// ---------------------------------------------------------------------------
// Backward pass

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/d(table) for the
/// forward pass recorded in `cache`. Rows of the table gradient that are
/// entirely zero are skipped.
inline void backward(const SpanScoreTable& d_table, const ForwardCache& cache, const ModelParams& params,
                     ModelParams& grads) {
  if (!cache.valid) throw std::logic_error("backward() called without a cached forward pass");
  const ModelConfig& c = params.config;
  const std::size_t n = cache.ids.size() - 2;
  if (d_table.length() != n || d_table.num_labels() != c.num_labels)
    throw std::invalid_argument("table gradient does not match the cached forward pass");

  const Eigen::Index d = Eigen::Index(c.model_dim);
  const Eigen::Index half = d / 2;
  const Eigen::Index m = Eigen::Index(n + 2);
  const Eigen::Index fence = Eigen::Index(n + 1);
  const Eigen::Index hid = Eigen::Index(c.label_hidden_dim);
  const Eigen::Index outs = Eigen::Index(c.num_labels - 1);

  // Span classifier.
  Matrix d_proj_f = Matrix::Zero(fence, hid);
  Matrix d_proj_b = Matrix::Zero(fence, hid);
  Eigen::RowVectorXd d_out(outs);
  for (std::size_t r = 0; r < cache.span_index.size(); ++r) {
    auto [i, j] = cache.span_index[r];
    const double* row = d_table.row(i, j);
    bool any = false;
    for (Eigen::Index l = 0; l < outs; ++l) {
      d_out(l) = row[l + 1];
      any = any || d_out(l) != 0.0;
    }
    if (!any) continue;
    const auto R = Eigen::Index(r);
    grads.span_output.noalias() += cache.span_hidden.row(R).transpose() * d_out;
    grads.span_output_bias.row(0) += d_out;
    Eigen::RowVectorXd d_pre = d_out * params.span_output.transpose();
    for (Eigen::Index k = 0; k < hid; ++k)
      if (cache.span_pre(R, k) <= 0.0) d_pre(k) = 0.0;
    grads.span_hidden_bias.row(0) += d_pre;
    const auto I = Eigen::Index(i), J = Eigen::Index(j);
    d_proj_f.row(J) += d_pre;
    d_proj_f.row(I) -= d_pre;
    d_proj_b.row(I) += d_pre;
    d_proj_b.row(J) -= d_pre;
  }
  const auto forward_half = cache.encoded.topRows(fence).leftCols(half);
  const auto backward_half = cache.encoded.bottomRows(fence).rightCols(half);
  grads.span_hidden.topRows(half).noalias() += forward_half.transpose() * d_proj_f;
  grads.span_hidden.bottomRows(half).noalias() += backward_half.transpose() * d_proj_b;

  Matrix d_x = Matrix::Zero(m, d);
  d_x.topRows(fence).leftCols(half).noalias() += d_proj_f * params.span_hidden.topRows(half).transpose();
  d_x.bottomRows(fence).rightCols(half).noalias() += d_proj_b * params.span_hidden.bottomRows(half).transpose();

  d_x = detail::layer_norm_backward(d_x, cache.final_norm, params.final_gain, grads.final_gain,
                                    grads.final_bias);

  const std::size_t dk = c.key_dim();
  const double scale = 1.0 / std::sqrt(double(dk));
  for (std::size_t li = params.layers.size(); li-- > 0;) {
    const LayerParams& lp = params.layers[li];
    LayerParams& lg = grads.layers[li];
    const LayerCache& lc = cache.layers[li];

    // Feed-forward sublayer.
    Matrix d_ff = d_x;
    detail::apply_mask(d_ff, lc.ff_out_mask);
    lg.ff2.noalias() += lc.hidden.transpose() * d_ff;
    lg.ff2_bias.row(0) += d_ff.colwise().sum();
    Matrix d_hidden = d_ff * lp.ff2.transpose();
    detail::apply_mask(d_hidden, lc.relu_mask);
    d_hidden.array() *= (lc.hidden_pre.array() > 0.0).cast<double>();
    lg.ff1.noalias() += lc.normed2.transpose() * d_hidden;
    lg.ff1_bias.row(0) += d_hidden.colwise().sum();
    Matrix d_normed2 = d_hidden * lp.ff1.transpose();
    d_x += detail::layer_norm_backward(d_normed2, lc.norm2, lp.norm2_gain, lg.norm2_gain, lg.norm2_bias);

    // Attention sublayer.
    Matrix d_attn = d_x;
    detail::apply_mask(d_attn, lc.attn_out_mask);
    lg.output.noalias() += lc.attended.transpose() * d_attn;
    Matrix d_attended = d_attn * lp.output.transpose();
    Matrix d_query(m, Eigen::Index(c.num_heads * dk));
    Matrix d_key(m, Eigen::Index(c.num_heads * dk));
    Matrix d_value(m, Eigen::Index(c.num_heads * dk));
    for (std::size_t h = 0; h < c.num_heads; ++h) {
      const Eigen::Index col = Eigen::Index(h * dk), w = Eigen::Index(dk);
      Matrix weights = lc.attention[h];
      detail::apply_mask(weights, lc.attention_mask[h]);
      const auto d_head = d_attended.middleCols(col, w);
      d_value.middleCols(col, w) = weights.transpose() * d_head;
      Matrix d_weights = d_head * lc.value.middleCols(col, w).transpose();
      detail::apply_mask(d_weights, lc.attention_mask[h]);
      const Matrix& p = lc.attention[h];
      const Eigen::VectorXd dot = (d_weights.array() * p.array()).rowwise().sum();
      Matrix d_scores = p.array() * (d_weights.array().colwise() - dot.array());
      d_scores *= scale;
      d_query.middleCols(col, w) = d_scores * lc.key.middleCols(col, w);
      d_key.middleCols(col, w) = d_scores.transpose() * lc.query.middleCols(col, w);
    }
    lg.query.noalias() += lc.normed1.transpose() * d_query;
    lg.key.noalias() += lc.normed1.transpose() * d_key;
    lg.value.noalias() += lc.normed1.transpose() * d_value;
    Matrix d_normed1 = d_query * lp.query.transpose() + d_key * lp.key.transpose() +
                       d_value * lp.value.transpose();
    d_x += detail::layer_norm_backward(d_normed1, lc.norm1, lp.norm1_gain, lg.norm1_gain, lg.norm1_bias);
  }

  detail::apply_mask(d_x, cache.embed_mask);
  for (Eigen::Index t = 0; t < m; ++t) {
    grads.word_embedding.row(Eigen::Index(cache.ids[std::size_t(t)])) += d_x.row(t);
    grads.position_embedding.row(t) += d_x.row(t);
  }
}

}  // namespace disfl

#endif  // DISFL_MODEL_HPP
