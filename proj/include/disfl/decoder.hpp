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

// Span-factored tree scoring, CKY argmax decoding over binary trees with a
// null label, Hamming-augmented decoding and the structured hinge loss.

#ifndef DISFL_DECODER_HPP
#define DISFL_DECODER_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "disfl/chart.hpp"
#include "disfl/metrics.hpp"
#include "disfl/tree.hpp"

namespace disfl {

/// Per-label multipliers on span scores: one value for labels containing
/// EDITED, one for everything else.
struct LabelWeights {
  double edited_weight = 1.0;
  double default_weight = 1.0;

  static LabelWeights unit() { return {1.0, 1.0}; }

  void validate() const {
    if (!(edited_weight > 0.0) || !(default_weight > 0.0))
      throw std::invalid_argument("label weights must be positive");
  }

  friend bool operator==(const LabelWeights&, const LabelWeights&) = default;
};

/// Weight of each chart label. Composite labels take the EDITED weight when
/// any link of the chain is EDITED.
inline std::vector<double> label_weight_vector(const LabelVocab& vocab, const LabelWeights& w) {
  std::vector<double> out(vocab.size(), 0.0);
  for (std::size_t l = 1; l < vocab.size(); ++l) {
    const auto parts = split_chain(vocab.label(l));
    const bool edited = std::find(parts.begin(), parts.end(), std::string(kEdited)) != parts.end();
    out[l] = edited ? w.edited_weight : w.default_weight;
  }
  return out;
}

inline double chart_span_score(const std::vector<ChartSpan>& spans, const SpanScoreTable& table,
                               const std::vector<double>& weights) {
  double total = 0.0;
  for (const auto& s : spans) total += weights[s.label] * table.at(s.start, s.end, s.label);
  return total;
}

/// Weighted sum of span scores over the tree's constituents (unary chains
/// scored as their composite label).
inline double tree_score(const Tree& tree, const SpanScoreTable& table, const LabelVocab& vocab,
                         const LabelWeights& weights = LabelWeights::unit()) {
  if (fringe_length(tree) != table.length())
    throw std::invalid_argument("tree has " + std::to_string(fringe_length(tree)) +
                                " tokens but the score table covers " +
                                std::to_string(table.length()));
  return chart_span_score(chart_spans(tree, vocab), table, label_weight_vector(vocab, weights));
}

/// Additive per-cell augmentation. `cell(i, j)` returns a pointer to the
/// num_labels offsets for span (i, j).
class Augmentation {
 public:
  Augmentation() = default;
  Augmentation(std::size_t n, std::size_t labels)
      : n_(n), labels_(labels), data_((n + 1) * (n + 1) * labels, 0.0) {}

  bool empty() const { return data_.empty(); }
  double& at(std::size_t i, std::size_t j, std::size_t l) { return data_[(i * (n_ + 1) + j) * labels_ + l]; }
  double at(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * (n_ + 1) + j) * labels_ + l];
  }

  double constant = 0.0;

 private:
  std::size_t n_ = 0;
  std::size_t labels_ = 0;
  std::vector<double> data_;
};

struct DecodeResult {
  ChartTree tree;
  // Optimal weighted score (plus augmentation, including its constant, when
  // decoding with one).
  double score = 0.0;
};

/// CKY over binary bracketings. Every cell picks its best label (null
/// allowed except at the root) independently of its best split. Ties go to
/// the lowest split point, then the lowest label index. A nonempty
/// `root_mask` limits the root cell to labels whose entry is true.
inline DecodeResult cyk_decode(const SpanScoreTable& table, const std::vector<double>& weights,
                               const Augmentation* aug = nullptr, const std::vector<bool>& root_mask = {}) {
  const std::size_t n = table.length();
  const std::size_t L = table.num_labels();
  if (n == 0) throw std::invalid_argument("cannot decode an empty sentence");
  if (weights.size() != L) throw std::invalid_argument("weight vector does not match label count");
  if (!root_mask.empty() &&
      (root_mask.size() != L || std::find(root_mask.begin() + 1, root_mask.end(), true) == root_mask.end()))
    throw std::invalid_argument("root mask must cover every label and allow at least one");

  const std::size_t stride = n + 1;
  std::vector<double> best(stride * stride, 0.0);
  std::vector<std::size_t> best_label(stride * stride, kNullLabel);
  std::vector<std::size_t> best_split(stride * stride, 0);

  auto label_choice = [&](std::size_t i, std::size_t j, bool root) {
    const double* row = table.row(i, j);
    std::size_t arg = root ? 1 : 0;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t l = arg; l < L; ++l) {
      if (root && !root_mask.empty() && !root_mask[l]) continue;
      double v = l == kNullLabel ? 0.0 : weights[l] * row[l];
      if (aug) v += aug->at(i, j, l);
      if (v > top) {
        top = v;
        arg = l;
      }
    }
    return std::pair{top, arg};
  };

  for (std::size_t len = 1; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      auto [lab, arg] = label_choice(i, j, len == n);
      double split_best = 0.0;
      std::size_t split_arg = i;
      if (len > 1) {
        split_best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = i + 1; k < j; ++k) {
          const double v = best[i * stride + k] + best[k * stride + j];
          if (v > split_best) {
            split_best = v;
            split_arg = k;
          }
        }
      }
      best[i * stride + j] = len > 1 ? lab + split_best : lab;
      best_label[i * stride + j] = arg;
      best_split[i * stride + j] = split_arg;
    }
  }

  DecodeResult out;
  out.tree.length = n;
  out.score = best[n] + (aug ? aug->constant : 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n}};
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    const std::size_t k = best_split[i * stride + j];
    out.tree.nodes.push_back({i, j, k, best_label[i * stride + j]});
    if (j - i > 1) {
      stack.push_back({k, j});
      stack.push_back({i, k});
    }
  }
  return out;
}

inline DecodeResult cyk_decode(const SpanScoreTable& table, const LabelVocab& vocab,
                               const LabelWeights& weights = LabelWeights::unit()) {
  return cyk_decode(table, label_weight_vector(vocab, weights), nullptr, vocab.root_mask());
}

/// Decodes and rebuilds the n-ary tree over `tokens`.
inline Tree decode_tree(const SpanScoreTable& table, const LabelVocab& vocab,
                        const std::vector<Token>& tokens,
                        const LabelWeights& weights = LabelWeights::unit()) {
  return to_tree(cyk_decode(table, vocab, weights).tree, tokens, vocab);
}

/// Size of the symmetric multiset difference of the labeled spans.
inline std::size_t hamming(const Tree& pred, const Tree& gold) {
  const Counts c = span_counts(gold, pred);
  return (c.predicted - c.correct) + (c.gold - c.correct);
}

/// Per-cell augmentation such that, for any chart tree T over the same
/// tokens, sum of its cells plus `constant` equals hamming(T, gold) on the
/// expanded (unary-chain) spans.
inline Augmentation hamming_augmentation(const Tree& gold, const LabelVocab& vocab) {
  const std::size_t n = fringe_length(gold);
  const std::size_t L = vocab.size();
  Augmentation aug(n, L);

  // Sorted chain links per label, for multiset intersection.
  std::vector<std::vector<std::string>> parts(L);
  for (std::size_t l = 1; l < L; ++l) {
    parts[l] = split_chain(vocab.label(l));
    std::sort(parts[l].begin(), parts[l].end());
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j <= n; ++j)
      for (std::size_t l = 1; l < L; ++l) aug.at(i, j, l) = double(parts[l].size());

  for (const auto& s : collapsed_spans(gold)) {
    auto g = split_chain(s.label);
    std::sort(g.begin(), g.end());
    aug.constant += double(g.size());
    for (std::size_t l = 1; l < L; ++l) {
      std::vector<std::string> common;
      std::set_intersection(parts[l].begin(), parts[l].end(), g.begin(), g.end(),
                            std::back_inserter(common));
      aug.at(s.start, s.end, l) -= 2.0 * double(common.size());
    }
  }
  return aug;
}

/// argmax over chart trees of weighted s(T) + hamming(T, gold), with the
/// vocabulary's root restriction. The result score is that objective value.
inline DecodeResult loss_augmented_decode(const SpanScoreTable& table, const Tree& gold,
                                          const LabelVocab& vocab,
                                          const LabelWeights& weights = LabelWeights::unit()) {
  if (fringe_length(gold) != table.length())
    throw FringeMismatch("gold tree has " + std::to_string(fringe_length(gold)) +
                         " tokens but the score table covers " + std::to_string(table.length()));
  const Augmentation aug = hamming_augmentation(gold, vocab);
  return cyk_decode(table, label_weight_vector(vocab, weights), &aug, vocab.root_mask());
}

struct HingeResult {
  double loss = 0.0;
  SpanScoreTable gradient;
  ChartTree predicted;
  double predicted_objective = 0.0;  // s(T^) + hamming(T^, gold)
  double gold_score = 0.0;
};

/// max(0, max_T [s(T) + hamming(T, gold)] - s(gold)) with label weights
/// applied to every span score. The table gradient is +w on the augmented
/// argmax spans and -w on the gold spans when the loss is positive.
inline HingeResult hinge_loss(const SpanScoreTable& table, const Tree& gold, const LabelVocab& vocab,
                              const LabelWeights& weights = LabelWeights::unit()) {
  const auto w = label_weight_vector(vocab, weights);
  const auto gold_spans = chart_spans(gold, vocab);
  const Augmentation aug = [&] {
    if (fringe_length(gold) != table.length())
      throw FringeMismatch("gold tree has " + std::to_string(fringe_length(gold)) +
                           " tokens but the score table covers " + std::to_string(table.length()));
    return hamming_augmentation(gold, vocab);
  }();
  DecodeResult best = cyk_decode(table, w, &aug, vocab.root_mask());

  HingeResult out;
  out.gradient = SpanScoreTable(table.length(), table.num_labels());
  out.gold_score = chart_span_score(gold_spans, table, w);
  out.predicted_objective = best.score;
  out.predicted = std::move(best.tree);
  // When the argmax is gold itself the two sums differ only by rounding.
  auto predicted_spans = out.predicted.labeled_spans();
  auto sorted_gold = gold_spans;
  std::sort(predicted_spans.begin(), predicted_spans.end());
  std::sort(sorted_gold.begin(), sorted_gold.end());
  const bool is_gold = predicted_spans == sorted_gold;
  out.loss = is_gold ? 0.0 : std::max(0.0, out.predicted_objective - out.gold_score);
  if (out.loss > 0.0) {
    for (const auto& s : out.predicted.labeled_spans()) out.gradient.at(s.start, s.end, s.label) += w[s.label];
    for (const auto& s : gold_spans) out.gradient.at(s.start, s.end, s.label) -= w[s.label];
  }
  return out;
}

}  // namespace disfl

#endif  // DISFL_DECODER_HPP
