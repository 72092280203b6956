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

// Chart-side representation of trees. Unary chains are collapsed into
// composite labels ("S+VP"), label index 0 is the null label, and a chart
// tree is a binary bracketing whose null nodes are spliced out when it is
// turned back into an n-ary Tree.

#ifndef DISFL_CHART_HPP
#define DISFL_CHART_HPP

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "disfl/tree.hpp"

namespace disfl {

inline constexpr std::size_t kNullLabel = 0;
inline constexpr char kChainSeparator = '+';

inline std::vector<std::string> split_chain(std::string_view label) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  for (;;) {
    const std::size_t at = label.find(kChainSeparator, begin);
    parts.emplace_back(label.substr(begin, at == std::string_view::npos ? label.size() - begin
                                                                        : at - begin));
    if (at == std::string_view::npos) break;
    begin = at + 1;
  }
  return parts;
}

/// Chart labels. Index 0 is the null label (empty string).
class LabelVocab {
 public:
  LabelVocab() {
    labels_.emplace_back();
    root_.push_back(false);
  }

  explicit LabelVocab(const std::vector<std::string>& labels) : LabelVocab() {
    for (const auto& l : labels) add(l);
  }

  std::size_t add(const std::string& label) {
    if (label.empty()) return kNullLabel;
    auto [it, inserted] = index_.try_emplace(label, labels_.size());
    if (inserted) {
      labels_.push_back(label);
      root_.push_back(false);
    }
    return it->second;
  }

  /// Marks a label as seen on a whole-sentence span. Once any label is
  /// marked, decoding restricts the root cell to marked labels.
  void mark_root(std::size_t i) {
    if (i == kNullLabel || i >= labels_.size()) throw std::out_of_range("cannot mark label " + std::to_string(i) + " as a root");
    root_.at(i) = true;
  }
  bool is_root(std::size_t i) const { return root_.at(i); }
  bool restricts_root() const { return std::find(root_.begin(), root_.end(), true) != root_.end(); }
  std::vector<std::size_t> root_labels() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < root_.size(); ++i)
      if (root_[i]) out.push_back(i);
    return out;
  }
  /// Per-label root permission, or empty when the root is unrestricted.
  std::vector<bool> root_mask() const { return restricts_root() ? root_ : std::vector<bool>{}; }

  std::optional<std::size_t> find(std::string_view label) const {
    if (label.empty()) return kNullLabel;
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index(std::string_view label) const {
    auto i = find(label);
    if (!i) throw std::out_of_range("label '" + std::string(label) + "' not in vocabulary");
    return *i;
  }

  const std::string& label(std::size_t i) const { return labels_.at(i); }
  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  friend bool operator==(const LabelVocab& a, const LabelVocab& b) {
    return a.labels_ == b.labels_ && a.root_ == b.root_;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<bool> root_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

/// Dense scores s(i, j, l) for 0 <= i < j <= n over all chart labels. The
/// null column is always 0.
class SpanScoreTable {
 public:
  SpanScoreTable() = default;
  SpanScoreTable(std::size_t length, std::size_t num_labels)
      : n_(length), labels_(num_labels), data_((length + 1) * (length + 1) * num_labels, 0.0) {}

  std::size_t length() const { return n_; }
  std::size_t num_labels() const { return labels_; }

  double at(std::size_t i, std::size_t j, std::size_t l) const { return data_[offset(i, j) + l]; }

  // Writable access; writing to the null column is a logic error.
  double& at(std::size_t i, std::size_t j, std::size_t l) {
    assert(l != kNullLabel);
    return data_[offset(i, j) + l];
  }

  double* row(std::size_t i, std::size_t j) { return data_.data() + offset(i, j); }
  const double* row(std::size_t i, std::size_t j) const { return data_.data() + offset(i, j); }

  std::size_t span_count() const { return n_ * (n_ + 1) / 2; }

  void fill(double v) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j <= n_; ++j)
        for (std::size_t l = 1; l < labels_; ++l) at(i, j, l) = v;
  }

  friend bool operator==(const SpanScoreTable&, const SpanScoreTable&) = default;

 private:
  std::size_t offset(std::size_t i, std::size_t j) const {
    assert(i < j && j <= n_);
    return (i * (n_ + 1) + j) * labels_;
  }

  std::size_t n_ = 0;
  std::size_t labels_ = 0;
  std::vector<double> data_;
};

struct ChartSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t label = kNullLabel;

  friend auto operator<=>(const ChartSpan&, const ChartSpan&) = default;
};

/// A binary bracketing in preorder. `split` is meaningful only for nodes
/// covering two or more tokens.
struct ChartNode {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t split = 0;
  std::size_t label = kNullLabel;

  friend bool operator==(const ChartNode&, const ChartNode&) = default;
};

struct ChartTree {
  std::size_t length = 0;
  std::vector<ChartNode> nodes;

  std::vector<ChartSpan> labeled_spans() const {
    std::vector<ChartSpan> out;
    for (const auto& n : nodes)
      if (n.label != kNullLabel) out.push_back({n.start, n.end, n.label});
    return out;
  }

  friend bool operator==(const ChartTree&, const ChartTree&) = default;
};

namespace detail {

// Follows a unary chain starting at `node`; returns the composite label and
// the bottom node of the chain.
inline std::pair<std::string, const Tree*> collapse_chain(const Tree& node) {
  std::string label = node.label;
  const Tree* cur = &node;
  while (cur->children.size() == 1 && !cur->children.front().is_leaf()) {
    cur = &cur->children.front();
    label += kChainSeparator;
    label += cur->label;
  }
  return {label, cur};
}

inline std::size_t collect_collapsed(const Tree& tree, std::size_t start,
                                     std::vector<std::pair<LabeledSpan, std::size_t>>& out) {
  if (tree.is_leaf()) return start + 1;
  auto [label, bottom] = collapse_chain(tree);
  const std::size_t slot = out.size();
  out.push_back({{start, start, std::move(label)}, 0});
  std::size_t end = start;
  for (const Tree& child : bottom->children) end = collect_collapsed(child, end, out);
  out[slot].first.end = end;
  return end;
}

}  // namespace detail

/// Spans of `tree` with unary chains collapsed into composite labels, in
/// preorder. No two returned spans share the same (start, end).
inline std::vector<LabeledSpan> collapsed_spans(const Tree& tree) {
  std::vector<std::pair<LabeledSpan, std::size_t>> tmp;
  detail::collect_collapsed(tree, 0, tmp);
  std::vector<LabeledSpan> out;
  out.reserve(tmp.size());
  for (auto& p : tmp) out.push_back(std::move(p.first));
  return out;
}

/// Adds every collapsed label of the tree and marks the root chain label.
inline void add_tree_labels(LabelVocab& vocab, const Tree& tree) {
  const auto spans = collapsed_spans(tree);
  for (const auto& s : spans) vocab.add(s.label);
  if (!spans.empty()) vocab.mark_root(vocab.index(spans.front().label));
}

/// Collapsed spans mapped to label indices; throws if a label is unknown.
inline std::vector<ChartSpan> chart_spans(const Tree& tree, const LabelVocab& vocab) {
  std::vector<ChartSpan> out;
  for (const auto& s : collapsed_spans(tree)) out.push_back({s.start, s.end, vocab.index(s.label)});
  return out;
}

namespace detail {

struct Binarizer {
  const LabelVocab& vocab;
  ChartTree out;

  // Emits a chart node covering `kids` (consecutive children) with `label`.
  std::size_t emit_group(const std::vector<const Tree*>& kids, std::size_t first, std::size_t start,
                         std::size_t label) {
    if (kids.size() - first == 1) return emit(*kids[first], start, label);
    const std::size_t slot = out.nodes.size();
    out.nodes.push_back({start, start, start, label});
    const std::size_t mid = emit(*kids[first], start, kNullLabel);
    out.nodes[slot].split = mid;
    const std::size_t end = emit_group(kids, first + 1, mid, kNullLabel);
    out.nodes[slot].end = end;
    return end;
  }

  // `outer` is the label an enclosing null group wants to give this node;
  // only used when the node is a leaf-level chart cell.
  std::size_t emit(const Tree& tree, std::size_t start, std::size_t outer) {
    if (tree.is_leaf()) {
      out.nodes.push_back({start, start + 1, start, outer});
      return start + 1;
    }
    auto [label, bottom] = collapse_chain(tree);
    const std::size_t id = vocab.index(label);
    std::vector<const Tree*> kids;
    for (const Tree& c : bottom->children) kids.push_back(&c);
    if (kids.size() == 1) {
      // Chain ending in a single preterminal: one labeled length-1 cell.
      out.nodes.push_back({start, start + 1, start, id});
      return start + 1;
    }
    return emit_group(kids, 0, start, id);
  }
};

inline void to_forest(const ChartTree& chart, std::size_t& at, const std::vector<Token>& tokens,
                      const LabelVocab& vocab, std::vector<Tree>& out) {
  const ChartNode& node = chart.nodes.at(at++);
  std::vector<Tree> kids;
  if (node.end - node.start == 1) {
    kids.push_back(Tree::leaf(tokens.at(node.start).pos, tokens.at(node.start).word));
  } else {
    to_forest(chart, at, tokens, vocab, kids);
    to_forest(chart, at, tokens, vocab, kids);
  }
  if (node.label == kNullLabel) {
    for (Tree& k : kids) out.push_back(std::move(k));
    return;
  }
  const auto parts = split_chain(vocab.label(node.label));
  Tree built = Tree::node(parts.back(), std::move(kids));
  for (std::size_t p = parts.size() - 1; p-- > 0;) built = Tree::node(parts[p], {std::move(built)});
  out.push_back(std::move(built));
}

}  // namespace detail

/// Right-branching binarization with null intermediate nodes. Requires an
/// internal root.
inline ChartTree binarize(const Tree& tree, const LabelVocab& vocab) {
  if (tree.is_leaf()) throw std::invalid_argument("cannot binarize a tree without constituents");
  detail::Binarizer b{vocab, {}};
  b.out.length = b.emit(tree, 0, kNullLabel);
  return std::move(b.out);
}

/// Rebuilds an n-ary tree: null nodes are spliced out, composite labels are
/// expanded back into unary chains. The root must carry a label.
inline Tree to_tree(const ChartTree& chart, const std::vector<Token>& tokens, const LabelVocab& vocab) {
  if (chart.nodes.empty() || chart.nodes.front().label == kNullLabel)
    throw std::invalid_argument("chart root must carry a non-null label");
  if (tokens.size() != chart.length) throw std::invalid_argument("token count does not match chart");
  std::vector<Tree> forest;
  std::size_t at = 0;
  detail::to_forest(chart, at, tokens, vocab, forest);
  return std::move(forest.front());
}

}  // namespace disfl

#endif  // DISFL_CHART_HPP
