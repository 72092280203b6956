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

// Labeled-span and disfluency-word precision/recall/F with micro-averaging.

#ifndef DISFL_METRICS_HPP
#define DISFL_METRICS_HPP

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <iterator>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "disfl/tree.hpp"

namespace disfl {

class FringeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Counts {
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t correct = 0;

  Counts& operator+=(const Counts& o) {
    predicted += o.predicted;
    gold += o.gold;
    correct += o.correct;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

struct PRF {
  std::size_t predicted_count = 0;
  std::size_t gold_count = 0;
  std::size_t correct_count = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;

  // P = 1 when nothing was predicted, R = 1 when nothing is gold.
  static PRF from_counts(const Counts& c) {
    PRF r;
    r.predicted_count = c.predicted;
    r.gold_count = c.gold;
    r.correct_count = c.correct;
    r.precision = c.predicted == 0 ? 1.0 : double(c.correct) / double(c.predicted);
    r.recall = c.gold == 0 ? 1.0 : double(c.correct) / double(c.gold);
    const double sum = r.precision + r.recall;
    r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
    return r;
  }

  Counts counts() const { return {predicted_count, gold_count, correct_count}; }
};

struct MetricReport {
  PRF span;         // S
  PRF edited_span;  // S_E
  PRF edited_word;  // W_E
  PRF eip_word;     // W_EIP
};

/// Throws FringeMismatch naming the first differing token.
inline void check_same_fringe(const Tree& gold, const Tree& pred) {
  const auto g = fringe(gold);
  const auto p = fringe(pred);
  const std::size_t n = std::min(g.size(), p.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i].word != p[i].word)
      throw FringeMismatch("fringe mismatch at token " + std::to_string(i) + ": gold '" +
                           g[i].word + "' vs predicted '" + p[i].word + "'");
  }
  if (g.size() != p.size())
    throw FringeMismatch("fringe length mismatch: gold has " + std::to_string(g.size()) +
                         " tokens, predicted has " + std::to_string(p.size()));
}

inline std::vector<LabeledSpan> filtered_spans(const Tree& tree, const LabelSet* filter) {
  auto s = spans(tree);
  if (filter)
    std::erase_if(s, [&](const LabeledSpan& sp) { return !filter->contains(sp.label); });
  std::sort(s.begin(), s.end());
  return s;
}

// Size of the multiset intersection of two sorted span lists.
inline std::size_t multiset_overlap(const std::vector<LabeledSpan>& a,
                                    const std::vector<LabeledSpan>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

inline Counts span_counts(const Tree& gold, const Tree& pred, const LabelSet* filter = nullptr) {
  check_same_fringe(gold, pred);
  const auto g = filtered_spans(gold, filter);
  const auto p = filtered_spans(pred, filter);
  return {p.size(), g.size(), multiset_overlap(g, p)};
}

inline Counts word_counts(const Tree& gold, const Tree& pred, const LabelSet& labels) {
  check_same_fringe(gold, pred);
  const auto g = disfluency_word_positions(gold, labels);
  const auto p = disfluency_word_positions(pred, labels);
  std::vector<std::size_t> both;
  std::set_intersection(g.begin(), g.end(), p.begin(), p.end(), std::back_inserter(both));
  return {p.size(), g.size(), both.size()};
}

inline PRF span_prf(const Tree& gold, const Tree& pred,
                    const std::optional<LabelSet>& label_filter = std::nullopt) {
  return PRF::from_counts(span_counts(gold, pred, label_filter ? &*label_filter : nullptr));
}

inline PRF word_prf(const Tree& gold, const Tree& pred, const LabelSet& labels) {
  return PRF::from_counts(word_counts(gold, pred, labels));
}

/// Accumulates per-sentence counts; P/R/F are computed from the sums.
class ReportAccumulator {
 public:
  void add(const Tree& gold, const Tree& pred) {
    static const LabelSet edited = edited_labels();
    static const LabelSet eip = eip_labels();
    span_ += span_counts(gold, pred);
    edited_span_ += span_counts(gold, pred, &edited);
    edited_word_ += word_counts(gold, pred, edited);
    eip_word_ += word_counts(gold, pred, eip);
  }

  // A sentence with no prediction: its gold items count as missed.
  void add_missing(const Tree& gold) {
    static const LabelSet edited = edited_labels();
    static const LabelSet eip = eip_labels();
    span_.gold += spans(gold).size();
    edited_span_.gold += filtered_spans(gold, &edited).size();
    edited_word_.gold += disfluency_word_positions(gold, edited).size();
    eip_word_.gold += disfluency_word_positions(gold, eip).size();
  }

  MetricReport report() const {
    return {PRF::from_counts(span_), PRF::from_counts(edited_span_),
            PRF::from_counts(edited_word_), PRF::from_counts(eip_word_)};
  }

 private:
  Counts span_, edited_span_, edited_word_, eip_word_;
};

inline MetricReport corpus_report(const std::vector<Tree>& gold, const std::vector<Tree>& pred) {
  if (gold.size() != pred.size())
    throw FringeMismatch("corpus length mismatch: " + std::to_string(gold.size()) + " gold vs " +
                         std::to_string(pred.size()) + " predicted trees");
  ReportAccumulator acc;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    try {
      acc.add(gold[i], pred[i]);
    } catch (const FringeMismatch& e) {
      throw FringeMismatch("sentence " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return acc.report();
}

/// One tag per token: E under EDITED, else I under INTJ, else P under PRN,
/// else O.
inline std::vector<char> disfluency_tags(const Tree& tree) {
  std::vector<char> tags(fringe_length(tree), 'O');
  for (const auto& [label, tag] : {std::pair{kPrn, 'P'}, std::pair{kIntj, 'I'}, std::pair{kEdited, 'E'}})
    for (std::size_t i : disfluency_word_positions(tree, LabelSet{std::string(label)})) tags[i] = tag;
  return tags;
}

enum class ReportRows { kAll, kEdited, kEip };

/// Fixed-format table: one row per metric, P/R/F to four decimals, counts.
inline void print_report(std::ostream& os, const MetricReport& r, ReportRows rows = ReportRows::kAll) {
  auto row = [&](const char* name, const PRF& p) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-6s %8.4f %8.4f %8.4f %10zu %10zu %10zu\n", name, p.precision,
                  p.recall, p.f1, p.predicted_count, p.gold_count, p.correct_count);
    os << buf;
  };
  char head[160];
  std::snprintf(head, sizeof head, "%-6s %8s %8s %8s %10s %10s %10s\n", "metric", "P", "R", "F",
                "predicted", "gold", "correct");
  os << head;
  row("S", r.span);
  row("S_E", r.edited_span);
  if (rows != ReportRows::kEip) row("W_E", r.edited_word);
  if (rows != ReportRows::kEdited) row("W_EIP", r.eip_word);
}

}  // namespace disfl

#endif  // DISFL_METRICS_HPP
