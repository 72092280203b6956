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

#include <gtest/gtest.h>

#include <sstream>

#include "disfl/metrics.hpp"
#include "disfl/transforms.hpp"
#include "test_support.hpp"

namespace disfl {
namespace {

using testing::figure2_gold;
using testing::figure2_pred;

TEST(Metrics, WorkedExampleSpans) {
  const PRF p = span_prf(figure2_gold(), figure2_pred());
  EXPECT_EQ(p.predicted_count, 13u);
  EXPECT_EQ(p.gold_count, 14u);
  EXPECT_EQ(p.correct_count, 12u);
  EXPECT_DOUBLE_EQ(p.precision, 12.0 / 13.0);
  EXPECT_DOUBLE_EQ(p.recall, 12.0 / 14.0);
  EXPECT_NEAR(p.f1, 0.8889, 5e-5);
}

TEST(Metrics, WorkedExampleWords) {
  const PRF e = word_prf(figure2_gold(), figure2_pred(), edited_labels());
  EXPECT_EQ(e.counts(), (Counts{1, 3, 1}));
  EXPECT_DOUBLE_EQ(e.precision, 1.0);
  EXPECT_DOUBLE_EQ(e.recall, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.f1, 0.5);

  const PRF eip = word_prf(figure2_gold(), figure2_pred(), eip_labels());
  EXPECT_EQ(eip.counts(), (Counts{4, 6, 4}));
  EXPECT_DOUBLE_EQ(eip.precision, 1.0);
  EXPECT_DOUBLE_EQ(eip.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(eip.f1, 0.8);
}

TEST(Metrics, IdenticalTreesScoreOne) {
  const Tree t = figure2_gold();
  for (const PRF& p : {span_prf(t, t), word_prf(t, t, edited_labels()), word_prf(t, t, eip_labels())}) {
    EXPECT_EQ(p.precision, 1.0);
    EXPECT_EQ(p.recall, 1.0);
    EXPECT_EQ(p.f1, 1.0);
  }
}

TEST(Metrics, EmptySetConventions) {
  const Tree fluent = parse_bracketed("(S (NP (PRP I)) (VP (VBP go)))");
  const PRF p = word_prf(fluent, fluent, edited_labels());
  EXPECT_EQ(p.counts(), (Counts{0, 0, 0}));
  EXPECT_EQ(p.precision, 1.0);
  EXPECT_EQ(p.recall, 1.0);
  EXPECT_EQ(p.f1, 1.0);

  const PRF zero = PRF::from_counts({3, 2, 0});
  EXPECT_EQ(zero.f1, 0.0);
  const PRF nothing_predicted = PRF::from_counts({0, 2, 0});
  EXPECT_EQ(nothing_predicted.precision, 1.0);
  EXPECT_EQ(nothing_predicted.recall, 0.0);
  EXPECT_EQ(nothing_predicted.f1, 0.0);
}

TEST(Metrics, LabelFilter) {
  const PRF se = span_prf(figure2_gold(), figure2_pred(), edited_labels());
  EXPECT_EQ(se.counts(), (Counts{1, 2, 1}));
}

TEST(Metrics, FringeMismatchNamesToken) {
  const Tree a = parse_bracketed("(S (NN a) (NN b))");
  const Tree b = parse_bracketed("(S (NN a) (NN c))");
  try {
    span_prf(a, b);
    FAIL();
  } catch (const FringeMismatch& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_THROW(word_prf(a, parse_bracketed("(S (NN a))"), eip_labels()), FringeMismatch);
  EXPECT_THROW(corpus_report({a}, {a, a}), FringeMismatch);
}

TEST(Metrics, CorpusReportMicroAverages) {
  const Tree g = figure2_gold(), p = figure2_pred();
  const MetricReport one = corpus_report({g}, {p});
  EXPECT_EQ(one.span.counts(), span_prf(g, p).counts());
  EXPECT_EQ(one.edited_word.counts(), word_prf(g, p, edited_labels()).counts());
  const MetricReport two = corpus_report({g, g}, {p, p});
  EXPECT_EQ(two.span.counts(), (Counts{26, 28, 24}));
  EXPECT_DOUBLE_EQ(two.span.f1, one.span.f1);
  EXPECT_DOUBLE_EQ(two.eip_word.f1, one.eip_word.f1);
}

TEST(Metrics, AgreesWithNaiveMatcherOnRandomPairs) {
  Rng rng(99);
  const std::vector<std::string> labels{"S", "NP", "VP", "EDITED", "INTJ", "PRN"};
  std::vector<Tree> golds, preds;
  Counts span_sum, edited_span_sum, we_sum, weip_sum;
  const LabelSet edited = edited_labels();
  for (int i = 0; i < 100; ++i) {
    const auto tokens = testing::make_tokens(1 + rng.below(9));
    Tree g = testing::random_tree_over(rng, tokens, 0, tokens.size(), labels);
    Tree p = testing::random_tree_over(rng, tokens, 0, tokens.size(), labels);
    if (g.is_leaf()) g = Tree::node("S", {g});
    if (p.is_leaf()) p = Tree::node("S", {p});
    ASSERT_EQ(span_counts(g, p), testing::naive_span_counts(g, p));
    ASSERT_EQ(span_counts(g, p, &edited), testing::naive_span_counts(g, p, &edited));
    ASSERT_EQ(word_counts(g, p, eip_labels()), testing::naive_word_counts(g, p, eip_labels()));
    span_sum += testing::naive_span_counts(g, p);
    edited_span_sum += testing::naive_span_counts(g, p, &edited);
    we_sum += testing::naive_word_counts(g, p, edited);
    weip_sum += testing::naive_word_counts(g, p, eip_labels());
    golds.push_back(g);
    preds.push_back(p);

    // Swapping gold and prediction swaps P and R and keeps F.
    const PRF fwd = span_prf(g, p), rev = span_prf(p, g);
    EXPECT_DOUBLE_EQ(fwd.precision, rev.recall);
    EXPECT_DOUBLE_EQ(fwd.f1, rev.f1);
  }
  const MetricReport r = corpus_report(golds, preds);
  EXPECT_EQ(r.span.counts(), span_sum);
  EXPECT_EQ(r.edited_span.counts(), edited_span_sum);
  EXPECT_EQ(r.edited_word.counts(), we_sum);
  EXPECT_EQ(r.eip_word.counts(), weip_sum);

  // Order invariance.
  std::reverse(golds.begin(), golds.end());
  std::reverse(preds.begin(), preds.end());
  EXPECT_EQ(corpus_report(golds, preds).span.counts(), span_sum);
}

TEST(Metrics, WordScoresInvariantUnderLosslessTransforms) {
  const Tree g = figure2_gold(), p = figure2_pred();
  for (auto f : {&pos_disfl, &top_disfl}) {
    EXPECT_EQ(word_prf(f(g), f(p), edited_labels()).counts(), word_prf(g, p, edited_labels()).counts());
    EXPECT_EQ(word_prf(f(g), f(p), eip_labels()).counts(), word_prf(g, p, eip_labels()).counts());
  }
}

TEST(Metrics, ReportTableFormat) {
  std::ostringstream os;
  print_report(os, corpus_report({figure2_gold()}, {figure2_pred()}));
  const std::string s = os.str();
  EXPECT_NE(s.find("S        0.9231   0.8571   0.8889         13         14         12"), std::string::npos) << s;
  EXPECT_NE(s.find("W_E      1.0000   0.3333   0.5000          1          3          1"), std::string::npos) << s;
  EXPECT_NE(s.find("W_EIP    1.0000   0.6667   0.8000          4          6          4"), std::string::npos) << s;
}

}  // namespace
}  // namespace disfl
