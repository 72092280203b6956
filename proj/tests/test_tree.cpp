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

#include "disfl/tree.hpp"
#include "test_support.hpp"

namespace disfl {
namespace {

using testing::as_words;
using testing::figure1_tree;

TEST(ParseBracketed, SingleLeaf) {
  Tree t = parse_bracketed("(NN dog)");
  EXPECT_TRUE(t.is_leaf());
  EXPECT_EQ(t.label, "NN");
  EXPECT_EQ(t.word, "dog");
}

TEST(ParseBracketed, SmallSentence) {
  Tree t = parse_bracketed("(S (NP (PRP I)) (VP (VBP enjoy)))");
  ASSERT_EQ(t.label, "S");
  ASSERT_EQ(t.children.size(), 2u);
  EXPECT_EQ(t.children[0], Tree::node("NP", {Tree::leaf("PRP", "I")}));
  EXPECT_EQ(t.children[1], Tree::node("VP", {Tree::leaf("VBP", "enjoy")}));
}

TEST(ParseBracketed, WhitespaceInsensitiveAndWrapper) {
  Tree a = parse_bracketed("(S (NP (PRP I)) (VP (VBP enjoy)))");
  Tree b = parse_bracketed("  ( (S\n\t(NP   (PRP I))\n (VP (VBP enjoy) ) ) )  ");
  EXPECT_EQ(a, b);
}

TEST(ParseBracketed, ErrorsCarryOffsets) {
  auto offset_of = [](const char* text) {
    try {
      parse_bracketed(text);
    } catch (const ParseError& e) {
      return static_cast<long>(e.offset());
    }
    return -1L;
  };
  EXPECT_EQ(offset_of("(S (NP (PRP I))"), 0);  // unterminated
  EXPECT_EQ(offset_of("(S ())"), 3);            // empty constituent
  EXPECT_EQ(offset_of("(NN)"), 0);              // label without children
  EXPECT_EQ(offset_of("(NN dog cat)"), 8);      // more than one word
  EXPECT_EQ(offset_of("(S (NN dog) cat)"), 12); // bare word next to subtrees
  EXPECT_GE(offset_of("(NN dog) x"), 9);        // trailing garbage
  EXPECT_EQ(offset_of(""), 0);
  EXPECT_THROW(parse_bracketed("((NN a) (NN b))"), ParseError);
}

TEST(Serialize, CanonicalForm) {
  EXPECT_EQ(serialize(Tree::leaf("NN", "dog")), "(NN dog)");
  EXPECT_EQ(serialize(parse_bracketed("( (S  (NP (PRP I))\n(VP (VBP enjoy))) )")),
            "(S (NP (PRP I)) (VP (VBP enjoy)))");
}

TEST(Serialize, FigureTreeRoundTrips) {
  const Tree t = figure1_tree();
  EXPECT_EQ(parse_bracketed(serialize(t)), t);
}

TEST(Serialize, RandomRoundTripProperty) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Tree t = testing::random_tree(rng);
    ASSERT_FALSE(validate(t).has_value());
    const std::string s = serialize(t);
    ASSERT_EQ(parse_bracketed(s), t) << s;
    ASSERT_EQ(serialize(parse_bracketed(s)), s);
  }
}

TEST(StripTokens, PartialWords) {
  Tree t = parse_bracketed("(S (EDITED (XX wou-)) (MD would) (NP (PRP you)))");
  auto s = strip_tokens(t, false, true);
  ASSERT_TRUE(s);
  EXPECT_EQ(serialize(*s), "(S (MD would) (NP (PRP you)))");
  EXPECT_EQ(words(*s), (std::vector<std::string>{"would", "you"}));

  Tree dash = parse_bracketed("(S (NN oper-) (VB go))");
  EXPECT_EQ(serialize(*strip_tokens(dash, false, true)), "(S (VB go))");
}

TEST(StripTokens, IdentityWhenDisabled) {
  const Tree t = parse_bracketed("(S (NP (XX wou-)) (, ,) (VP (VB go)) (. .))");
  EXPECT_EQ(*strip_tokens(t, false, false), t);
}

TEST(StripTokens, EverythingRemoved) {
  EXPECT_FALSE(strip_tokens(parse_bracketed("(XX wou-)"), false, true).has_value());
  EXPECT_FALSE(strip_tokens(parse_bracketed("(S (, ,) (. .))"), true, false).has_value());
}

TEST(StripTokens, Punctuation) {
  const Tree t = parse_bracketed("(S (`` ``) (NP (PRP I)) (, ,) (VP (VB go) (-LRB- -LRB-)) (. .))");
  EXPECT_EQ(serialize(*strip_tokens(t, true, false)), "(S (NP (PRP I)) (VP (VB go)))");
  LabelSet only_period{"."};
  EXPECT_EQ(serialize(*strip_tokens(t, true, false, only_period)),
            "(S (`` ``) (NP (PRP I)) (, ,) (VP (VB go) (-LRB- -LRB-)))");
}

TEST(StripTokens, KeepsOrderAndLabelsProperty) {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Tree t = testing::random_tree(rng);
    auto s = strip_tokens(t, true, true);
    // Survivors are exactly the non-removed leaves, in order.
    std::vector<Token> expect;
    for (const auto& tok : fringe(t)) {
      Tree leaf = Tree::leaf(tok.pos, tok.word);
      if (!is_partial_word(leaf) && !default_punct_tags().contains(tok.pos)) expect.push_back(tok);
    }
    if (!s) {
      EXPECT_TRUE(expect.empty());
      continue;
    }
    EXPECT_EQ(fringe(*s), expect);
    EXPECT_FALSE(validate(*s).has_value());
    // Surviving internal labels appear in the original, in preorder.
    std::vector<std::string> before, after;
    for (auto& sp : spans(t)) before.push_back(sp.label);
    for (auto& sp : spans(*s)) after.push_back(sp.label);
    auto it = before.begin();
    for (const auto& l : after) {
      it = std::find(it, before.end(), l);
      ASSERT_NE(it, before.end());
      ++it;
    }
  }
}

TEST(Spans, Basics) {
  EXPECT_TRUE(spans(parse_bracketed("(NN dog)")).empty());
  auto s = spans(parse_bracketed("(S (NP (PRP I)) (VP (VBP enjoy)))"));
  std::sort(s.begin(), s.end());
  std::vector<LabeledSpan> expect{{0, 1, "NP"}, {0, 2, "S"}, {1, 2, "VP"}};
  EXPECT_EQ(s, expect);
}

TEST(Spans, UnaryChainsCountPerOccurrence) {
  auto s = spans(parse_bracketed("(S (S (VP (VB go))))"));
  EXPECT_EQ(s.size(), 3u);
  for (const auto& sp : s) {
    EXPECT_EQ(sp.start, 0u);
    EXPECT_EQ(sp.end, 1u);
  }
}

TEST(Spans, CountEqualsInternalNodes) {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Tree t = testing::random_tree(rng);
    EXPECT_EQ(spans(t).size(), internal_node_count(t));
  }
}

TEST(Spans, WorkedExampleGoldHasFourteen) {
  EXPECT_EQ(spans(testing::figure2_gold()).size(), 14u);
  EXPECT_EQ(spans(testing::figure2_pred()).size(), 13u);
}

TEST(DisfluencyWords, FigureOne) {
  const Tree t = figure1_tree();
  EXPECT_EQ(as_words(disfluency_word_positions(t, edited_labels()), t),
            (std::vector<std::string>{"We", "do", "n't"}));
  EXPECT_EQ(as_words(disfluency_word_positions(t, eip_labels()), t),
            (std::vector<std::string>{"We", "do", "n't", "uh", "I", "mean"}));
  EXPECT_TRUE(disfluency_word_positions(parse_bracketed("(S (NP (PRP I)) (VP (VBP go)))"), eip_labels())
                  .empty());
}

TEST(DisfluencyWords, UnionProperty) {
  Rng rng(5);
  const LabelSet a{"EDITED"}, b{"INTJ", "PRN"};
  LabelSet both = a;
  both.insert(b.begin(), b.end());
  for (int i = 0; i < 500; ++i) {
    const Tree t = testing::random_tree(rng);
    auto pa = disfluency_word_positions(t, a);
    auto pb = disfluency_word_positions(t, b);
    std::vector<std::size_t> u;
    std::set_union(pa.begin(), pa.end(), pb.begin(), pb.end(), std::back_inserter(u));
    EXPECT_EQ(disfluency_word_positions(t, both), u);
  }
}

TEST(TreeFiles, MultiLineAndBlankLines) {
  std::istringstream in("\n(S\n  (NP (PRP I))\n  (VP (VBP go)))\n\n(NN dog)\n   \n");
  auto trees = read_numbered_trees(in);
  ASSERT_EQ(trees.size(), 2u);
  EXPECT_EQ(trees[0].line, 2u);
  EXPECT_EQ(trees[1].line, 6u);
  EXPECT_EQ(serialize(trees[0].tree), "(S (NP (PRP I)) (VP (VBP go)))");
}

TEST(TreeFiles, ErrorsNameTheLine) {
  std::istringstream in("(S (NN a))\n(S (NN b)\n");
  try {
    read_numbered_trees(in);
    FAIL();
  } catch (const TreeFileError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad("(S (NN a))\n(S ())\n");
  EXPECT_THROW(read_numbered_trees(bad), TreeFileError);
}

TEST(TreeFiles, PreprocessDropsEmptySentences) {
  std::vector<Tree> corpus{parse_bracketed("(S (NN a))"), parse_bracketed("(S (XX wou-))"),
                           parse_bracketed("(S (, ,) (NN b))")};
  std::size_t dropped = 0;
  auto out = preprocess_corpus(corpus, StripOptions{}, &dropped);
  EXPECT_EQ(dropped, 1u);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(serialize(out[1]), "(S (NN b))");
}

}  // namespace
}  // namespace disfl
