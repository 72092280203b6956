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

#include "disfl/transforms.hpp"
#include "test_support.hpp"

namespace disfl {
namespace {

using testing::figure1_tree;

const char* kFluent = "(S (NP (DT the) (NN dog)) (VP (VBP barks)))";

TEST(PosDisfl, FigureOne) {
  EXPECT_EQ(serialize(pos_disfl(figure1_tree())),
            "(S (S (NP (EDITED (PRP We))) (VP (EDITED (VBP do)) (EDITED (RB n't)))) (INTJ (UH uh)) "
            "(S (NP (PRN (PRP I))) (VP (PRN (VBP mean)))) "
            "(NP (NP (DT a) (NN lot)) (PP (IN of) (NP (NNS states)))) "
            "(VP (VBP do) (RB n't) (VP (VB have) (NP (JJ capital) (NN punishment)))))");
}

TEST(PosDisfl, FluentIsUnchanged) {
  const Tree t = parse_bracketed(kFluent);
  EXPECT_EQ(pos_disfl(t), t);
}

TEST(PosDisfl, InnermostLabelWins) {
  const Tree t = parse_bracketed("(S (EDITED (NN a) (INTJ (UH uh))) (NN b))");
  EXPECT_EQ(serialize(pos_disfl(t)), "(S (EDITED (NN a)) (INTJ (UH uh)) (NN b))");
}

TEST(NoSyntax, FigureOne) {
  EXPECT_EQ(serialize(no_syntax(figure1_tree())),
            "(TOP (EDITED (PRP We) (VBP do) (RB n't)) (INTJ (UH uh)) (PRN (PRP I) (VBP mean)) "
            "(DT a) (NN lot) (IN of) (NNS states) (VBP do) (RB n't) (VB have) (JJ capital) "
            "(NN punishment))");
}

TEST(NoSyntax, FluentIsFlat) {
  EXPECT_EQ(serialize(no_syntax(parse_bracketed(kFluent))), "(TOP (DT the) (NN dog) (VBP barks))");
}

TEST(PosDisflNoSyntax, FigureOne) {
  EXPECT_EQ(serialize(pos_disfl_no_syntax(figure1_tree())),
            "(TOP (EDITED (PRP We)) (EDITED (VBP do)) (EDITED (RB n't)) (INTJ (UH uh)) "
            "(PRN (PRP I)) (PRN (VBP mean)) (DT a) (NN lot) (IN of) (NNS states) (VBP do) "
            "(RB n't) (VB have) (JJ capital) (NN punishment))");
  const Tree fluent = parse_bracketed(kFluent);
  EXPECT_EQ(pos_disfl_no_syntax(fluent), no_syntax(fluent));
}

TEST(TopDisfl, FlattensAndDropsNested) {
  const Tree nested = parse_bracketed(
      "(S (EDITED (EDITED (NP (PRP I))) (S (NP (PRP I)) (VP (VBP 've)))) (NP (PRP I)) (VP (VBP go)))");
  EXPECT_EQ(serialize(top_disfl(nested)),
            "(S (EDITED (PRP I) (PRP I) (VBP 've)) (NP (PRP I)) (VP (VBP go)))");
  EXPECT_EQ(serialize(top_disfl(figure1_tree())),
            "(S (EDITED (PRP We) (VBP do) (RB n't)) (INTJ (UH uh)) (PRN (PRP I) (VBP mean)) "
            "(NP (NP (DT a) (NN lot)) (PP (IN of) (NP (NNS states)))) "
            "(VP (VBP do) (RB n't) (VP (VB have) (NP (JJ capital) (NN punishment)))))");
  const Tree flat = parse_bracketed("(S (EDITED (NN a) (NN b)) (NN a) (NN c))");
  EXPECT_EQ(top_disfl(flat), flat);
}

TEST(TopDisflNoSyntax, FigureOne) {
  EXPECT_EQ(serialize(top_disfl_no_syntax(figure1_tree())), serialize(no_syntax(figure1_tree())));
  EXPECT_EQ(serialize(top_disfl_no_syntax(parse_bracketed(kFluent))),
            "(TOP (DT the) (NN dog) (VBP barks))");
}

TEST(TransformMode, NamesRoundTrip) {
  for (auto m : {TransformMode::kNone, TransformMode::kPosDisfl, TransformMode::kNoSyntax,
                 TransformMode::kPosDisflNoSyntax, TransformMode::kTopDisfl,
                 TransformMode::kTopDisflNoSyntax})
    EXPECT_EQ(parse_transform_mode(transform_mode_name(m)), m);
  EXPECT_FALSE(parse_transform_mode("bogus").has_value());
}

// EDITED sets are only preserved when EDITED and INTJ/PRN never nest inside
// each other; W_EIP and the fringe are preserved unconditionally.
bool edited_nesting_ok(const Tree& t, bool under_edited = false, bool under_ip = false) {
  if (t.is_leaf()) return true;
  const bool e = t.label == kEdited;
  const bool ip = t.label == kIntj || t.label == kPrn;
  if ((e && under_ip) || (ip && under_edited)) return false;
  for (const Tree& c : t.children)
    if (!edited_nesting_ok(c, under_edited || e, under_ip || ip)) return false;
  return true;
}

TEST(Transforms, PreservationProperties) {
  Rng rng(2024);
  const TransformMode modes[] = {TransformMode::kPosDisfl, TransformMode::kNoSyntax,
                                 TransformMode::kPosDisflNoSyntax, TransformMode::kTopDisfl,
                                 TransformMode::kTopDisflNoSyntax};
  int checked_edited = 0;
  for (int i = 0; i < 3000; ++i) {
    const Tree t = testing::random_internal_tree(rng);
    const bool nesting_ok = edited_nesting_ok(t);
    checked_edited += nesting_ok;
    for (auto m : modes) {
      const Tree out = apply_transform(m, t);
      ASSERT_FALSE(validate(out).has_value()) << serialize(out);
      ASSERT_FALSE(out.is_leaf());
      ASSERT_EQ(fringe(out), fringe(t)) << transform_mode_name(m);
      ASSERT_EQ(disfluency_word_positions(out, eip_labels()), disfluency_word_positions(t, eip_labels()))
          << transform_mode_name(m) << " " << serialize(t);
      if (nesting_ok) {
        ASSERT_EQ(disfluency_word_positions(out, edited_labels()),
                  disfluency_word_positions(t, edited_labels()))
            << transform_mode_name(m) << " " << serialize(t);
      }
    }
    EXPECT_EQ(top_disfl(top_disfl(t)), top_disfl(t));
    EXPECT_EQ(no_syntax(no_syntax(t)), no_syntax(t));
    EXPECT_EQ(pos_disfl_no_syntax(t), no_syntax(pos_disfl(t)));
    EXPECT_EQ(top_disfl_no_syntax(t), no_syntax(top_disfl(t)));
  }
  EXPECT_GT(checked_edited, 300);
}

}  // namespace
}  // namespace disfl
