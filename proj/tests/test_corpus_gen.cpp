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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "disfl/corpus_gen.hpp"
#include "disfl/transforms.hpp"
#include "test_support.hpp"

namespace disfl {
namespace {

GenConfig no_disfluency() {
  GenConfig c;
  c.repair_rate = c.intj_rate = c.prn_rate = 0.0;
  c.include_punct = false;
  return c;
}

bool has_label(const Tree& t, const LabelSet& labels) {
  if (t.is_leaf()) return false;
  if (labels.contains(t.label)) return true;
  return std::any_of(t.children.begin(), t.children.end(), [&](const Tree& c) { return has_label(c, labels); });
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Words not dominated by EDITED, INTJ or PRN.
std::vector<std::string> fluent_words(const Tree& t) {
  const auto w = words(t);
  const auto mask = testing::naive_word_mask(t, eip_labels());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!mask[i]) out.push_back(w[i]);
  return out;
}

TEST(Grammar, DefaultIsValidAndSmall) {
  const Grammar g = Grammar::default_grammar();
  EXPECT_NO_THROW(g.validate());
  const auto vocab = g.vocabulary();
  EXPECT_GE(vocab.size(), 55u);
  EXPECT_LE(vocab.size(), 80u);
}

TEST(Grammar, ValidationErrors) {
  Grammar g = Grammar::default_grammar();
  g.lexicon.clear();
  EXPECT_THROW(g.validate(), ConfigError);
  g = Grammar::default_grammar();
  g.rules.push_back({"X", {"X", "NN"}, 1.0});
  EXPECT_THROW(g.validate(), ConfigError);  // X never terminates
  g = Grammar::default_grammar();
  g.rules.front().probability = 0.5;
  EXPECT_THROW(g.validate(), ConfigError);
  g = Grammar::default_grammar();
  g.rules.push_back({"Y", {"QQ"}, 1.0});
  EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Fluent, DeterministicAndFluent) {
  const Grammar g = Grammar::default_grammar();
  Rng a(5), b(5);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(generate_fluent(g, 18, a), generate_fluent(g, 18, b));
  Rng rng(6);
  std::size_t max_seen = 0;
  for (int i = 0; i < 10000; ++i) {
    const Tree t = generate_fluent(g, 18, rng);
    ASSERT_FALSE(has_label(t, eip_labels())) << serialize(t);
    ASSERT_FALSE(validate(t).has_value());
    ASSERT_EQ(t.label, "S");
    max_seen = std::max(max_seen, fringe_length(t));
    ASSERT_LE(fringe_length(t), 18u);
  }
  EXPECT_GE(max_seen, 10u);
}

TEST(Fluent, BracketingIsDeterminedByTags) {
  // Two derivations with the same tag sequence must give the same bracketing.
  const Grammar g = Grammar::default_grammar();
  Rng rng(7);
  std::map<std::string, std::string> by_tags;
  for (int i = 0; i < 20000; ++i) {
    const Tree t = generate_fluent(g, 18, rng);
    std::string tags;
    for (const auto& tok : fringe(t)) tags += tok.pos + " ";
    std::string shape;
    for (const auto& s : spans(t)) shape += std::to_string(s.start) + "-" + std::to_string(s.end) + s.label + " ";
    auto [it, inserted] = by_tags.emplace(tags, shape);
    ASSERT_EQ(it->second, shape) << tags;
  }
}

TEST(Inject, ZeroRatesAreIdentity) {
  const GenConfig c = no_disfluency();
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const Tree t = generate_fluent(c.grammar, c.max_length, rng);
    const InjectResult r = inject_disfluencies(t, c, rng);
    EXPECT_EQ(r.tree, t);
    EXPECT_FALSE(r.disfluent());
  }
}

TEST(Inject, CopyRateMatchesTarget) {
  GenConfig c;
  c.repair_rate = 1.0;
  c.nested_rate = 0.0;
  c.include_partial = false;
  Rng rng(9);
  std::size_t copies = 0, total = 0, repairs = 0;
  while (repairs < 10000) {
    const InjectResult r = inject_disfluencies(generate_fluent(c.grammar, c.max_length, rng), c, rng);
    for (const auto& info : r.repairs) {
      ++repairs;
      ASSERT_EQ(info.reparandum.size(), info.repair_prefix.size());
      ASSERT_GE(info.reparandum.size(), 1u);
      ASSERT_LE(info.reparandum.size(), 3u);
      for (std::size_t i = 0; i < info.reparandum.size(); ++i) {
        ASSERT_EQ(info.reparandum[i].pos, info.repair_prefix[i].pos);
        copies += info.reparandum[i].word == info.repair_prefix[i].word;
        ++total;
      }
    }
  }
  EXPECT_NEAR(double(copies) / double(total), 0.6, 0.02);
}

TEST(Inject, SentenceRateMatchesConfig) {
  GenConfig c;
  Rng rng(10);
  std::size_t disfluent = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const InjectResult r = generate_sentence(c, rng);
    disfluent += r.disfluent();
    ASSERT_EQ(r.disfluent(), has_label(r.tree, eip_labels()));
  }
  EXPECT_NEAR(double(disfluent) / n, c.disfluent_sentence_rate(), 0.02);
}

TEST(Inject, StructureAndSkeleton) {
  GenConfig c;
  c.repair_rate = 0.8;
  c.nested_rate = 0.3;
  c.interregnum_rate = 0.6;
  Rng rng(11);
  int nested = 0, partial = 0;
  for (int i = 0; i < 5000; ++i) {
    const Tree fluent = generate_fluent(c.grammar, c.max_length, rng);
    const InjectResult r = inject_disfluencies(fluent, c, rng);
    ASSERT_FALSE(validate(r.tree).has_value());
    ASSERT_EQ(parse_bracketed(serialize(r.tree)), r.tree);
    // Removing disfluent words recovers the fluent sentence.
    ASSERT_EQ(fluent_words(r.tree), words(fluent)) << serialize(r.tree);
    // No INTJ/PRN inside EDITED and no EDITED inside INTJ/PRN, so the
    // lossless transforms keep W_E.
    ASSERT_EQ(disfluency_word_positions(pos_disfl(r.tree), edited_labels()),
              disfluency_word_positions(r.tree, edited_labels()));
    ASSERT_EQ(disfluency_word_positions(top_disfl(r.tree), edited_labels()),
              disfluency_word_positions(r.tree, edited_labels()));

    for (const auto& info : r.repairs) {
      nested += info.nested;
      partial += info.partial;
      // The reparandum is followed, after interregnum words, by the repair.
      const auto toks = fringe(r.tree);
      const auto e = testing::naive_word_mask(r.tree, edited_labels());
      const auto ip = testing::naive_word_mask(r.tree, LabelSet{std::string(kIntj), std::string(kPrn)});
      std::size_t last = 0;
      for (std::size_t k = 0; k < e.size(); ++k)
        if (e[k]) last = k;
      std::size_t next = last + 1;
      while (next < toks.size() && ip[next]) ++next;
      ASSERT_LT(next, toks.size());
      for (std::size_t k = 0; k < info.repair_prefix.size(); ++k) {
        ASSERT_EQ(toks[next + k].word, info.repair_prefix[k].word) << serialize(r.tree);
        ASSERT_FALSE(e[next + k]);
      }
    }
  }
  EXPECT_GT(nested, 500);
  EXPECT_GT(partial, 300);
}

TEST(Inject, PartialWordsAreStripped) {
  GenConfig c;
  c.repair_rate = 1.0;
  c.partial_rate = 1.0;
  c.nested_rate = 0.0;
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const InjectResult r = generate_sentence(c, rng);
    bool found = false;
    for_each_leaf(r.tree, [&](const Tree& leaf) {
      if (leaf.label == "XX") {
        found = true;
        EXPECT_EQ(leaf.word.back(), '-');
      }
    });
    EXPECT_TRUE(found);
    const auto stripped = strip_tokens(r.tree, StripOptions{});
    ASSERT_TRUE(stripped.has_value());
    for (const auto& tok : fringe(*stripped)) EXPECT_NE(tok.pos, "XX");
  }
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("disfl_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  return p;
}

TEST(Corpus, ByteIdenticalRegenerationAndDisjointSplits) {
  GenConfig c;
  c.sentence_count = 600;
  const auto d1 = temp_dir("gen1"), d2 = temp_dir("gen2");
  write_corpus(c, d1);
  write_corpus(c, d2);
  for (const char* f : {"train.mrg", "dev.mrg", "test.mrg", "manifest.json"})
    EXPECT_EQ(read_file(d1 / f), read_file(d2 / f)) << f;

  const auto train = read_tree_file((d1 / "train.mrg").string());
  const auto dev = read_tree_file((d1 / "dev.mrg").string());
  const auto test = read_tree_file((d1 / "test.mrg").string());
  EXPECT_EQ(train.size(), 480u);
  EXPECT_EQ(dev.size(), 60u);
  EXPECT_EQ(test.size(), 60u);
  std::set<std::string> all;
  for (const auto* split : {&train, &dev, &test})
    for (const Tree& t : *split) EXPECT_TRUE(all.insert(serialize(t)).second);

  const Json m = Json::parse(read_file(d1 / "manifest.json"));
  EXPECT_EQ(m.at("seed"), 1);
  EXPECT_EQ(m.at("counts").at("train"), 480);
  EXPECT_EQ(m.at("config").at("sentence_count"), 600);
  GenConfig back;
  from_json(m.at("config"), back);
  EXPECT_EQ(Json(back), Json(c));

  // Every word comes from the grammar or the interregnum inventory.
  std::set<std::string> vocab;
  for (const auto& w : c.grammar.vocabulary()) vocab.insert(w);
  for (const auto& w : c.filled_pauses) vocab.insert(w);
  for (const auto& m2 : c.discourse_markers) {
    std::istringstream ss(m2);
    for (std::string w; ss >> w;) vocab.insert(w);
  }
  vocab.insert(".");
  for (const auto* split : {&train, &dev, &test})
    for (const Tree& t : *split)
      for (const auto& tok : fringe(t))
        if (tok.pos != "XX") {
          EXPECT_TRUE(vocab.contains(tok.word)) << tok.word;
        }

  GenConfig other = c;
  other.seed = 2;
  const auto d3 = temp_dir("gen3");
  write_corpus(other, d3);
  EXPECT_NE(read_file(d1 / "train.mrg"), read_file(d3 / "train.mrg"));
  for (const auto& d : {d1, d2, d3}) std::filesystem::remove_all(d);
}

TEST(Corpus, ConfigErrors) {
  GenConfig c;
  c.repair_rate = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = GenConfig{};
  c.discourse_markers = {"well"};
  EXPECT_THROW(c.validate(), ConfigError);
  GenConfig j;
  EXPECT_THROW(from_json(Json{{"repair_rat", 0.1}}, j), ConfigError);
  from_json(Json{{"grammar", {{"rules", Json::array()}}}}, j);
  EXPECT_THROW(j.validate(), ConfigError);  // no terminals
  c = GenConfig{};
  c = no_disfluency();
  c.sentence_count = 300;  // about 180 distinct two-word sentences exist
  c.max_length = 2;
  EXPECT_THROW(generate_corpus(c), ConfigError);
}

}  // namespace
}  // namespace disfl
