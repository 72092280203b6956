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

// Synthetic disfluent treebank: a small PCFG for fluent sentences, then
// repairs (EDITED reparandum, optional interregnum) and standalone filled
// pauses and parentheticals.
//
// Choices that keep gold structure recoverable from words:
//  - PP attaches only to a base VP, coordination only at the root, so fluent
//    bracketing is unambiguous.
//  - The repair is the highest non-root constituent starting at a sampled
//    word; its EDITED sibling goes immediately before it.
//  - Standalone INTJ/PRN are children of the root.
//  - INTJ/PRN never appear inside EDITED and vice versa.

#ifndef DISFL_CORPUS_GEN_HPP
#define DISFL_CORPUS_GEN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "disfl/json_util.hpp"
#include "disfl/model.hpp"
#include "disfl/tree.hpp"

namespace disfl {

// ---------------------------------------------------------------------------
// Grammar

struct GrammarRule {
  std::string lhs;
  std::vector<std::string> rhs;
  double probability = 1.0;
};

/// Nonterminals are the rule left-hand sides; every other right-hand symbol
/// must be a preterminal in `lexicon`. A symbol's tree label is its name up
/// to the first '_' ("VP_B" is labeled VP).
struct Grammar {
  std::string start = "ROOT";
  std::vector<GrammarRule> rules;
  std::map<std::string, std::vector<std::string>> lexicon;

  static std::string label_of(const std::string& symbol) { return symbol.substr(0, symbol.find('_')); }

  bool is_nonterminal(const std::string& s) const {
    return std::any_of(rules.begin(), rules.end(), [&](const GrammarRule& r) { return r.lhs == s; });
  }

  void validate() const {
    if (lexicon.empty()) throw ConfigError("grammar has no terminals");
    for (const auto& [pos, words] : lexicon)
      if (words.empty()) throw ConfigError("preterminal '" + pos + "' has no words");
    if (!is_nonterminal(start)) throw ConfigError("grammar start symbol '" + start + "' has no rules");
    std::map<std::string, double> mass;
    for (const auto& r : rules) {
      if (r.rhs.empty()) throw ConfigError("empty right-hand side for '" + r.lhs + "'");
      if (!(r.probability > 0.0)) throw ConfigError("rule probabilities must be > 0");
      if (lexicon.contains(r.lhs)) throw ConfigError("'" + r.lhs + "' is both a preterminal and a nonterminal");
      mass[r.lhs] += r.probability;
      for (const auto& s : r.rhs)
        if (!lexicon.contains(s) && !is_nonterminal(s))
          throw ConfigError("symbol '" + s + "' is neither a nonterminal nor a preterminal");
    }
    for (const auto& [lhs, m] : mass)
      if (std::abs(m - 1.0) > 1e-9) throw ConfigError("rule probabilities for '" + lhs + "' do not sum to 1");
    // Every nonterminal must be able to terminate.
    std::set<std::string> done;
    for (bool changed = true; changed;) {
      changed = false;
      for (const auto& r : rules) {
        if (done.contains(r.lhs)) continue;
        if (std::all_of(r.rhs.begin(), r.rhs.end(),
                        [&](const std::string& s) { return lexicon.contains(s) || done.contains(s); })) {
          done.insert(r.lhs);
          changed = true;
        }
      }
    }
    for (const auto& [lhs, m] : mass)
      if (!done.contains(lhs)) throw ConfigError("nonterminal '" + lhs + "' cannot derive a terminal string");
  }

  std::vector<std::string> vocabulary() const {
    std::set<std::string> all;
    for (const auto& [pos, words] : lexicon) all.insert(words.begin(), words.end());
    return {all.begin(), all.end()};
  }

  static Grammar default_grammar() {
    Grammar g;
    g.rules = {
        {"ROOT", {"S"}, 0.9},
        {"ROOT", {"S_C", "CC", "S_C"}, 0.1},
        {"S", {"NP", "VP"}, 0.88},
        {"S", {"NP", "ADVP", "VP"}, 0.12},
        {"S_C", {"NP", "VP"}, 1.0},
        {"NP", {"PRP"}, 0.4},
        {"NP", {"DT", "NN"}, 0.27},
        {"NP", {"DT", "JJ", "NN"}, 0.13},
        {"NP", {"NNS"}, 0.1},
        {"NP", {"JJ", "NNS"}, 0.1},
        {"VP", {"VP_B"}, 0.72},
        {"VP", {"VP_B", "PP"}, 0.2},
        {"VP", {"VBP", "S_E"}, 0.08},
        {"VP_B", {"VBP", "NP"}, 0.3},
        {"VP_B", {"VBD", "NP"}, 0.25},
        {"VP_B", {"VBP"}, 0.08},
        {"VP_B", {"VBD"}, 0.07},
        {"VP_B", {"MD", "VP_V"}, 0.15},
        {"VP_B", {"VBP", "RB", "VP_V"}, 0.15},
        {"VP_V", {"VB", "NP"}, 1.0},
        {"S_E", {"NP", "VP_B"}, 1.0},
        {"PP", {"IN", "NP"}, 1.0},
        {"ADVP", {"RB"}, 1.0},
    };
    g.lexicon = {
        {"PRP", {"I", "you", "we", "they", "he", "she"}},
        {"DT", {"the", "a", "this", "that", "some"}},
        {"NN", {"dog", "cat", "house", "car", "school", "job", "lot", "state", "city", "friend", "game", "book"}},
        {"NNS", {"dogs", "cats", "people", "kids", "things", "states", "books", "friends"}},
        {"JJ", {"big", "small", "good", "old", "new", "nice"}},
        {"VBP", {"like", "have", "see", "know", "think", "want", "need"}},
        {"VBD", {"liked", "had", "saw", "knew", "wanted", "got"}},
        {"VB", {"get", "take", "make", "find", "keep"}},
        {"MD", {"can", "will", "would"}},
        {"IN", {"in", "of", "with", "at", "about"}},
        {"RB", {"really", "just", "also", "never"}},
        {"CC", {"and", "but"}},
    };
    return g;
  }
};

// ---------------------------------------------------------------------------
// Configuration

struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t sentence_count = 2000;
  double train_fraction = 0.8;
  double dev_fraction = 0.1;  // test gets the rest
  std::size_t max_length = 18;  // fluent fringe cap; longer derivations are resampled
  double repair_rate = 0.35;
  double intj_rate = 0.15;
  double prn_rate = 0.1;
  double copy_rate = 0.6;
  std::size_t max_reparandum = 3;
  double interregnum_rate = 0.4;
  double nested_rate = 0.05;
  bool include_partial = true;
  double partial_rate = 0.2;
  bool include_punct = true;
  std::vector<std::string> filled_pauses{"uh", "um"};
  std::vector<std::string> discourse_markers{"I mean", "you know"};  // pronoun + verb
  Grammar grammar = Grammar::default_grammar();

  void validate() const {
    for (double p : {repair_rate, intj_rate, prn_rate, copy_rate, interregnum_rate, nested_rate, partial_rate,
                     train_fraction, dev_fraction})
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("probabilities and fractions must be in [0, 1]");
    if (train_fraction + dev_fraction > 1.0) throw ConfigError("train_fraction + dev_fraction exceeds 1");
    if (max_length == 0) throw ConfigError("max_length must be >= 1");
    if (max_reparandum == 0) throw ConfigError("max_reparandum must be >= 1");
    if (filled_pauses.empty()) throw ConfigError("filled_pauses is empty");
    if (discourse_markers.empty()) throw ConfigError("discourse_markers is empty");
    for (const auto& m : discourse_markers) {
      std::istringstream ss(m);
      std::string a, b, c;
      if (!(ss >> a >> b) || (ss >> c)) throw ConfigError("discourse marker '" + m + "' must be two words");
    }
    grammar.validate();
  }

  /// Probability that a sentence receives at least one disfluency.
  double disfluent_sentence_rate() const { return 1.0 - (1.0 - repair_rate) * (1.0 - intj_rate) * (1.0 - prn_rate); }
};

inline void to_json(Json& j, const GrammarRule& r) { j = Json{{"lhs", r.lhs}, {"rhs", r.rhs}, {"p", r.probability}}; }

inline void from_json(const Json& j, GrammarRule& r) {
  detail::check_keys(j, {"lhs", "rhs", "p"}, "grammar rule");
  detail::read_field(j, "lhs", r.lhs);
  detail::read_field(j, "rhs", r.rhs);
  detail::read_field(j, "p", r.probability);
}

inline void to_json(Json& j, const Grammar& g) {
  j = Json{{"start", g.start}, {"rules", g.rules}, {"lexicon", g.lexicon}};
}

inline void from_json(const Json& j, Grammar& g) {
  detail::check_keys(j, {"start", "rules", "lexicon"}, "grammar");
  detail::read_field(j, "start", g.start);
  detail::read_field(j, "rules", g.rules);
  detail::read_field(j, "lexicon", g.lexicon);
}

inline void to_json(Json& j, const GenConfig& c) {
  j = Json{{"seed", c.seed},
           {"sentence_count", c.sentence_count},
           {"train_fraction", c.train_fraction},
           {"dev_fraction", c.dev_fraction},
           {"max_length", c.max_length},
           {"repair_rate", c.repair_rate},
           {"intj_rate", c.intj_rate},
           {"prn_rate", c.prn_rate},
           {"copy_rate", c.copy_rate},
           {"max_reparandum", c.max_reparandum},
           {"interregnum_rate", c.interregnum_rate},
           {"nested_rate", c.nested_rate},
           {"include_partial", c.include_partial},
           {"partial_rate", c.partial_rate},
           {"include_punct", c.include_punct},
           {"filled_pauses", c.filled_pauses},
           {"discourse_markers", c.discourse_markers},
           {"grammar", c.grammar}};
}

inline void from_json(const Json& j, GenConfig& c) {
  detail::check_keys(j,
                     {"seed", "sentence_count", "train_fraction", "dev_fraction", "max_length", "repair_rate",
                      "intj_rate", "prn_rate", "copy_rate", "max_reparandum", "interregnum_rate", "nested_rate",
                      "include_partial", "partial_rate", "include_punct", "filled_pauses", "discourse_markers",
                      "grammar"},
                     "generator config");
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "sentence_count", c.sentence_count);
  detail::read_field(j, "train_fraction", c.train_fraction);
  detail::read_field(j, "dev_fraction", c.dev_fraction);
  detail::read_field(j, "max_length", c.max_length);
  detail::read_field(j, "repair_rate", c.repair_rate);
  detail::read_field(j, "intj_rate", c.intj_rate);
  detail::read_field(j, "prn_rate", c.prn_rate);
  detail::read_field(j, "copy_rate", c.copy_rate);
  detail::read_field(j, "max_reparandum", c.max_reparandum);
  detail::read_field(j, "interregnum_rate", c.interregnum_rate);
  detail::read_field(j, "nested_rate", c.nested_rate);
  detail::read_field(j, "include_partial", c.include_partial);
  detail::read_field(j, "partial_rate", c.partial_rate);
  detail::read_field(j, "include_punct", c.include_punct);
  detail::read_field(j, "filled_pauses", c.filled_pauses);
  detail::read_field(j, "discourse_markers", c.discourse_markers);
  if (j.contains("grammar")) {
    Grammar g;
    g.rules.clear();
    g.lexicon.clear();
    from_json(j.at("grammar"), g);
    c.grammar = std::move(g);
  }
}

// ---------------------------------------------------------------------------
// Fluent sentences

namespace detail {

/// nullopt once more than `budget` words would be produced.
inline std::optional<Tree> derive(const Grammar& g, const std::string& symbol, Rng& rng, std::size_t& budget) {
  if (auto it = g.lexicon.find(symbol); it != g.lexicon.end()) {
    if (budget == 0) return std::nullopt;
    --budget;
    return Tree::leaf(symbol, it->second[rng.below(it->second.size())]);
  }
  double u = rng.uniform();
  const GrammarRule* chosen = nullptr;
  for (const auto& r : g.rules) {
    if (r.lhs != symbol) continue;
    chosen = &r;
    if (u < r.probability) break;
    u -= r.probability;
  }
  std::vector<Tree> kids;
  for (const auto& s : chosen->rhs) {
    auto kid = derive(g, s, rng, budget);
    if (!kid) return std::nullopt;
    kids.push_back(std::move(*kid));
  }
  return Tree::node(Grammar::label_of(symbol), std::move(kids));
}

}  // namespace detail

/// One fluent tree with at most `max_length` words; longer derivations are
/// abandoned and resampled. The start symbol's single child becomes the root
/// when the start rule is unary.
inline Tree generate_fluent(const Grammar& g, std::size_t max_length, Rng& rng) {
  for (;;) {
    std::size_t budget = max_length;
    auto derived = detail::derive(g, g.start, rng, budget);
    if (!derived) continue;
    Tree t = std::move(*derived);
    while (t.children.size() == 1 && !t.children.front().is_leaf()) {
      Tree inner = std::move(t.children.front());
      t = std::move(inner);
    }
    if (Grammar::label_of(g.start) == "ROOT") t.label = "S";
    return t;
  }
}

// ---------------------------------------------------------------------------
// Disfluencies

struct RepairInfo {
  std::vector<Token> reparandum;     // before any truncation or stutter
  std::vector<Token> repair_prefix;  // the words it copies
  bool nested = false;
  bool partial = false;
  bool interregnum = false;
};

struct InjectResult {
  Tree tree;
  std::vector<RepairInfo> repairs;
  bool intj = false;
  bool prn = false;
  bool disfluent() const { return !repairs.empty() || intj || prn; }
};

namespace detail {

inline Tree filled_pause(const GenConfig& c, Rng& rng) {
  return Tree::node(std::string(kIntj), {Tree::leaf("UH", c.filled_pauses[rng.below(c.filled_pauses.size())])});
}

inline Tree discourse_marker(const GenConfig& c, Rng& rng) {
  std::istringstream ss(c.discourse_markers[rng.below(c.discourse_markers.size())]);
  std::string pronoun, verb;
  ss >> pronoun >> verb;
  return Tree::node(std::string(kPrn), {Tree::node("S", {Tree::node("NP", {Tree::leaf("PRP", pronoun)}),
                                             Tree::node("VP", {Tree::leaf("VBP", verb)})})});
}

inline std::string substitute(const Grammar& g, const Token& t, Rng& rng) {
  auto it = g.lexicon.find(t.pos);
  if (it == g.lexicon.end()) return t.word;
  std::vector<std::string> others;
  for (const auto& w : it->second)
    if (w != t.word) others.push_back(w);
  if (others.empty()) return t.word;
  return others[rng.below(others.size())];
}

inline std::string truncate_word(const std::string& w) { return w.substr(0, (w.size() + 1) / 2) + "-"; }

/// Path (child indices) to the highest non-root node whose yield starts at
/// word `p`.
inline std::vector<std::size_t> repair_path(const Tree& root, std::size_t p) {
  std::vector<std::size_t> path;
  const Tree* cur = &root;
  std::size_t start = 0;
  for (;;) {
    std::size_t offset = start;
    for (std::size_t k = 0; k < cur->children.size(); ++k) {
      const std::size_t len = fringe_length(cur->children[k]);
      if (p < offset + len) {
        path.push_back(k);
        if (offset == p) return path;
        cur = &cur->children[k];
        start = offset;
        break;
      }
      offset += len;
    }
  }
}

inline Tree& at_path(Tree& root, const std::vector<std::size_t>& path, std::size_t depth) {
  Tree* t = &root;
  for (std::size_t i = 0; i < depth; ++i) t = &t->children[path[i]];
  return *t;
}

}  // namespace detail

/// Adds at most one repair, one standalone filled pause and one standalone
/// parenthetical, each with its configured probability.
inline InjectResult inject_disfluencies(const Tree& fluent, const GenConfig& c, Rng& rng) {
  InjectResult out{fluent, {}, false, false};
  Tree& root = out.tree;
  if (root.is_leaf()) return out;

  if (rng.bernoulli(c.repair_rate)) {
    const std::size_t n = fringe_length(root);
    const auto path = detail::repair_path(root, rng.below(n));
    Tree& parent = detail::at_path(root, path, path.size() - 1);
    const std::size_t index = path.back();
    const std::vector<Token> repair_words = fringe(parent.children[index]);

    RepairInfo info;
    const std::size_t k = std::min(1 + rng.below(c.max_reparandum), repair_words.size());
    std::vector<Tree> leaves;
    for (std::size_t i = 0; i < k; ++i) {
      const Token& src = repair_words[i];
      Token copy{rng.bernoulli(c.copy_rate) ? src.word : detail::substitute(c.grammar, src, rng), src.pos};
      info.repair_prefix.push_back(src);
      info.reparandum.push_back(copy);
      leaves.push_back(Tree::leaf(copy.pos, copy.word));
    }
    if (c.include_partial && rng.bernoulli(c.partial_rate)) {
      leaves.back() = Tree::leaf("XX", detail::truncate_word(leaves.back().word));
      info.partial = true;
    }
    if (rng.bernoulli(c.nested_rate)) {
      // Stutter on the first reparandum word.
      leaves.insert(leaves.begin(), Tree::node(std::string(kEdited), {leaves.front()}));
      info.nested = true;
    }
    std::vector<Tree> insert{Tree::node(std::string(kEdited), std::move(leaves))};
    if (rng.bernoulli(c.interregnum_rate)) {
      info.interregnum = true;
      const double u = rng.uniform();
      if (u < 0.6) {
        insert.push_back(detail::filled_pause(c, rng));
      } else if (u < 0.9) {
        insert.push_back(detail::discourse_marker(c, rng));
      } else {
        insert.push_back(detail::filled_pause(c, rng));
        insert.push_back(detail::discourse_marker(c, rng));
      }
    }
    parent.children.insert(parent.children.begin() + std::ptrdiff_t(index), insert.begin(), insert.end());
    out.repairs.push_back(std::move(info));
  }

  if (rng.bernoulli(c.intj_rate)) {
    const std::size_t at = rng.below(root.children.size() + 1);
    root.children.insert(root.children.begin() + std::ptrdiff_t(at), detail::filled_pause(c, rng));
    out.intj = true;
  }
  if (rng.bernoulli(c.prn_rate)) {
    const std::size_t at = rng.below(root.children.size() + 1);
    root.children.insert(root.children.begin() + std::ptrdiff_t(at), detail::discourse_marker(c, rng));
    out.prn = true;
  }
  return out;
}

/// Fluent sentence, disfluencies, then optional final punctuation.
inline InjectResult generate_sentence(const GenConfig& c, Rng& rng) {
  InjectResult r = inject_disfluencies(generate_fluent(c.grammar, c.max_length, rng), c, rng);
  if (c.include_punct) r.tree.children.push_back(Tree::leaf(".", "."));
  return r;
}

// ---------------------------------------------------------------------------
// Corpus files

struct GeneratedCorpus {
  std::vector<Tree> train, dev, test;
  Json manifest;
};

inline GeneratedCorpus generate_corpus(const GenConfig& c) {
  c.validate();
  const auto train_n = std::size_t(double(c.sentence_count) * c.train_fraction + 0.5);
  const auto dev_n = std::min(c.sentence_count - train_n, std::size_t(double(c.sentence_count) * c.dev_fraction + 0.5));
  const std::size_t test_n = c.sentence_count - train_n - dev_n;

  Rng rng(mix_seed(c.seed, 0x636f7270));
  std::set<std::string> seen;
  GeneratedCorpus out;
  std::size_t disfluent = 0, repairs = 0, edited_words = 0, duplicates = 0;
  const std::size_t max_attempts = 50 * c.sentence_count + 1000;
  for (std::size_t attempts = 0; seen.size() < c.sentence_count; ++attempts) {
    if (attempts >= max_attempts)
      throw ConfigError("could not draw " + std::to_string(c.sentence_count) +
                        " distinct sentences; the grammar is too small for this count");
    InjectResult r = generate_sentence(c, rng);
    if (!seen.insert(serialize(r.tree)).second) {
      ++duplicates;
      continue;
    }
    disfluent += r.disfluent();
    repairs += r.repairs.size();
    edited_words += disfluency_word_positions(r.tree, edited_labels()).size();
    const std::size_t i = seen.size() - 1;
    (i < train_n ? out.train : i < train_n + dev_n ? out.dev : out.test).push_back(std::move(r.tree));
  }
  out.manifest = Json{{"generator", "disfl gen-corpus"},
                      {"format_version", 1},
                      {"seed", c.seed},
                      {"config", c},
                      {"files", {{"train", "train.mrg"}, {"dev", "dev.mrg"}, {"test", "test.mrg"}}},
                      {"counts", {{"train", out.train.size()}, {"dev", out.dev.size()}, {"test", test_n}}},
                      {"stats",
                       {{"disfluent_sentences", disfluent},
                        {"repairs", repairs},
                        {"edited_words", edited_words},
                        {"duplicates_rejected", duplicates}}}};
  return out;
}

/// Writes train.mrg, dev.mrg, test.mrg and manifest.json into `dir`.
inline Json write_corpus(const GenConfig& c, const std::filesystem::path& dir) {
  GeneratedCorpus corpus = generate_corpus(c);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
  write_tree_file((dir / "train.mrg").string(), corpus.train);
  write_tree_file((dir / "dev.mrg").string(), corpus.dev);
  write_tree_file((dir / "test.mrg").string(), corpus.test);
  std::ofstream m(dir / "manifest.json", std::ios::trunc);
  m << corpus.manifest.dump(2) << '\n';
  if (!m) throw std::runtime_error("cannot write '" + (dir / "manifest.json").string() + "'");
  return corpus.manifest;
}

}  // namespace disfl

#endif  // DISFL_CORPUS_GEN_HPP
