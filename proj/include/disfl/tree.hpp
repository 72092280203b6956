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

// Labeled constituency trees in Penn Treebank bracketed form: reading,
// writing, token stripping, span extraction and disfluency word sets.

#ifndef DISFL_TREE_HPP
#define DISFL_TREE_HPP

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace disfl {

inline constexpr std::string_view kEdited = "EDITED";
inline constexpr std::string_view kIntj = "INTJ";
inline constexpr std::string_view kPrn = "PRN";
inline constexpr std::string_view kTop = "TOP";

inline bool is_disfluency_label(std::string_view label) {
  return label == kEdited || label == kIntj || label == kPrn;
}

using LabelSet = std::set<std::string, std::less<>>;

inline LabelSet edited_labels() { return {std::string(kEdited)}; }
inline LabelSet eip_labels() {
  return {std::string(kEdited), std::string(kIntj), std::string(kPrn)};
}

struct Token {
  std::string word;
  std::string pos;

  friend bool operator==(const Token&, const Token&) = default;
};

// A leaf stores its POS tag in `label` and the word in `word`; an internal
// node has a label and at least one child. Leaves double as preterminals.
struct Tree {
  std::string label;
  std::string word;
  std::vector<Tree> children;

  static Tree leaf(std::string pos, std::string word) {
    Tree t;
    t.label = std::move(pos);
    t.word = std::move(word);
    return t;
  }

  static Tree node(std::string label, std::vector<Tree> children) {
    Tree t;
    t.label = std::move(label);
    t.children = std::move(children);
    return t;
  }

  bool is_leaf() const { return children.empty(); }

  friend bool operator==(const Tree&, const Tree&) = default;
};

struct LabeledSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;

  friend auto operator<=>(const LabeledSpan&, const LabeledSpan&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

class BracketReader {
 public:
  explicit BracketReader(std::string_view text) : text_(text) {}

  Tree read_document() {
    skip_space();
    if (at_end()) throw ParseError("empty input", pos_);
    Tree tree = read_tree(/*allow_unlabeled=*/true);
    skip_space();
    if (!at_end()) throw ParseError("trailing characters after tree", pos_);
    return tree;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_space();
    if (at_end()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
    if (text_[pos_] != c)
      throw ParseError(std::string("expected '") + c + "' but found '" + text_[pos_] + "'", pos_);
    ++pos_;
  }

  std::string read_atom() {
    std::size_t begin = pos_;
    while (!at_end()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')') break;
      ++pos_;
    }
    return std::string(text_.substr(begin, pos_ - begin));
  }

  Tree read_tree(bool allow_unlabeled) {
    const std::size_t open = pos_;
    expect('(');
    skip_space();
    if (at_end()) throw ParseError("unterminated constituent", open);
    if (text_[pos_] == ')') throw ParseError("empty constituent", open);

    if (text_[pos_] == '(') {
      // Unlabeled wrapper such as "( (S ...) )".
      if (!allow_unlabeled) throw ParseError("constituent without a label", open);
      Tree inner = read_tree(false);
      skip_space();
      if (!at_end() && text_[pos_] == '(')
        throw ParseError("unlabeled wrapper with more than one child", pos_);
      expect(')');
      return inner;
    }

    std::string label = read_atom();
    skip_space();
    if (at_end()) throw ParseError("unterminated constituent", open);
    if (text_[pos_] == ')') throw ParseError("empty constituent '" + label + "'", open);

    if (text_[pos_] != '(') {
      const std::size_t word_at = pos_;
      std::string word = read_atom();
      skip_space();
      if (!at_end() && text_[pos_] != ')')
        throw ParseError("leaf '" + label + "' has more than one word", pos_);
      if (word.empty()) throw ParseError("empty word", word_at);
      expect(')');
      return Tree::leaf(std::move(label), std::move(word));
    }

    std::vector<Tree> children;
    for (;;) {
      skip_space();
      if (at_end()) throw ParseError("unterminated constituent '" + label + "'", open);
      if (text_[pos_] == ')') break;
      if (text_[pos_] != '(')
        throw ParseError("bare word inside constituent '" + label + "'", pos_);
      children.push_back(read_tree(false));
    }
    expect(')');
    return Tree::node(std::move(label), std::move(children));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline void serialize_into(const Tree& tree, std::string& out) {
  out += '(';
  out += tree.label;
  if (tree.is_leaf()) {
    out += ' ';
    out += tree.word;
  } else {
    for (const Tree& child : tree.children) {
      out += ' ';
      serialize_into(child, out);
    }
  }
  out += ')';
}

}  // namespace detail

/// Parses one bracketed tree. An outer unlabeled "( ... )" is stripped.
inline Tree parse_bracketed(std::string_view text) {
  return detail::BracketReader(text).read_document();
}

/// Canonical single-line form with single spaces between siblings.
inline std::string serialize(const Tree& tree) {
  std::string out;
  detail::serialize_into(tree, out);
  return out;
}

inline std::ostream& operator<<(std::ostream& os, const Tree& tree) {
  return os << serialize(tree);
}

template <typename F>
void for_each_leaf(const Tree& tree, F&& f) {
  if (tree.is_leaf()) {
    f(tree);
    return;
  }
  for (const Tree& child : tree.children) for_each_leaf(child, f);
}

inline std::vector<Token> fringe(const Tree& tree) {
  std::vector<Token> out;
  for_each_leaf(tree, [&](const Tree& leaf) { out.push_back({leaf.word, leaf.label}); });
  return out;
}

inline std::vector<std::string> words(const Tree& tree) {
  std::vector<std::string> out;
  for_each_leaf(tree, [&](const Tree& leaf) { out.push_back(leaf.word); });
  return out;
}

inline std::size_t fringe_length(const Tree& tree) {
  if (tree.is_leaf()) return 1;
  std::size_t n = 0;
  for (const Tree& child : tree.children) n += fringe_length(child);
  return n;
}

inline std::size_t internal_node_count(const Tree& tree) {
  if (tree.is_leaf()) return 0;
  std::size_t n = 1;
  for (const Tree& child : tree.children) n += internal_node_count(child);
  return n;
}

/// Checks the structural invariants; returns an explanation on failure.
inline std::optional<std::string> validate(const Tree& tree) {
  auto bad_atom = [](const std::string& s) {
    return s.empty() || std::any_of(s.begin(), s.end(), [](char c) {
             return std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')';
           });
  };
  if (bad_atom(tree.label)) return "invalid label '" + tree.label + "'";
  if (tree.is_leaf()) {
    if (bad_atom(tree.word)) return "invalid word '" + tree.word + "'";
    return std::nullopt;
  }
  if (!tree.word.empty()) return "internal node '" + tree.label + "' carries a word";
  for (const Tree& child : tree.children)
    if (auto err = validate(child)) return err;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Preprocessing

inline LabelSet default_punct_tags() {
  return {",", ".", "``", "''", ":", "-LRB-", "-RRB-", "?", "!"};
}

struct StripOptions {
  bool drop_punct = true;
  bool drop_partial = true;
  LabelSet punct_tags = default_punct_tags();
};

inline bool is_partial_word(const Tree& leaf) {
  return leaf.label == "XX" || (!leaf.word.empty() && leaf.word.back() == '-');
}

namespace detail {

inline std::optional<Tree> strip(const Tree& tree, const StripOptions& opt) {
  if (tree.is_leaf()) {
    if (opt.drop_partial && is_partial_word(tree)) return std::nullopt;
    if (opt.drop_punct && opt.punct_tags.contains(tree.label)) return std::nullopt;
    return tree;
  }
  std::vector<Tree> kept;
  kept.reserve(tree.children.size());
  for (const Tree& child : tree.children)
    if (auto c = strip(child, opt)) kept.push_back(std::move(*c));
  if (kept.empty()) return std::nullopt;
  return Tree::node(tree.label, std::move(kept));
}

}  // namespace detail

/// Removes punctuation and/or partial-word leaves. Internal nodes left empty
/// are deleted; returns nullopt if nothing survives.
inline std::optional<Tree> strip_tokens(const Tree& tree, bool drop_punct, bool drop_partial,
                                        const LabelSet& punct_tags = default_punct_tags()) {
  if (!drop_punct && !drop_partial) return tree;
  return detail::strip(tree, StripOptions{drop_punct, drop_partial, punct_tags});
}

inline std::optional<Tree> strip_tokens(const Tree& tree, const StripOptions& opt) {
  return strip_tokens(tree, opt.drop_punct, opt.drop_partial, opt.punct_tags);
}

// ---------------------------------------------------------------------------
// Spans and disfluency word sets

namespace detail {

inline std::size_t collect_spans(const Tree& tree, std::size_t start,
                                 std::vector<LabeledSpan>& out) {
  if (tree.is_leaf()) return start + 1;
  const std::size_t slot = out.size();
  out.push_back({start, start, tree.label});
  std::size_t end = start;
  for (const Tree& child : tree.children) end = collect_spans(child, end, out);
  out[slot].end = end;
  return end;
}

inline std::size_t mark_positions(const Tree& tree, std::size_t start, const LabelSet& labels,
                                  bool covered, std::vector<bool>& mask) {
  if (tree.is_leaf()) {
    if (covered) mask[start] = true;
    return start + 1;
  }
  const bool here = covered || labels.contains(tree.label);
  std::size_t end = start;
  for (const Tree& child : tree.children) end = mark_positions(child, end, labels, here, mask);
  return end;
}

}  // namespace detail

/// One span per internal node (preterminals excluded), in preorder. Unary
/// chains produce several spans over the same positions.
inline std::vector<LabeledSpan> spans(const Tree& tree) {
  std::vector<LabeledSpan> out;
  detail::collect_spans(tree, 0, out);
  return out;
}

/// Fringe positions with at least one ancestor labeled from `labels`.
inline std::vector<std::size_t> disfluency_word_positions(const Tree& tree,
                                                          const LabelSet& labels) {
  std::vector<bool> mask(fringe_length(tree), false);
  detail::mark_positions(tree, 0, labels, false, mask);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------
// Files

class TreeFileError : public std::runtime_error {
 public:
  TreeFileError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct NumberedTree {
  std::size_t line = 0;
  Tree tree;
};

/// Reads bracketed trees, one per balanced expression. Expressions may span
/// several lines; blank lines are skipped.
inline std::vector<NumberedTree> read_numbered_trees(std::istream& in) {
  std::vector<NumberedTree> out;
  std::string buffer;
  std::size_t depth = 0;
  std::size_t start_line = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (depth == 0 && line.find_first_not_of(" \t") == std::string::npos) continue;
    if (depth == 0) start_line = line_no;
    for (char c : line) {
      if (c == '(') ++depth;
      if (c == ')') {
        if (depth == 0) throw TreeFileError("unbalanced ')'", line_no);
        --depth;
      }
    }
    buffer += line;
    buffer += ' ';
    if (depth == 0) {
      try {
        out.push_back({start_line, parse_bracketed(buffer)});
      } catch (const ParseError& e) {
        throw TreeFileError(e.what(), start_line);
      }
      buffer.clear();
    }
  }
  if (depth != 0) throw TreeFileError("unterminated tree at end of input", start_line);
  return out;
}

inline std::vector<Tree> read_trees(std::istream& in) {
  std::vector<Tree> out;
  for (auto& nt : read_numbered_trees(in)) out.push_back(std::move(nt.tree));
  return out;
}

inline std::vector<Tree> read_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_trees(in);
}

inline void write_trees(std::ostream& out, const std::vector<Tree>& trees) {
  for (const Tree& t : trees) out << serialize(t) << '\n';
}

inline void write_tree_file(const std::string& path, const std::vector<Tree>& trees) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_trees(out, trees);
}

/// Applies strip_tokens to a corpus, dropping (and counting) sentences that
/// become empty.
inline std::vector<Tree> preprocess_corpus(const std::vector<Tree>& trees, const StripOptions& opt,
                                           std::size_t* dropped = nullptr) {
  std::vector<Tree> out;
  out.reserve(trees.size());
  std::size_t n_dropped = 0;
  for (const Tree& t : trees) {
    if (auto s = strip_tokens(t, opt))
      out.push_back(std::move(*s));
    else
      ++n_dropped;
  }
  if (dropped) *dropped = n_dropped;
  return out;
}

}  // namespace disfl

#endif  // DISFL_TREE_HPP
