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

// Alternative encodings of disfluency structure. Every transform deletes
// nodes only by splicing (a node is replaced by its children), so the fringe
// is preserved by construction.

#ifndef DISFL_TRANSFORMS_HPP
#define DISFL_TRANSFORMS_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "disfl/tree.hpp"

namespace disfl {

enum class TransformMode { kNone, kPosDisfl, kNoSyntax, kPosDisflNoSyntax, kTopDisfl, kTopDisflNoSyntax };

namespace detail {

// Wraps a forest back into a single tree: a lone internal node is returned
// as is, anything else goes under a TOP node.
inline Tree as_single_tree(std::vector<Tree> forest) {
  if (forest.size() == 1 && !forest.front().is_leaf()) return std::move(forest.front());
  return Tree::node(std::string(kTop), std::move(forest));
}

inline void pos_disfl_into(const Tree& tree, const std::string* innermost, std::vector<Tree>& out) {
  if (tree.is_leaf()) {
    if (innermost)
      out.push_back(Tree::node(*innermost, {tree}));
    else
      out.push_back(tree);
    return;
  }
  if (is_disfluency_label(tree.label)) {
    for (const Tree& child : tree.children) pos_disfl_into(child, &tree.label, out);
    return;
  }
  std::vector<Tree> kids;
  for (const Tree& child : tree.children) pos_disfl_into(child, innermost, kids);
  out.push_back(Tree::node(tree.label, std::move(kids)));
}

inline void keep_disfluency_into(const Tree& tree, std::vector<Tree>& out) {
  if (tree.is_leaf()) {
    out.push_back(tree);
    return;
  }
  std::vector<Tree> kids;
  for (const Tree& child : tree.children) keep_disfluency_into(child, kids);
  if (is_disfluency_label(tree.label))
    out.push_back(Tree::node(tree.label, std::move(kids)));
  else
    for (Tree& k : kids) out.push_back(std::move(k));
}

inline void collect_leaves(const Tree& tree, std::vector<Tree>& out) {
  for_each_leaf(tree, [&](const Tree& leaf) { out.push_back(leaf); });
}

inline void top_disfl_into(const Tree& tree, std::vector<Tree>& out) {
  if (tree.is_leaf()) {
    out.push_back(tree);
    return;
  }
  if (is_disfluency_label(tree.label)) {
    std::vector<Tree> leaves;
    collect_leaves(tree, leaves);
    out.push_back(Tree::node(tree.label, std::move(leaves)));
    return;
  }
  std::vector<Tree> kids;
  for (const Tree& child : tree.children) top_disfl_into(child, kids);
  out.push_back(Tree::node(tree.label, std::move(kids)));
}

}  // namespace detail

/// Pushes EDITED/INTJ/PRN down to the words: each dominated leaf gets a unary
/// parent carrying its innermost disfluency label, and the original
/// disfluency constituents are spliced out.
inline Tree pos_disfl(const Tree& tree) {
  std::vector<Tree> out;
  detail::pos_disfl_into(tree, nullptr, out);
  return detail::as_single_tree(std::move(out));
}

/// Splices out every non-disfluency internal node and puts the remaining
/// forest under a synthetic TOP root.
inline Tree no_syntax(const Tree& tree) {
  std::vector<Tree> forest;
  detail::keep_disfluency_into(tree, forest);
  return Tree::node(std::string(kTop), std::move(forest));
}

inline Tree pos_disfl_no_syntax(const Tree& tree) { return no_syntax(pos_disfl(tree)); }

/// Keeps only the topmost disfluency nodes, each flattened over its leaves.
inline Tree top_disfl(const Tree& tree) {
  std::vector<Tree> out;
  detail::top_disfl_into(tree, out);
  return detail::as_single_tree(std::move(out));
}

inline Tree top_disfl_no_syntax(const Tree& tree) { return no_syntax(top_disfl(tree)); }

inline Tree apply_transform(TransformMode mode, const Tree& tree) {
  switch (mode) {
    case TransformMode::kNone: return tree;
    case TransformMode::kPosDisfl: return pos_disfl(tree);
    case TransformMode::kNoSyntax: return no_syntax(tree);
    case TransformMode::kPosDisflNoSyntax: return pos_disfl_no_syntax(tree);
    case TransformMode::kTopDisfl: return top_disfl(tree);
    case TransformMode::kTopDisflNoSyntax: return top_disfl_no_syntax(tree);
  }
  return tree;
}

inline std::optional<TransformMode> parse_transform_mode(std::string_view name) {
  if (name == "none" || name == "baseline") return TransformMode::kNone;
  if (name == "posdisfl") return TransformMode::kPosDisfl;
  if (name == "nosyntax") return TransformMode::kNoSyntax;
  if (name == "posdisfl-nosyntax") return TransformMode::kPosDisflNoSyntax;
  if (name == "topdisfl") return TransformMode::kTopDisfl;
  if (name == "topdisfl-nosyntax") return TransformMode::kTopDisflNoSyntax;
  return std::nullopt;
}

inline std::string_view transform_mode_name(TransformMode mode) {
  switch (mode) {
    case TransformMode::kNone: return "none";
    case TransformMode::kPosDisfl: return "posdisfl";
    case TransformMode::kNoSyntax: return "nosyntax";
    case TransformMode::kPosDisflNoSyntax: return "posdisfl-nosyntax";
    case TransformMode::kTopDisfl: return "topdisfl";
    case TransformMode::kTopDisflNoSyntax: return "topdisfl-nosyntax";
  }
  return "none";
}

}  // namespace disfl

#endif  // DISFL_TRANSFORMS_HPP
