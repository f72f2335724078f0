#pragma once

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "relex/conllu.hpp"

namespace relex {

struct EntityMention {
  std::string entity_id;
  int start = 0;  // inclusive 1-based token range
  int end = 0;
  std::string text;

  bool operator==(const EntityMention&) const = default;
};

enum class EdgeDirection { Up, Down };  // Up = toward the head, Down = toward a dependent

struct SdpPath {
  std::vector<int> node_indices;  // head of e1 first, head of e2 last
  std::vector<EdgeDirection> edge_directions;
  std::vector<std::string> edge_labels;

  bool operator==(const SdpPath&) const = default;

  size_t length() const { return edge_labels.size(); }
};

// Head of a multi-token span: the unique token governed from outside the span
// (or by the root); leftmost wins if several qualify.
inline int entity_head(const DependencyTree& tree, const EntityMention& mention) {
  if (mention.start > mention.end) throw std::invalid_argument("empty entity span");
  if (mention.start < 1 || mention.end > tree.size())
    throw std::out_of_range("entity span [" + std::to_string(mention.start) + "," +
                            std::to_string(mention.end) + "] outside sentence of " +
                            std::to_string(tree.size()) + " tokens");
  for (int i = mention.start; i <= mention.end; ++i) {
    int head = tree.token(i).head;
    if (head == 0 || head < mention.start || head > mention.end) return i;
  }
  // Unreachable on a valid tree: a span with every head inside itself would be a cycle.
  throw std::logic_error("entity span has no external attachment");
}

namespace detail {

// Token indices from `index` up to the root, inclusive.
inline std::vector<int> head_chain(const DependencyTree& tree, int index) {
  std::vector<int> chain;
  int cur = index;
  while (cur != 0) {
    chain.push_back(cur);
    cur = tree.token(cur).head;
  }
  return chain;
}

}  // namespace detail

// Unique tree path between the two entity heads, via the lowest common
// ancestor of their head chains. Direction flags mark the ascent toward the
// LCA and the descent after it; each edge label is the deprel of the
// dependent end of that edge.
inline SdpPath shortest_dependency_path(const DependencyTree& tree, const EntityMention& e1,
                                        const EntityMention& e2) {
  const int h1 = entity_head(tree, e1);
  const int h2 = entity_head(tree, e2);

  std::vector<int> chain1 = detail::head_chain(tree, h1);
  std::vector<int> chain2 = detail::head_chain(tree, h2);

  std::vector<char> on_chain1(static_cast<size_t>(tree.size()) + 1, 0);
  for (int idx : chain1) on_chain1[static_cast<size_t>(idx)] = 1;
  int lca = 0;
  for (int idx : chain2) {
    if (on_chain1[static_cast<size_t>(idx)]) {
      lca = idx;
      break;
    }
  }
  if (lca == 0) throw std::logic_error("no common ancestor: tree is not connected");

  SdpPath path;
  for (int idx : chain1) {
    path.node_indices.push_back(idx);
    if (idx == lca) break;
    path.edge_directions.push_back(EdgeDirection::Up);
    path.edge_labels.push_back(tree.token(idx).deprel);
  }
  std::vector<int> descent;
  for (int idx : chain2) {
    if (idx == lca) break;
    descent.push_back(idx);
  }
  std::reverse(descent.begin(), descent.end());
  for (int idx : descent) {
    path.node_indices.push_back(idx);
    path.edge_directions.push_back(EdgeDirection::Down);
    path.edge_labels.push_back(tree.token(idx).deprel);
  }
  return path;
}

// SDP nodes plus their direct dependents whose deprel is retained, plus both
// entity spans in full. Feeds the deterministic fallback simplifier and
// prompt debugging output.
inline std::vector<int> retained_token_set(const DependencyTree& tree, const SdpPath& sdp,
                                           const std::set<std::string>& retain_labels,
                                           const EntityMention& e1, const EntityMention& e2) {
  std::set<int> kept(sdp.node_indices.begin(), sdp.node_indices.end());
  std::vector<std::vector<int>> children = tree.child_lists();
  for (int node : sdp.node_indices) {
    for (int child : children[static_cast<size_t>(node)])
      if (retain_labels.count(tree.token(child).deprel)) kept.insert(child);
  }
  for (int i = e1.start; i <= e1.end; ++i) kept.insert(i);
  for (int i = e2.start; i <= e2.end; ++i) kept.insert(i);
  return {kept.begin(), kept.end()};
}

// Default "immediate context" labels (spaCy-style deprels): determiners,
// adjectival modifiers, compounds, negation, prepositions/case markers.
inline const std::set<std::string>& default_retain_labels() {
  static const std::set<std::string> labels = {"det", "amod", "compound", "neg", "case", "prep"};
  return labels;
}

inline std::string sdp_to_arrow_text(const SdpPath& sdp, const DependencyTree& tree) {
  std::string out;
  for (size_t i = 0; i < sdp.node_indices.size(); ++i) {
    if (i > 0) out += " → ";
    out += tree.token(sdp.node_indices[i]).form;
  }
  return out;
}

// Joins token forms in original order with single spaces. Punctuation
// normalization is out of scope.
inline std::string detokenize(const DependencyTree& tree, const std::vector<int>& indices) {
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  std::string out;
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0) out += ' ';
    out += tree.token(sorted[i]).form;
  }
  return out;
}

// One edge per line, root first; the textual tree rendering used by the
// refinement-mode description prompt.
inline std::string serialize_tree_text(const DependencyTree& tree) {
  std::string out;
  for (const Token& t : tree.tokens) {
    if (!out.empty()) out += "; ";
    if (t.head == 0)
      out += t.form + " (root)";
    else
      out += tree.token(t.head).form + " -" + t.deprel + "-> " + t.form;
  }
  return out;
}

}  // namespace relex
