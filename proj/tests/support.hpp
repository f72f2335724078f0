#pragma once

#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "relex/depgraph.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
  return std::string(RELEX_TESTS_DIR) + "/fixtures/" + name;
}

inline std::string asset_path(const std::string& name) {
  return std::string(RELEX_ASSETS_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline relex::DependencyTree load_figure2_tree() {
  relex::ConlluDocument doc = relex::parse_conllu_file(fixture_path("figure2.conllu"));
  if (doc.trees.size() != 1 || !doc.errors.empty())
    throw std::runtime_error("figure2.conllu fixture did not parse cleanly");
  return doc.trees[0];
}

// Uniform random labeled tree: node i attaches to a random earlier node, then
// indices are shuffled so the root is not biased toward index 1.
inline relex::DependencyTree random_tree(std::mt19937_64& rng, int n) {
  std::vector<int> head(static_cast<size_t>(n) + 1, 0);
  for (int i = 2; i <= n; ++i) head[static_cast<size_t>(i)] = 1 + static_cast<int>(rng() % static_cast<size_t>(i - 1));

  std::vector<int> perm(static_cast<size_t>(n) + 1);
  for (int i = 1; i <= n; ++i) perm[static_cast<size_t>(i)] = i;
  for (int i = n; i >= 2; --i) std::swap(perm[static_cast<size_t>(i)], perm[1 + rng() % static_cast<size_t>(i)]);

  relex::DependencyTree tree;
  tree.sentence_id = "rand";
  tree.tokens.resize(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    relex::Token t;
    t.index = perm[static_cast<size_t>(i)];
    t.form = "w" + std::to_string(t.index);
    t.head = head[static_cast<size_t>(i)] == 0 ? 0 : perm[static_cast<size_t>(head[static_cast<size_t>(i)])];
    t.deprel = "r" + std::to_string(i % 5);
    tree.tokens[static_cast<size_t>(t.index - 1)] = std::move(t);
  }
  return tree;
}

// Independent oracle: breadth-first search over the undirected edge set.
inline std::vector<int> bfs_path(const relex::DependencyTree& tree, int from, int to) {
  const int n = tree.size();
  std::vector<std::vector<int>> adj(static_cast<size_t>(n) + 1);
  for (const relex::Token& t : tree.tokens) {
    if (t.head != 0) {
      adj[static_cast<size_t>(t.index)].push_back(t.head);
      adj[static_cast<size_t>(t.head)].push_back(t.index);
    }
  }
  std::vector<int> parent(static_cast<size_t>(n) + 1, -1);
  std::queue<int> queue;
  queue.push(from);
  parent[static_cast<size_t>(from)] = from;
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop();
    if (cur == to) break;
    for (int next : adj[static_cast<size_t>(cur)]) {
      if (parent[static_cast<size_t>(next)] == -1) {
        parent[static_cast<size_t>(next)] = cur;
        queue.push(next);
      }
    }
  }
  std::vector<int> path;
  int cur = to;
  while (true) {
    path.push_back(cur);
    if (cur == from) break;
    cur = parent[static_cast<size_t>(cur)];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

inline int depth_of(const relex::DependencyTree& tree, int index) {
  int depth = 0;
  int cur = index;
  while (tree.token(cur).head != 0) {
    cur = tree.token(cur).head;
    ++depth;
  }
  return depth;
}

inline relex::EntityMention single_token_mention(const relex::DependencyTree& tree, int index,
                                                 const std::string& id) {
  return relex::EntityMention{id, index, index, tree.token(index).form};
}

}  // namespace testsupport
