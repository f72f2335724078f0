#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "relex/conllu.hpp"
#include "relex/depgraph.hpp"
#include "support.hpp"

using namespace relex;
using namespace testsupport;

TEST_CASE("parse_conllu handles a minimal valid tree") {
  std::string doc =
      "1\tA\t_\t_\t_\t_\t2\tdep\t_\t_\n"
      "2\tB\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "3\tC\t_\t_\t_\t_\t2\tdep\t_\t_\n\n";
  ConlluDocument parsed = parse_conllu(doc);
  REQUIRE(parsed.errors.empty());
  REQUIRE(parsed.trees.size() == 1);
  const DependencyTree& tree = parsed.trees[0];
  CHECK(tree.size() == 3);
  CHECK(tree.root_index() == 2);
  CHECK(tree.token(1).form == "A");
  CHECK(tree.token(3).head == 2);
}

TEST_CASE("parse_conllu reports a self-loop with the token number") {
  std::string doc =
      "# sent_id = bad\n"
      "1\tA\t_\t_\t_\t_\t2\tdep\t_\t_\n"
      "2\tB\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "3\tC\t_\t_\t_\t_\t2\tdep\t_\t_\n"
      "4\tD\t_\t_\t_\t_\t4\tdep\t_\t_\n\n";
  ConlluDocument parsed = parse_conllu(doc);
  CHECK(parsed.trees.empty());
  REQUIRE_FALSE(parsed.errors.empty());
  CHECK(parsed.errors[0].sentence_id == "bad");
  CHECK(parsed.errors[0].message == "self-loop at token 4");
}

TEST_CASE("parse_conllu rejects malformed sentences without aborting the document") {
  std::string doc =
      "# sent_id = s1\n"
      "1\tA\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tB\t_\t_\t_\t_\t1\tdep\n"  // 8 fields
      "\n"
      "# sent_id = s2\n"
      "1\tX\t_\t_\t_\t_\t2\tcycle\t_\t_\n"
      "2\tY\t_\t_\t_\t_\t1\tcycle\t_\t_\n"
      "\n"
      "# sent_id = s3\n"
      "1\tok\t_\t_\t_\t_\t0\troot\t_\t_\n\n";
  ConlluDocument parsed = parse_conllu(doc);
  REQUIRE(parsed.trees.size() == 1);
  CHECK(parsed.trees[0].sentence_id == "s3");
  REQUIRE(parsed.errors.size() >= 2);
  CHECK(parsed.errors[0].sentence_id == "s1");
  CHECK(parsed.errors[0].message.find("10 tab-separated fields") != std::string::npos);
  CHECK(parsed.errors[0].line == 3);
  bool cyclic_reported = false;
  for (const ConlluError& e : parsed.errors)
    if (e.sentence_id == "s2" && e.message.find("cyclic") != std::string::npos) cyclic_reported = true;
  CHECK(cyclic_reported);
}

TEST_CASE("parse_conllu flags root-count and head-range problems") {
  std::string no_root =
      "1\tA\t_\t_\t_\t_\t2\tdep\t_\t_\n"
      "2\tB\t_\t_\t_\t_\t1\tdep\t_\t_\n\n";
  std::string two_roots =
      "1\tA\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tB\t_\t_\t_\t_\t0\troot\t_\t_\n\n";
  std::string big_head = "1\tA\t_\t_\t_\t_\t9\tdep\t_\t_\n\n";
  std::string bad_head = "1\tA\t_\t_\t_\t_\tx\tdep\t_\t_\n\n";
  CHECK(parse_conllu(no_root).errors[0].message == "no root token");
  CHECK(parse_conllu(two_roots).errors[0].message == "2 root tokens");
  CHECK(parse_conllu(big_head).errors[0].message.find("outside 0..1") != std::string::npos);
  CHECK(parse_conllu(bad_head).errors[0].message.find("non-integer head") != std::string::npos);
}

TEST_CASE("parse_conllu skips multiword and empty-node lines") {
  std::string doc =
      "1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tdo\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "2\tnot\t_\t_\t_\t_\t1\tneg\t_\t_\n"
      "2.1\telided\t_\t_\t_\t_\t_\t_\t_\t_\n\n";
  ConlluDocument parsed = parse_conllu(doc);
  REQUIRE(parsed.errors.empty());
  REQUIRE(parsed.trees.size() == 1);
  CHECK(parsed.trees[0].size() == 2);
}

TEST_CASE("figure-2 fixture parses with the expected attachments") {
  DependencyTree tree = load_figure2_tree();
  CHECK(tree.sentence_id == "fig2");
  CHECK(tree.size() == 25);
  CHECK(tree.token(8).form == "improve");
  CHECK(tree.token(8).head == 6);   // improve attaches to methodology
  CHECK(tree.token(10).head == 8);  // accuracy attaches to improve
  CHECK(tree.text.find("term aggregation system") != std::string::npos);
}

TEST_CASE("serialize/parse round-trips field values") {
  DependencyTree fig2 = load_figure2_tree();
  ConlluDocument again = parse_conllu(serialize_conllu(fig2));
  REQUIRE(again.errors.empty());
  REQUIRE(again.trees.size() == 1);
  CHECK(again.trees[0] == fig2);

  std::mt19937_64 rng(7);
  for (int round = 0; round < 50; ++round) {
    DependencyTree tree = random_tree(rng, 2 + static_cast<int>(rng() % 29));
    ConlluDocument parsed = parse_conllu(serialize_conllu(tree));
    REQUIRE(parsed.errors.empty());
    REQUIRE(parsed.trees.size() == 1);
    CHECK(parsed.trees[0] == tree);
  }
}

TEST_CASE("entity_head selects the externally governed token") {
  DependencyTree tree = load_figure2_tree();

  SECTION("single-token span") {
    CHECK(entity_head(tree, {"m", 6, 6, "methodology"}) == 6);
  }
  SECTION("multi-token span: term aggregation system") {
    CHECK(entity_head(tree, {"t", 13, 15, "term aggregation system"}) == 15);
  }
  SECTION("leftmost tie-break when two tokens attach outside") {
    // Tokens 7 and 10 both attach to 8; the span [9,11] has 9 and 11 internal
    // to it, 10 attaching outside, while span [7,7]+[9,10] is not contiguous.
    // Build a small synthetic case instead: both span tokens head to 3.
    std::string doc =
        "1\ta\t_\t_\t_\t_\t3\tdep\t_\t_\n"
        "2\tb\t_\t_\t_\t_\t3\tdep\t_\t_\n"
        "3\tc\t_\t_\t_\t_\t0\troot\t_\t_\n\n";
    DependencyTree small = parse_conllu(doc).trees.at(0);
    CHECK(entity_head(small, {"p", 1, 2, "a b"}) == 1);
  }
  SECTION("errors") {
    CHECK_THROWS_AS(entity_head(tree, {"e", 5, 4, ""}), std::invalid_argument);
    CHECK_THROWS_AS(entity_head(tree, {"e", 20, 30, ""}), std::out_of_range);
  }
}

TEST_CASE("figure-2 SDP is methodology -> improve -> accuracy") {
  DependencyTree tree = load_figure2_tree();
  EntityMention e1{"m", 6, 6, "methodology"};
  EntityMention e2{"a", 10, 10, "accuracy"};
  SdpPath sdp = shortest_dependency_path(tree, e1, e2);
  REQUIRE(sdp.node_indices == std::vector<int>{6, 8, 10});
  CHECK(sdp.edge_directions ==
        std::vector<EdgeDirection>{EdgeDirection::Down, EdgeDirection::Down});
  CHECK(sdp.edge_labels == std::vector<std::string>{"acl", "dobj"});
  CHECK(sdp_to_arrow_text(sdp, tree) == "methodology → improve → accuracy");
}

TEST_CASE("SDP of identical endpoints is a single node") {
  DependencyTree tree = load_figure2_tree();
  EntityMention e{"m", 6, 6, "methodology"};
  SdpPath sdp = shortest_dependency_path(tree, e, e);
  CHECK(sdp.node_indices == std::vector<int>{6});
  CHECK(sdp.edge_labels.empty());
  CHECK(sdp_to_arrow_text(sdp, tree) == "methodology");
}

TEST_CASE("arrow text of a two-node path") {
  std::string doc =
      "1\tA\t_\t_\t_\t_\t2\tdep\t_\t_\n"
      "2\tB\t_\t_\t_\t_\t0\troot\t_\t_\n\n";
  DependencyTree tree = parse_conllu(doc).trees.at(0);
  SdpPath sdp = shortest_dependency_path(tree, {"a", 1, 1, "A"}, {"b", 2, 2, "B"});
  CHECK(sdp_to_arrow_text(sdp, tree) == "A → B");
}

TEST_CASE("SDP matches the BFS oracle on random trees") {
  std::mt19937_64 rng(20260810);
  for (int round = 0; round < 1000; ++round) {
    int n = 2 + static_cast<int>(rng() % 29);
    DependencyTree tree = random_tree(rng, n);
    int a = 1 + static_cast<int>(rng() % static_cast<size_t>(n));
    int b = 1 + static_cast<int>(rng() % static_cast<size_t>(n));
    EntityMention e1 = single_token_mention(tree, a, "e1");
    EntityMention e2 = single_token_mention(tree, b, "e2");

    SdpPath sdp = shortest_dependency_path(tree, e1, e2);
    REQUIRE(sdp.node_indices == bfs_path(tree, a, b));

    // Structural invariants of a tree path.
    REQUIRE(sdp.edge_labels.size() == sdp.node_indices.size() - 1);
    REQUIRE(sdp.edge_directions.size() == sdp.edge_labels.size());
    std::set<int> unique_nodes(sdp.node_indices.begin(), sdp.node_indices.end());
    REQUIRE(unique_nodes.size() == sdp.node_indices.size());
    for (size_t i = 0; i + 1 < sdp.node_indices.size(); ++i) {
      int u = sdp.node_indices[i];
      int v = sdp.node_indices[i + 1];
      if (sdp.edge_directions[i] == EdgeDirection::Up) {
        REQUIRE(tree.token(u).head == v);
        REQUIRE(sdp.edge_labels[i] == tree.token(u).deprel);
      } else {
        REQUIRE(tree.token(v).head == u);
        REQUIRE(sdp.edge_labels[i] == tree.token(v).deprel);
      }
    }

    // Reversal symmetry with flipped direction flags.
    SdpPath back = shortest_dependency_path(tree, e2, e1);
    std::vector<int> reversed(back.node_indices.rbegin(), back.node_indices.rend());
    REQUIRE(reversed == sdp.node_indices);
    REQUIRE(back.edge_labels.size() == sdp.edge_labels.size());
    for (size_t i = 0; i < sdp.edge_directions.size(); ++i) {
      EdgeDirection flipped = back.edge_directions[back.edge_directions.size() - 1 - i];
      REQUIRE((sdp.edge_directions[i] == EdgeDirection::Up) == (flipped == EdgeDirection::Down));
    }

    // Length bound: <= depth(a) + depth(b), equality iff the LCA is the root.
    int depth_sum = depth_of(tree, a) + depth_of(tree, b);
    REQUIRE(static_cast<int>(sdp.length()) <= depth_sum);
    bool lca_is_root = false;
    for (int node : sdp.node_indices)
      if (tree.token(node).head == 0) lca_is_root = true;
    if (a != b) REQUIRE((static_cast<int>(sdp.length()) == depth_sum) == lca_is_root);
  }
}

TEST_CASE("retained_token_set keeps SDP, labeled children, and entity spans") {
  DependencyTree tree = load_figure2_tree();
  EntityMention e1{"m", 6, 6, "methodology"};
  EntityMention e2{"a", 10, 10, "accuracy"};
  SdpPath sdp = shortest_dependency_path(tree, e1, e2);

  SECTION("empty retain set on a single-node SDP keeps only that token") {
    SdpPath self = shortest_dependency_path(tree, e1, e1);
    std::vector<int> kept = retained_token_set(tree, self, {}, e1, e1);
    CHECK(kept == std::vector<int>{6});
  }

  SECTION("determiner/adjective/auxiliary context around the figure-2 SDP") {
    // Hand enumeration: SDP {6,8,10}; children with kept labels:
    // 6 -> {4 det, 5 amod}, 8 -> {7 aux}, 10 -> {9 det}.
    std::vector<int> kept = retained_token_set(tree, sdp, {"det", "amod", "aux"}, e1, e2);
    CHECK(kept == std::vector<int>{4, 5, 6, 7, 8, 9, 10});
    CHECK(detokenize(tree, kept) == "a new methodology to improve the accuracy");
  }

  SECTION("set algebra on random trees: SDP subset, SDP-plus-children superset") {
    std::mt19937_64 rng(99);
    for (int round = 0; round < 200; ++round) {
      int n = 2 + static_cast<int>(rng() % 29);
      DependencyTree random = random_tree(rng, n);
      int a = 1 + static_cast<int>(rng() % static_cast<size_t>(n));
      int b = 1 + static_cast<int>(rng() % static_cast<size_t>(n));
      EntityMention m1 = single_token_mention(random, a, "e1");
      EntityMention m2 = single_token_mention(random, b, "e2");
      SdpPath path = shortest_dependency_path(random, m1, m2);
      std::vector<int> kept = retained_token_set(random, path, {"r0", "r3"}, m1, m2);

      std::set<int> kept_set(kept.begin(), kept.end());
      std::set<int> allowed(path.node_indices.begin(), path.node_indices.end());
      std::vector<std::vector<int>> children = random.child_lists();
      for (int node : path.node_indices)
        for (int child : children[static_cast<size_t>(node)]) allowed.insert(child);
      for (int node : path.node_indices) REQUIRE(kept_set.count(node) == 1);
      for (int node : kept) REQUIRE(allowed.count(node) == 1);
      REQUIRE(std::is_sorted(kept.begin(), kept.end()));
    }
  }
}

TEST_CASE("serialize_tree_text lists root and labeled edges") {
  std::string doc =
      "1\tA\t_\t_\t_\t_\t2\tnsubj\t_\t_\n"
      "2\tB\t_\t_\t_\t_\t0\troot\t_\t_\n"
      "3\tC\t_\t_\t_\t_\t2\tdobj\t_\t_\n\n";
  DependencyTree tree = parse_conllu(doc).trees.at(0);
  CHECK(serialize_tree_text(tree) == "B -nsubj-> A; B (root); B -dobj-> C");
}
