#include <doctest.h>

#include "att/consistency.hpp"
#include "att/datasets.hpp"
#include "support.hpp"

using namespace att;
using namespace att::testing;

namespace {

std::vector<NodeId> iota_order(std::size_t n) {
  std::vector<NodeId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<NodeId>(i);
  return v;
}

// Caterpillar-shaped merges over `leaves` starting from cluster `first`.
NodeId grow(std::vector<std::pair<NodeId, NodeId>>& merges, std::size_t n, NodeId first,
            const std::vector<NodeId>& leaves) {
  NodeId cur = first;
  for (NodeId leaf : leaves) {
    merges.emplace_back(cur, leaf);
    cur = static_cast<NodeId>(n + merges.size() - 1);
  }
  return cur;
}

}  // namespace

TEST_SUITE("consistency") {

TEST_CASE("a tree mirroring the chain is consistent") {
  const BayesPolytree chain = make_designed_polytree("chain");
  const TreeTopology t = caterpillar(iota_order(17));
  CHECK(topology_consistency(t, chain));
  const ConsistencyReport rep = check_topology_consistency(t, chain);
  CHECK(rep.violations.empty());
}

TEST_CASE("grouping non-adjacent chain variables is inconsistent") {
  std::vector<NodeId> order = iota_order(17);
  std::swap(order[1], order[2]);  // 0 and 2 share the first cherry
  const TreeTopology t = caterpillar(order);
  const ConsistencyReport rep = check_topology_consistency(t, make_designed_polytree("chain"));
  CHECK_FALSE(rep.consistent);
  REQUIRE(rep.violations.size() == 1);
  const auto [a, b] = bipartition(t, rep.violations.front());
  const auto& small = a.size() < b.size() ? a : b;
  CHECK(small == std::vector<std::size_t>{0, 2});
}

TEST_CASE("branching tree with the branch variable beside a bond") {
  const std::size_t n = 17;
  std::vector<std::pair<NodeId, NodeId>> merges;
  merges.emplace_back(0, 1);
  grow(merges, n, static_cast<NodeId>(n), {2, 3, 4});
  merges.emplace_back(8, 7);
  grow(merges, n, static_cast<NodeId>(n + merges.size() - 1), {6, 5});
  merges.emplace_back(16, 15);
  grow(merges, n, static_cast<NodeId>(n + merges.size() - 1), {14, 13, 12, 11, 10, 9});
  REQUIRE(merges.size() == n - 3);
  const TreeTopology t = tree_from_merges(n, merges);
  CHECK(topology_invariants_hold(t));
  CHECK(topology_consistency(t, make_designed_polytree("branching")));
  // Against a plain chain the {5..8} cut crosses 4-5 and 8-9.
  CHECK_FALSE(topology_consistency(t, make_chain_polytree(17, 0.8)));
}

TEST_CASE("collision tree isolating the XOR triple") {
  const std::size_t n = 17;
  std::vector<std::pair<NodeId, NodeId>> merges{{7, 15}};
  merges.emplace_back(static_cast<NodeId>(n), 16);
  merges.emplace_back(14, 13);
  grow(merges, n, static_cast<NodeId>(n + 2), {12, 11, 10, 9, 8, 6, 5, 4, 3, 2, 1});
  REQUIRE(merges.size() == n - 3);
  const TreeTopology t = tree_from_merges(n, merges);
  const BayesPolytree bn = make_designed_polytree("collision");
  CHECK(topology_consistency(t, bn));
  CHECK(isolates_group(t, {16, 7, 15}));
  CHECK_FALSE(isolates_group(t, {7, 16}));

  // Splitting the XOR pair: 7 next to 16, 15 far away.
  std::vector<std::pair<NodeId, NodeId>> split{{7, 16}};
  split.emplace_back(14, 15);
  grow(split, n, static_cast<NodeId>(n + 1), {13, 12, 11, 10, 9, 8, 6, 5, 4, 3, 2, 1});
  const TreeTopology bad = tree_from_merges(n, split);
  CHECK_FALSE(topology_consistency(bad, bn));
  CHECK_FALSE(isolates_group(bad, {7, 15, 16}));
}

TEST_CASE("variable count mismatch") {
  CHECK_THROWS_AS(check_topology_consistency(make_tensor_train(5), make_chain_polytree(6, 0.8)),
                  std::invalid_argument);
}

TEST_CASE("disconnected reference allows empty cuts") {
  BayesPolytree two_chains{6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}}, 0.8};
  CHECK(topology_consistency(caterpillar(iota_order(6)), two_chains));
}

}  // TEST_SUITE
