#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace att {

// Node ids: leaves are 0..n-1 (leaf i carries variable i), internal nodes
// are n..2n-3.
using NodeId = std::uint32_t;

// Unordered node pair stored with a < b.
struct Edge {
  NodeId a = 0;
  NodeId b = 0;

  static Edge of(NodeId x, NodeId y) { return x < y ? Edge{x, y} : Edge{y, x}; }
  bool touches(NodeId x) const { return a == x || b == x; }
  NodeId other(NodeId x) const { return x == a ? b : a; }
  auto operator<=>(const Edge&) const = default;
};

// Regrouping of the four outer legs (a, b | c, d) around the root edge:
// a and b hang off the smaller root endpoint, c and d off the larger one.
enum class Pairing : std::uint8_t {
  Keep = 0,   // (a, b | c, d)
  AC_BD = 1,  // (a, c | b, d)
  AD_BC = 2,  // (a, d | b, c)
};

inline constexpr Pairing kAllPairings[] = {Pairing::Keep, Pairing::AC_BD, Pairing::AD_BC};

class TreeTopology {
 public:
  TreeTopology() = default;

  // Builds and validates a topology. adjacency[i] lists the neighbours of
  // node i in slot order (1 entry for leaves, 3 for internal nodes).
  TreeTopology(std::size_t num_variables, std::vector<std::vector<NodeId>> adjacency, Edge root);

  std::size_t num_variables() const { return n_; }
  std::size_t num_nodes() const { return adj_.size(); }
  bool is_leaf(NodeId node) const { return node < n_; }
  std::span<const NodeId> neighbors(NodeId node) const { return adj_.at(node); }
  NodeId neighbor(NodeId node, std::size_t slot) const { return adj_.at(node).at(slot); }
  // Slot of `node` that points at `neighbor`; throws if not adjacent.
  std::size_t slot_of(NodeId node, NodeId neighbor) const;

  bool has_edge(Edge e) const;
  // A virtual bond joins two internal nodes.
  bool is_virtual(Edge e) const { return !is_leaf(e.a) && !is_leaf(e.b); }
  std::vector<Edge> edges() const;
  std::vector<Edge> virtual_bonds() const;

  Edge root_edge() const { return root_; }
  void set_root_edge(Edge e);

  // Iteration at which the bond was last processed; -1 if never.
  std::int64_t edge_age(Edge e) const;
  void touch(Edge e, std::int64_t iteration);
  const std::map<Edge, std::int64_t>& edge_ages() const { return age_; }

  // Regroups the four subtrees around the root edge. Ages follow the bonds
  // they belong to; the root edge is stamped with `iteration`.
  void regroup(Pairing p, std::int64_t iteration);

  // Throws TopologyError on any violated structural invariant.
  void validate() const;

  friend bool operator==(const TreeTopology&, const TreeTopology&) = default;

 private:
  void replace_neighbor(NodeId node, NodeId from, NodeId to);

  std::size_t n_ = 0;
  std::vector<std::vector<NodeId>> adj_;
  Edge root_{};
  std::map<Edge, std::int64_t> age_;
};

// Outer legs of the root edge (u = root.a, v = root.b): a, b are u's other
// neighbours in slot order, c, d are v's.
struct RootLegs {
  NodeId u, v;
  NodeId a, b, c, d;
};
RootLegs root_legs(const TreeTopology& t);

TreeTopology make_tensor_train(std::size_t n);
TreeTopology make_balanced_tree(std::size_t n);
TreeTopology make_random_tree(std::size_t n, std::uint64_t seed);

// Variables on each side of e; first is the side containing e.a.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> bipartition(const TreeTopology& t,
                                                                          Edge e);

TreeTopology apply_pairing(const TreeTopology& t, Pairing p, std::int64_t iteration);

// Number of edges between every pair of nodes reachable from `from`.
std::vector<std::size_t> bfs_distances(const TreeTopology& t, NodeId from);

enum class CenterKind {
  Centroid,        // minimises the largest remaining component
  MinEccentricity  // classic graph center
};

NodeId tree_center(const TreeTopology& t, CenterKind kind = CenterKind::Centroid);

// Dense rank (1 = closest) of each variable by edge distance from the center.
std::vector<std::size_t> center_distance_ranking(const TreeTopology& t,
                                                 CenterKind kind = CenterKind::Centroid);

}  // namespace att
