#include "att/topology.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "att/errors.hpp"

namespace att {

TreeTopology::TreeTopology(std::size_t num_variables, std::vector<std::vector<NodeId>> adjacency,
                           Edge root)
    : n_(num_variables), adj_(std::move(adjacency)), root_(root) {
  for (Edge e : edges()) age_[e] = -1;
  validate();
}

std::size_t TreeTopology::slot_of(NodeId node, NodeId neighbor) const {
  const auto& nb = adj_.at(node);
  auto it = std::find(nb.begin(), nb.end(), neighbor);
  if (it == nb.end()) {
    throw TopologyError("node " + std::to_string(neighbor) + " is not adjacent to node " +
                        std::to_string(node));
  }
  return static_cast<std::size_t>(it - nb.begin());
}

bool TreeTopology::has_edge(Edge e) const {
  if (e.a >= adj_.size() || e.b >= adj_.size()) return false;
  const auto& nb = adj_[e.a];
  return std::find(nb.begin(), nb.end(), e.b) != nb.end();
}

std::vector<Edge> TreeTopology::edges() const {
  std::vector<Edge> out;
  for (NodeId x = 0; x < adj_.size(); ++x) {
    for (NodeId y : adj_[x]) {
      if (x < y) out.push_back({x, y});
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> TreeTopology::virtual_bonds() const {
  std::vector<Edge> out;
  for (Edge e : edges()) {
    if (is_virtual(e)) out.push_back(e);
  }
  return out;
}

void TreeTopology::set_root_edge(Edge e) {
  if (!has_edge(e)) {
    throw TopologyError("root edge (" + std::to_string(e.a) + ", " + std::to_string(e.b) +
                        ") is not an edge");
  }
  root_ = e;
}

std::int64_t TreeTopology::edge_age(Edge e) const {
  auto it = age_.find(e);
  if (it == age_.end()) throw TopologyError("unknown edge in age lookup");
  return it->second;
}

void TreeTopology::touch(Edge e, std::int64_t iteration) {
  auto it = age_.find(e);
  if (it == age_.end()) throw TopologyError("unknown edge in age update");
  it->second = iteration;
}

void TreeTopology::replace_neighbor(NodeId node, NodeId from, NodeId to) {
  adj_.at(node).at(slot_of(node, from)) = to;
}

void TreeTopology::regroup(Pairing p, std::int64_t iteration) {
  if (p != Pairing::Keep) {
    const RootLegs legs = root_legs(*this);
    if (is_leaf(legs.u) || is_leaf(legs.v)) throw TopologyError("cannot regroup around a leaf edge");
    // b moves to v; c (AC_BD) or d (AD_BC) moves to u.
    const NodeId moved_in = p == Pairing::AC_BD ? legs.c : legs.d;
    const NodeId b = legs.b;
    replace_neighbor(legs.u, b, moved_in);
    replace_neighbor(legs.v, moved_in, b);
    replace_neighbor(b, legs.u, legs.v);
    replace_neighbor(moved_in, legs.v, legs.u);

    const std::int64_t age_b = age_.at(Edge::of(b, legs.u));
    const std::int64_t age_m = age_.at(Edge::of(moved_in, legs.v));
    age_.erase(Edge::of(b, legs.u));
    age_.erase(Edge::of(moved_in, legs.v));
    age_[Edge::of(b, legs.v)] = age_b;
    age_[Edge::of(moved_in, legs.u)] = age_m;
  }
  touch(root_, iteration);
}

void TreeTopology::validate() const {
  const std::size_t n = n_;
  if (n < 3) throw TopologyError("a tensor tree needs at least 3 variables");
  if (adj_.size() != 2 * n - 2) {
    throw TopologyError("expected " + std::to_string(2 * n - 2) + " nodes, found " +
                        std::to_string(adj_.size()));
  }
  std::size_t degree_sum = 0;
  for (NodeId x = 0; x < adj_.size(); ++x) {
    const std::size_t want = is_leaf(x) ? 1 : 3;
    if (adj_[x].size() != want) {
      throw TopologyError("node " + std::to_string(x) + " has degree " +
                          std::to_string(adj_[x].size()) + ", expected " + std::to_string(want));
    }
    for (NodeId y : adj_[x]) {
      if (y >= adj_.size() || y == x) throw TopologyError("invalid neighbour of node " + std::to_string(x));
      if (std::count(adj_[x].begin(), adj_[x].end(), y) != 1) {
        throw TopologyError("parallel edges at node " + std::to_string(x));
      }
      if (std::count(adj_[y].begin(), adj_[y].end(), x) != 1) {
        throw TopologyError("asymmetric adjacency between " + std::to_string(x) + " and " +
                            std::to_string(y));
      }
    }
    degree_sum += adj_[x].size();
  }
  if (degree_sum / 2 != adj_.size() - 1) throw TopologyError("edge count does not match a tree");

  std::vector<bool> seen(adj_.size(), false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t reached = 0;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    ++reached;
    for (NodeId y : adj_[x]) {
      if (!seen[y]) {
        seen[y] = true;
        stack.push_back(y);
      }
    }
  }
  if (reached != adj_.size()) throw TopologyError("topology is not connected");
  if (!has_edge(root_)) throw TopologyError("root edge is not an edge of the tree");
  if (age_.size() != adj_.size() - 1) throw TopologyError("edge-age table out of sync with edges");
  for (const auto& [e, age] : age_) {
    if (!has_edge(e)) throw TopologyError("edge-age table refers to a missing edge");
  }
}

RootLegs root_legs(const TreeTopology& t) {
  const Edge r = t.root_edge();
  RootLegs legs{r.a, r.b, 0, 0, 0, 0};
  auto others = [&](NodeId x, NodeId skip, NodeId& first, NodeId& second) {
    int k = 0;
    for (NodeId y : t.neighbors(x)) {
      if (y == skip) continue;
      (k++ == 0 ? first : second) = y;
    }
  };
  if (!t.is_leaf(r.a)) others(r.a, r.b, legs.a, legs.b);
  if (!t.is_leaf(r.b)) others(r.b, r.a, legs.c, legs.d);
  return legs;
}

TreeTopology make_tensor_train(std::size_t n) {
  if (n < 3) throw std::invalid_argument("tensor train needs n >= 3");
  std::vector<std::vector<NodeId>> adj(2 * n - 2);
  const std::size_t m = n - 2;  // internal nodes
  auto internal = [n](std::size_t k) { return static_cast<NodeId>(n + k); };
  for (std::size_t k = 0; k < m; ++k) {
    const NodeId self = internal(k);
    const NodeId left = k == 0 ? NodeId{0} : internal(k - 1);
    const NodeId right = k + 1 == m ? static_cast<NodeId>(n - 1) : internal(k + 1);
    adj[self] = {left, static_cast<NodeId>(k + 1), right};
  }
  adj[0] = {internal(0)};
  for (std::size_t k = 0; k < m; ++k) adj[k + 1] = {internal(k)};
  adj[n - 1] = {internal(m - 1)};

  Edge root = m == 1 ? Edge::of(0, internal(0))
                     : Edge::of(internal((m - 2) / 2), internal((m - 2) / 2 + 1));
  return TreeTopology(n, std::move(adj), root);
}

TreeTopology make_balanced_tree(std::size_t n) {
  if (n < 3) throw std::invalid_argument("balanced tree needs n >= 3");
  std::vector<std::vector<NodeId>> adj(2 * n - 2);
  NodeId next = static_cast<NodeId>(n);

  std::function<NodeId(std::size_t, std::size_t)> build = [&](std::size_t lo, std::size_t hi) -> NodeId {
    if (hi - lo == 1) return static_cast<NodeId>(lo);
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    const NodeId left = build(lo, mid);
    const NodeId right = build(mid, hi);
    const NodeId self = next++;
    adj[self] = {left, right};
    adj[left].push_back(self);
    adj[right].push_back(self);
    return self;
  };

  const std::size_t mid = (n + 1) / 2;
  const NodeId left = build(0, mid);
  const NodeId right = build(mid, n);
  adj[left].push_back(right);
  adj[right].push_back(left);
  return TreeTopology(n, std::move(adj), Edge::of(left, right));
}

TreeTopology make_random_tree(std::size_t n, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("random tree needs n >= 3");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<NodeId>> adj(2 * n - 2);
  std::vector<NodeId> pool(n);
  std::iota(pool.begin(), pool.end(), NodeId{0});
  NodeId next = static_cast<NodeId>(n);

  auto take = [&](std::size_t idx) {
    NodeId x = pool[idx];
    pool[idx] = pool.back();
    pool.pop_back();
    return x;
  };

  while (pool.size() > 2) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    const NodeId x = take(pick(rng));
    std::uniform_int_distribution<std::size_t> pick2(0, pool.size() - 1);
    const NodeId y = take(pick2(rng));
    const NodeId self = next++;
    adj[self] = {x, y};
    adj[x].push_back(self);
    adj[y].push_back(self);
    pool.push_back(self);
  }
  // The last merge would create a degree-2 node; join the two trees directly.
  adj[pool[0]].push_back(pool[1]);
  adj[pool[1]].push_back(pool[0]);
  return TreeTopology(n, std::move(adj), Edge::of(pool[0], pool[1]));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> bipartition(const TreeTopology& t,
                                                                          Edge e) {
  if (!t.has_edge(e)) throw TopologyError("bipartition of an unknown edge");
  std::vector<bool> side(t.num_nodes(), false);
  std::vector<NodeId> stack{e.a};
  side[e.a] = true;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    for (NodeId y : t.neighbors(x)) {
      if (side[y] || (x == e.a && y == e.b)) continue;
      side[y] = true;
      stack.push_back(y);
    }
  }
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < t.num_variables(); ++i) (side[i] ? out.first : out.second).push_back(i);
  return out;
}

TreeTopology apply_pairing(const TreeTopology& t, Pairing p, std::int64_t iteration) {
  TreeTopology out = t;
  out.regroup(p, iteration);
  return out;
}

std::vector<std::size_t> bfs_distances(const TreeTopology& t, NodeId from) {
  constexpr std::size_t kUnseen = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(t.num_nodes(), kUnseen);
  std::vector<NodeId> queue{from};
  dist[from] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    NodeId x = queue[head];
    for (NodeId y : t.neighbors(x)) {
      if (dist[y] == kUnseen) {
        dist[y] = dist[x] + 1;
        queue.push_back(y);
      }
    }
  }
  return dist;
}

NodeId tree_center(const TreeTopology& t, CenterKind kind) {
  const std::size_t total = t.num_nodes();
  if (kind == CenterKind::MinEccentricity) {
    NodeId best = 0;
    std::size_t best_ecc = std::numeric_limits<std::size_t>::max();
    for (NodeId x = 0; x < total; ++x) {
      const auto d = bfs_distances(t, x);
      const std::size_t ecc = *std::max_element(d.begin(), d.end());
      if (ecc < best_ecc) {
        best_ecc = ecc;
        best = x;
      }
    }
    return best;
  }

  // Subtree sizes with node 0 as the DFS root.
  std::vector<NodeId> parent(total, 0), order;
  std::vector<bool> seen(total, false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    NodeId x = stack.back();
    stack.pop_back();
    order.push_back(x);
    for (NodeId y : t.neighbors(x)) {
      if (!seen[y]) {
        seen[y] = true;
        parent[y] = x;
        stack.push_back(y);
      }
    }
  }
  std::vector<std::size_t> size(total, 1);
  for (std::size_t i = order.size(); i-- > 1;) size[parent[order[i]]] += size[order[i]];

  NodeId best = 0;
  std::size_t best_score = std::numeric_limits<std::size_t>::max();
  for (NodeId x = 0; x < total; ++x) {
    std::size_t largest = total - size[x];
    for (NodeId y : t.neighbors(x)) {
      if (x != 0 && y == parent[x]) continue;
      largest = std::max(largest, size[y]);
    }
    if (largest < best_score) {
      best_score = largest;
      best = x;
    }
  }
  return best;
}

std::vector<std::size_t> center_distance_ranking(const TreeTopology& t, CenterKind kind) {
  const auto dist = bfs_distances(t, tree_center(t, kind));
  std::vector<std::size_t> leaf_dist(dist.begin(), dist.begin() + t.num_variables());
  std::vector<std::size_t> levels = leaf_dist;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<std::size_t> rank(t.num_variables());
  for (std::size_t i = 0; i < rank.size(); ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), leaf_dist[i]) -
                                       levels.begin()) + 1;
  }
  return rank;
}

}  // namespace att
