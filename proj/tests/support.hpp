#pragma once

// Independent reference computations used by the unit tests and the
// acceptance runner. Nothing here goes through MessageCache, canonical
// form or the library's SVD wrappers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "att/data_batch.hpp"
#include "att/model.hpp"
#include "att/topology.hpp"

namespace att::testing {

inline std::vector<std::uint8_t> bits_of(std::size_t idx, std::size_t n) {
  std::vector<std::uint8_t> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((idx >> i) & 1U);
  return x;
}

inline std::size_t index_of(std::span<const std::uint8_t> x) {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) idx |= std::size_t{x[i]} << i;
  return idx;
}

// Sum over every assignment of the virtual bond indices of the product of
// node tensors, with leaf legs clamped to x and lambda on a virtual root.
inline double naive_amplitude(const TensorTreeModel& m, std::span<const std::uint8_t> x) {
  const TreeTopology& t = m.topology();
  const std::size_t n = t.num_variables();
  std::vector<Edge> bonds = t.virtual_bonds();
  std::map<Edge, std::size_t> bond_index;
  std::vector<std::size_t> extent;
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    bond_index[bonds[i]] = i;
    extent.push_back(m.bond_dim(bonds[i]));
  }
  const Edge root = t.root_edge();
  const bool virtual_root = t.is_virtual(root);
  std::vector<std::size_t> assign(bonds.size(), 0);
  double total = 0.0;
  while (true) {
    double prod = 1.0;
    for (NodeId node = static_cast<NodeId>(n); node < t.num_nodes() && prod != 0.0; ++node) {
      std::size_t idx[3];
      for (std::size_t s = 0; s < 3; ++s) {
        const NodeId y = t.neighbor(node, s);
        idx[s] = t.is_leaf(y) ? x[y] : assign[bond_index.at(Edge::of(node, y))];
      }
      prod *= m.tensor(node).at(idx);
    }
    if (virtual_root) prod *= m.lambda()[assign[bond_index.at(root)]];
    total += prod;
    std::size_t k = 0;
    while (k < assign.size() && ++assign[k] == extent[k]) assign[k++] = 0;
    if (k == assign.size()) break;
  }
  return total;
}

// Full state vector by dense bottom-up contraction toward the root edge.
// Entry index_of(x) holds psi(x); exact but exponential in n.
namespace detail {
struct Block {
  std::vector<NodeId> leaves;  // row index bit k is the value of leaves[k]
  Eigen::MatrixXd m;           // rows: leaf assignments, cols: bond to parent
};

inline Block dense_block(const TensorTreeModel& m, NodeId node, NodeId parent) {
  const TreeTopology& t = m.topology();
  if (t.is_leaf(node)) return Block{{node}, Eigen::MatrixXd::Identity(2, 2)};
  std::vector<std::size_t> child_slots;
  std::size_t up = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    if (t.neighbor(node, s) == parent) {
      up = s;
    } else {
      child_slots.push_back(s);
    }
  }
  const Block a = dense_block(m, t.neighbor(node, child_slots[0]), node);
  const Block b = dense_block(m, t.neighbor(node, child_slots[1]), node);
  const DenseTensor& x = m.tensor(node);
  Block out;
  out.leaves = a.leaves;
  out.leaves.insert(out.leaves.end(), b.leaves.begin(), b.leaves.end());
  out.m = Eigen::MatrixXd::Zero(a.m.rows() * b.m.rows(), static_cast<Eigen::Index>(x.extent(up)));
  std::size_t idx[3];
  for (Eigen::Index ra = 0; ra < a.m.rows(); ++ra) {
    for (Eigen::Index rb = 0; rb < b.m.rows(); ++rb) {
      const Eigen::Index row = ra + rb * a.m.rows();
      for (Eigen::Index k = 0; k < out.m.cols(); ++k) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < a.m.cols(); ++i) {
          for (Eigen::Index j = 0; j < b.m.cols(); ++j) {
            idx[child_slots[0]] = static_cast<std::size_t>(i);
            idx[child_slots[1]] = static_cast<std::size_t>(j);
            idx[up] = static_cast<std::size_t>(k);
            v += a.m(ra, i) * b.m(rb, j) * x.at(idx);
          }
        }
        out.m(row, k) = v;
      }
    }
  }
  return out;
}
}  // namespace detail

inline std::vector<double> dense_state(const TensorTreeModel& m) {
  const TreeTopology& t = m.topology();
  const Edge root = t.root_edge();
  const detail::Block a = detail::dense_block(m, root.a, root.b);
  const detail::Block b = detail::dense_block(m, root.b, root.a);
  Eigen::MatrixXd right = b.m;
  if (t.is_virtual(root)) {
    for (Eigen::Index k = 0; k < right.cols(); ++k) right.col(k) *= m.lambda()[static_cast<std::size_t>(k)];
  }
  const Eigen::MatrixXd joint = a.m * right.transpose();
  std::vector<double> psi(std::size_t{1} << t.num_variables(), 0.0);
  for (Eigen::Index ra = 0; ra < joint.rows(); ++ra) {
    for (Eigen::Index rb = 0; rb < joint.cols(); ++rb) {
      std::size_t index = 0;
      for (std::size_t k = 0; k < a.leaves.size(); ++k) index |= ((static_cast<std::size_t>(ra) >> k) & 1) << a.leaves[k];
      for (std::size_t k = 0; k < b.leaves.size(); ++k) index |= ((static_cast<std::size_t>(rb) >> k) & 1) << b.leaves[k];
      psi[index] = joint(ra, rb);
    }
  }
  return psi;
}

// p(x) normalised by brute-force summation of psi^2.
inline std::vector<double> naive_distribution(const TensorTreeModel& m) {
  const std::size_t n = m.num_variables();
  std::vector<double> p(std::size_t{1} << n);
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = naive_amplitude(m, bits_of(i, n));
    p[i] = a * a;
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

inline double naive_norm2(const TensorTreeModel& m) {
  const std::size_t n = m.num_variables();
  double z = 0.0;
  for (std::size_t i = 0; i < (std::size_t{1} << n); ++i) {
    const double a = naive_amplitude(m, bits_of(i, n));
    z += a * a;
  }
  return z;
}

// Mutual information between the variable sets `side` and its complement.
inline double mi_from_distribution(const std::vector<double>& p, std::size_t n, const std::vector<std::size_t>& side) {
  std::size_t mask = 0;
  for (std::size_t v : side) mask |= std::size_t{1} << v;
  std::map<std::size_t, double> pa, pb;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pa[i & mask] += p[i];
    pb[i & ~mask & ((std::size_t{1} << n) - 1)] += p[i];
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    mi += p[i] * std::log(p[i] / (pa[i & mask] * pb[i & ~mask & ((std::size_t{1} << n) - 1)]));
  }
  return mi;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

// Connected components of the tree with edge `cut` removed, by labelling.
inline std::vector<std::size_t> leaves_beside(const TreeTopology& t, Edge cut, NodeId start) {
  std::vector<bool> seen(t.num_nodes(), false);
  std::vector<NodeId> stack{start};
  seen[start] = true;
  std::vector<std::size_t> leaves;
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    if (t.is_leaf(x)) leaves.push_back(x);
    for (NodeId y : t.neighbors(x)) {
      if (seen[y] || Edge::of(x, y) == cut) continue;
      seen[y] = true;
      stack.push_back(y);
    }
  }
  std::sort(leaves.begin(), leaves.end());
  return leaves;
}

// Structural checks written against the raw adjacency lists.
inline bool topology_invariants_hold(const TreeTopology& t) {
  const std::size_t n = t.num_variables();
  if (t.num_nodes() != 2 * n - 2) return false;
  std::size_t degree_sum = 0;
  for (NodeId x = 0; x < t.num_nodes(); ++x) {
    const auto nb = t.neighbors(x);
    if (nb.size() != (t.is_leaf(x) ? 1u : 3u)) return false;
    for (NodeId y : nb) {
      if (y >= t.num_nodes() || y == x) return false;
      const auto back = t.neighbors(y);
      if (std::count(back.begin(), back.end(), x) != 1) return false;
    }
    degree_sum += nb.size();
  }
  if (degree_sum / 2 != 2 * n - 3) return false;
  std::vector<bool> seen(t.num_nodes(), false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const NodeId x = stack.back();
    stack.pop_back();
    for (NodeId y : t.neighbors(x)) {
      if (!seen[y]) {
        seen[y] = true;
        ++count;
        stack.push_back(y);
      }
    }
  }
  if (count != t.num_nodes()) return false;
  return t.has_edge(t.root_edge());
}

// Largest |A^T A - I| over every non-root tensor viewed as a map from its
// two outward legs onto its root-facing leg.
inline double isometry_error(const TensorTreeModel& m) {
  const std::vector<int> facing = root_facing_slots(m.topology());
  double worst = 0.0;
  for (NodeId x = static_cast<NodeId>(m.num_variables()); x < m.topology().num_nodes(); ++x) {
    if (facing[x] < 0) continue;
    const auto f = static_cast<std::size_t>(facing[x]);
    std::vector<std::size_t> perm;
    for (std::size_t s = 0; s < 3; ++s) {
      if (s != f) perm.push_back(s);
    }
    perm.push_back(f);
    const Eigen::MatrixXd a = matricize(m.tensor(x), perm, 2);
    const Eigen::MatrixXd gram = a.transpose() * a;
    worst = std::max(worst, (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff());
  }
  return worst;
}

// Copy of m with the root working tensor replaced by theta. For a virtual
// root the two root tensors are rebuilt as u(a, b, k) = delta and
// v(c, d, k) = theta(k, c, d), with k running over (a, b) and unit lambda.
inline TensorTreeModel substitute_root(const TensorTreeModel& m, const DenseTensor& theta) {
  const TreeTopology& t = m.topology();
  std::vector<DenseTensor> tensors = m.tensors();
  const Edge root = t.root_edge();
  if (!t.is_virtual(root)) {
    const NodeId u = t.is_leaf(root.a) ? root.b : root.a;
    tensors[u] = theta;
    return TensorTreeModel(t, tensors, {1.0}, 1u << 20);
  }
  const RootLegs legs = root_legs(t);
  const std::size_t da = theta.extent(0), db = theta.extent(1), dc = theta.extent(2), dd = theta.extent(3);
  const std::size_t k = da * db;
  auto place = [&](NodeId node, NodeId first, NodeId second, const DenseTensor& grouped) {
    std::vector<std::size_t> perm(3);
    for (std::size_t s = 0; s < 3; ++s) {
      const NodeId y = t.neighbor(node, s);
      perm[s] = y == first ? 0 : y == second ? 1 : 2;
    }
    return grouped.permuted(perm);
  };
  DenseTensor gu({da, db, k});
  for (std::size_t a = 0; a < da; ++a)
    for (std::size_t b = 0; b < db; ++b) {
      const std::size_t idx[3] = {a, b, a * db + b};
      gu.at(idx) = 1.0;
    }
  DenseTensor gv({dc, dd, k});
  for (std::size_t a = 0; a < da; ++a)
    for (std::size_t b = 0; b < db; ++b)
      for (std::size_t c = 0; c < dc; ++c)
        for (std::size_t d = 0; d < dd; ++d) {
          const std::size_t it[4] = {a, b, c, d};
          const std::size_t iv[3] = {c, d, a * db + b};
          gv.at(iv) = theta.at(it);
        }
  tensors[legs.u] = place(legs.u, legs.a, legs.b, gu);
  tensors[legs.v] = place(legs.v, legs.c, legs.d, gv);
  return TensorTreeModel(t, tensors, std::vector<double>(k, 1.0), 1u << 20);
}

// Batch NLL of the substituted model with brute-force normalisation.
inline double substituted_nll(const TensorTreeModel& m, const DenseTensor& theta, const DataBatch& batch) {
  const TensorTreeModel s = substitute_root(m, theta);
  const double z = naive_norm2(s);
  double total = 0.0;
  for (std::size_t r = 0; r < batch.num_samples(); ++r) {
    const double a = naive_amplitude(s, batch.row(r));
    total -= std::log(a * a / z);
  }
  return total / static_cast<double>(batch.num_samples());
}

// Central finite differences of substituted_nll around the current root
// working tensor, one component at a time.
inline DenseTensor finite_difference_gradient(const TensorTreeModel& m, const DenseTensor& theta,
                                              const DataBatch& batch, double h = 1e-5) {
  DenseTensor g(theta.shape());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    DenseTensor plus = theta, minus = theta;
    plus[i] += h;
    minus[i] -= h;
    g[i] = (substituted_nll(m, plus, batch) - substituted_nll(m, minus, batch)) / (2.0 * h);
  }
  return g;
}

// Richardson extrapolation of central differences at h, h/2 and h/4; the
// error is O(h^6), which matters when a batch sample sits near a node of psi.
inline DenseTensor extrapolated_gradient(const TensorTreeModel& m, const DenseTensor& theta, const DataBatch& batch,
                                         double h = 1e-5) {
  const DenseTensor d1 = finite_difference_gradient(m, theta, batch, h);
  const DenseTensor d2 = finite_difference_gradient(m, theta, batch, h / 2.0);
  DenseTensor d4 = finite_difference_gradient(m, theta, batch, h / 4.0);
  for (std::size_t i = 0; i < d4.size(); ++i) {
    const double r1 = (4.0 * d2[i] - d1[i]) / 3.0;
    const double r2 = (4.0 * d4[i] - d2[i]) / 3.0;
    d4[i] = (16.0 * r2 - r1) / 15.0;
  }
  return d4;
}

// Raw Gaussian tensors (not canonical) with virtual bond extents chosen by
// `dim` and unit lambda on the root.
template <class DimFn>
TensorTreeModel raw_gaussian_model(const TreeTopology& t, DimFn dim, std::uint64_t seed, std::size_t chi = 64) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<DenseTensor> tensors(t.num_nodes());
  for (NodeId x = static_cast<NodeId>(t.num_variables()); x < t.num_nodes(); ++x) {
    std::vector<std::size_t> shape;
    for (NodeId y : t.neighbors(x)) shape.push_back(t.is_leaf(y) ? 2 : dim(Edge::of(x, y)));
    tensors[x] = DenseTensor(shape);
    for (double& v : tensors[x].data()) v = g(rng);
  }
  const Edge r = t.root_edge();
  const std::size_t lambda_len = t.is_virtual(r) ? dim(r) : 1;
  return TensorTreeModel(t, std::move(tensors), std::vector<double>(lambda_len, 1.0), chi);
}

// Tree from successive merges. Clusters 0..n-1 are the leaves and merge k
// creates cluster n + k from two earlier clusters. After n - 3 merges the
// three remaining clusters meet at node 2n - 3. Root on the last merge.
inline TreeTopology tree_from_merges(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& merges) {
  std::vector<std::vector<NodeId>> adj(2 * n - 2);
  std::vector<bool> open(2 * n - 2, false);
  for (NodeId i = 0; i < n; ++i) open[i] = true;
  for (std::size_t k = 0; k < merges.size(); ++k) {
    const auto id = static_cast<NodeId>(n + k);
    for (NodeId c : {merges[k].first, merges[k].second}) {
      adj[id].push_back(c);
      adj[c].push_back(id);
      open[c] = false;
    }
    open[id] = true;
  }
  const auto last = static_cast<NodeId>(2 * n - 3);
  for (NodeId c = 0; c < last; ++c) {
    if (!open[c]) continue;
    adj[last].push_back(c);
    adj[c].push_back(last);
  }
  return TreeTopology(n, std::move(adj), Edge::of(last - 1, last));
}

// Caterpillar with leaves in the given order.
inline TreeTopology caterpillar(const std::vector<NodeId>& order) {
  const std::size_t n = order.size();
  std::vector<std::pair<NodeId, NodeId>> merges{{order[0], order[1]}};
  for (std::size_t k = 2; k + 2 < n; ++k) merges.emplace_back(static_cast<NodeId>(n + k - 2), order[k]);
  return tree_from_merges(n, merges);
}

}  // namespace att::testing
