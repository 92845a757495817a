#include "att/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "att/errors.hpp"
#include "att/messages.hpp"

namespace att {
namespace {

// Relative threshold below which canonicalize drops singular values.
constexpr double kDropTolerance = 1e-14;

std::size_t keep_count(const Eigen::VectorXd& s) {
  if (s.size() == 0 || !(s(0) > 0.0)) throw DegenerateModelError("wave function vanished");
  Eigen::Index r = 1;
  while (r < s.size() && s(r) > kDropTolerance * s(0)) ++r;
  return static_cast<std::size_t>(r);
}

std::vector<std::size_t> slots_except(std::size_t skip) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < 3; ++i) {
    if (i != skip) out.push_back(i);
  }
  return out;
}

// Internal nodes ordered outward from the root region; centre node(s) first.
std::vector<NodeId> outward_order(const TreeTopology& t) {
  const Edge r = t.root_edge();
  std::vector<NodeId> order;
  std::vector<bool> seen(t.num_nodes(), false);
  seen[r.a] = seen[r.b] = true;
  if (!t.is_leaf(r.b)) order.push_back(r.b);
  if (!t.is_leaf(r.a)) order.push_back(r.a);
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (NodeId y : t.neighbors(order[head])) {
      if (seen[y]) continue;
      seen[y] = true;
      if (!t.is_leaf(y)) order.push_back(y);
    }
  }
  return order;
}

// Splits T_x = U S W^T across slot f and leaves U in place. Returns S and W.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> split_at(DenseTensor& tx, std::size_t f, bool drop) {
  std::vector<std::size_t> perm = slots_except(f);
  perm.push_back(f);
  const Eigen::MatrixXd mat = matricize(tx, perm, 2);
  linalg::Svd svd = linalg::truncated_svd(mat, std::min(mat.rows(), mat.cols()));
  const std::size_t r = drop ? keep_count(svd.s) : static_cast<std::size_t>(svd.s.size());
  if (!drop && !(svd.s(0) > 0.0)) throw DegenerateModelError("wave function vanished");
  const auto ri = static_cast<Eigen::Index>(r);
  tx = tensorize(svd.u.leftCols(ri), {tx.extent(perm[0]), tx.extent(perm[1]), r}, perm);
  return {svd.s.head(ri), svd.v.leftCols(ri)};
}

// Singular values of the cut between a leaf leg and the other two legs.
std::vector<double> leaf_cut_spectrum(const DenseTensor& tu, std::size_t leaf_slot) {
  std::vector<std::size_t> perm{leaf_slot};
  for (std::size_t s : slots_except(leaf_slot)) perm.push_back(s);
  const Eigen::MatrixXd mat = matricize(tu, perm, 1);
  linalg::Svd svd = linalg::truncated_svd(mat, std::min(mat.rows(), mat.cols()));
  const std::size_t r = keep_count(svd.s);
  return {svd.s.data(), svd.s.data() + r};
}

NodeId center_of_leaf_root(const TreeTopology& t) {
  const Edge r = t.root_edge();
  return t.is_leaf(r.a) ? r.b : r.a;
}

// Amplitudes of every row of the cache's batch, as mantissa and exponent.
std::pair<Eigen::VectorXd, Eigen::VectorXd> root_amplitudes(const TensorTreeModel& m, MessageCache& cache) {
  const TreeTopology& t = m.topology();
  const Edge r = t.root_edge();
  if (m.leaf_rooted()) {
    const NodeId u = center_of_leaf_root(t);
    const NodeId leaf = r.other(u);
    const Eigen::MatrixXd& msg = cache.toward(u, leaf);
    Eigen::VectorXd psi(msg.rows());
    for (Eigen::Index i = 0; i < msg.rows(); ++i) {
      psi(i) = msg(i, cache.batch().at(static_cast<std::size_t>(i), leaf));
    }
    return {psi, cache.toward_exponent(u, leaf)};
  }
  const Eigen::MatrixXd alpha = cache.toward(r.a, r.b);
  const Eigen::VectorXd ea = cache.toward_exponent(r.a, r.b);
  const Eigen::MatrixXd& beta = cache.toward(r.b, r.a);
  const Eigen::VectorXd eb = cache.toward_exponent(r.b, r.a);
  const Eigen::Map<const Eigen::VectorXd> lambda(m.lambda().data(),
                                                 static_cast<Eigen::Index>(m.lambda().size()));
  return {(alpha.array() * beta.array()).matrix() * lambda, ea + eb};
}

}  // namespace

TensorTreeModel::TensorTreeModel(TreeTopology topology, std::vector<DenseTensor> tensors,
                                 std::vector<double> lambda, std::size_t chi)
    : topology_(std::move(topology)), tensors_(std::move(tensors)), lambda_(std::move(lambda)), chi_(chi) {
  validate();
}

std::size_t TensorTreeModel::bond_dim(Edge e) const {
  if (!topology_.has_edge(e)) throw TopologyError("bond_dim of an unknown edge");
  if (topology_.is_leaf(e.a) || topology_.is_leaf(e.b)) return 2;
  return tensors_[e.a].extent(topology_.slot_of(e.a, e.b));
}

bool TensorTreeModel::leaf_rooted() const {
  const Edge r = topology_.root_edge();
  return topology_.is_leaf(r.a) || topology_.is_leaf(r.b);
}

double TensorTreeModel::partition_function() const {
  double z = 0.0;
  for (double l : lambda_) z += l * l;
  return z;
}

void TensorTreeModel::validate() const {
  topology_.validate();
  if (chi_ < 1) throw ShapeError("chi must be positive");
  if (tensors_.size() != topology_.num_nodes()) throw ShapeError("one tensor slot per node expected");
  for (NodeId x = 0; x < topology_.num_nodes(); ++x) {
    const DenseTensor& tx = tensors_[x];
    if (topology_.is_leaf(x)) {
      if (tx.rank() != 0) throw ShapeError("leaf " + std::to_string(x) + " must not carry a tensor");
      continue;
    }
    if (tx.rank() != 3) throw ShapeError("tensor at node " + std::to_string(x) + " must have 3 legs");
    for (std::size_t s = 0; s < 3; ++s) {
      const NodeId y = topology_.neighbor(x, s);
      std::size_t want = 2;
      if (!topology_.is_leaf(y)) {
        if (tensors_[y].rank() != 3) throw ShapeError("tensor at node " + std::to_string(y) + " must have 3 legs");
        want = tensors_[y].extent(topology_.slot_of(y, x));
      }
      if (tx.extent(s) != want) {
        throw ShapeError("bond between nodes " + std::to_string(x) + " and " + std::to_string(y) +
                         " has inconsistent extents");
      }
      if (!topology_.is_leaf(y) && tx.extent(s) > chi_) {
        throw ShapeError("bond extent exceeds chi at node " + std::to_string(x));
      }
    }
  }
  const Edge r = topology_.root_edge();
  const std::size_t want = leaf_rooted() ? 0 : bond_dim(r);
  if (lambda_.empty() || (want != 0 && lambda_.size() != want) || (want == 0 && lambda_.size() > 2)) {
    throw ShapeError("central weight length does not match the root bond");
  }
  for (double l : lambda_) {
    if (!std::isfinite(l)) throw NumericalError("central weight is not finite");
  }
}

std::vector<int> root_facing_slots(const TreeTopology& t) {
  std::vector<int> facing(t.num_nodes(), -1);
  const Edge r = t.root_edge();
  if (!t.is_leaf(r.a) && !t.is_leaf(r.b)) {
    facing[r.a] = static_cast<int>(t.slot_of(r.a, r.b));
    facing[r.b] = static_cast<int>(t.slot_of(r.b, r.a));
  }
  for (NodeId x : outward_order(t)) {
    for (NodeId y : t.neighbors(x)) {
      if (t.is_leaf(y) || Edge::of(x, y) == r || facing[y] >= 0) continue;
      if (y == r.a || y == r.b) continue;
      facing[y] = static_cast<int>(t.slot_of(y, x));
    }
  }
  return facing;
}

namespace {

// With keep_scale the overall factor is restored at the end; without it the
// state comes out with an arbitrary positive scale.
void canonicalize_impl(TensorTreeModel& m, Edge root, bool keep_scale) {
  TreeTopology& t = m.topology();
  std::vector<DenseTensor> tensors = m.tensors();
  const Edge old_root = t.root_edge();
  if (t.is_virtual(old_root)) {
    const Eigen::Map<const Eigen::VectorXd> lambda(m.lambda().data(),
                                                   static_cast<Eigen::Index>(m.lambda().size()));
    tensors[old_root.a] = apply_to_axis(tensors[old_root.a], t.slot_of(old_root.a, old_root.b),
                                        Eigen::MatrixXd(lambda.asDiagonal()));
  }
  t.set_root_edge(root);
  const std::vector<int> facing = root_facing_slots(t);
  const std::vector<NodeId> order = outward_order(t);

  long exponent = 0;
  // Leaves-first sweep; each split pushes S W^T one step toward the root.
  // order[0] is handled below: the weight-carrying node, or root.b.
  for (std::size_t i = order.size(); i-- > 1;) {
    const NodeId x = order[i];
    const auto f = static_cast<std::size_t>(facing[x]);
    auto [s, w] = split_at(tensors[x], f, true);
    // Power-of-two rescaling is exact and keeps long sweeps in range.
    int e = 0;
    std::frexp(s(0), &e);
    s *= std::ldexp(1.0, -e);
    exponent += e;
    const NodeId p = t.neighbor(x, f);
    const Eigen::MatrixXd carry = s.asDiagonal() * w.transpose();
    tensors[p] = apply_to_axis(tensors[p], t.slot_of(p, x), carry);
  }

  std::vector<double> lambda;
  if (m.leaf_rooted()) {
    const NodeId u = center_of_leaf_root(t);
    lambda = leaf_cut_spectrum(tensors[u], t.slot_of(u, root.other(u)));
  } else {
    const NodeId u = root.a, v = root.b;
    std::vector<std::size_t> perm = slots_except(t.slot_of(v, u));
    perm.push_back(t.slot_of(v, u));
    const Eigen::MatrixXd mat = matricize(tensors[v], perm, 2);
    linalg::Svd svd = linalg::truncated_svd(mat, std::min(mat.rows(), mat.cols()));
    const std::size_t r = keep_count(svd.s);
    const auto ri = static_cast<Eigen::Index>(r);
    tensors[v] = tensorize(svd.u.leftCols(ri), {tensors[v].extent(perm[0]), tensors[v].extent(perm[1]), r}, perm);
    tensors[u] = apply_to_axis(tensors[u], t.slot_of(u, v), svd.v.leftCols(ri).transpose());
    lambda.assign(svd.s.data(), svd.s.data() + r);
  }
  if (keep_scale && exponent != 0) {
    const auto scale_by = [&](double v) {
      const double out = std::ldexp(v, static_cast<int>(std::clamp<long>(exponent, -100000, 100000)));
      if (v != 0.0 && (out == 0.0 || !std::isfinite(out))) {
        throw NumericalError("state norm is outside the double range");
      }
      return out;
    };
    for (double& l : lambda) l = scale_by(l);
    if (m.leaf_rooted()) {
      DenseTensor& tu = tensors[center_of_leaf_root(t)];
      for (double& v : tu.data()) v = scale_by(v);
    }
  }
  m = TensorTreeModel(t, std::move(tensors), std::move(lambda), m.chi());
}

}  // namespace

void canonicalize_in_place(TensorTreeModel& m, Edge root) { canonicalize_impl(m, root, true); }

TensorTreeModel canonicalize(const TensorTreeModel& m, Edge root) {
  TensorTreeModel out = m;
  canonicalize_in_place(out, root);
  return out;
}

void move_root_in_place(TensorTreeModel& m, Edge target) {
  TreeTopology& t = m.topology();
  const Edge root = t.root_edge();
  if (target == root) return;
  if (!t.has_edge(target)) throw TopologyError("move_root target is not an edge");
  NodeId shared;
  if (target.touches(root.a)) {
    shared = root.a;
  } else if (target.touches(root.b)) {
    shared = root.b;
  } else {
    throw TopologyError("move_root target does not touch the current root edge");
  }

  std::vector<DenseTensor> tensors = m.tensors();
  if (!m.leaf_rooted()) {
    const NodeId other = root.other(shared);
    const Eigen::Map<const Eigen::VectorXd> lambda(m.lambda().data(),
                                                   static_cast<Eigen::Index>(m.lambda().size()));
    tensors[shared] = apply_to_axis(tensors[shared], t.slot_of(shared, other),
                                    Eigen::MatrixXd(lambda.asDiagonal()));
  }
  t.set_root_edge(target);
  const NodeId w = target.other(shared);
  std::vector<double> lambda;
  if (t.is_leaf(w)) {
    lambda = leaf_cut_spectrum(tensors[shared], t.slot_of(shared, w));
  } else {
    auto [s, wm] = split_at(tensors[shared], t.slot_of(shared, w), false);
    tensors[w] = apply_to_axis(tensors[w], t.slot_of(w, shared), wm.transpose());
    lambda.assign(s.data(), s.data() + s.size());
  }
  m = TensorTreeModel(t, std::move(tensors), std::move(lambda), m.chi());
}

TensorTreeModel move_root(const TensorTreeModel& m, Edge target) {
  TensorTreeModel out = m;
  move_root_in_place(out, target);
  return out;
}

void normalize(TensorTreeModel& m) {
  const double z = std::sqrt(m.partition_function());
  if (!(z > 0.0) || !std::isfinite(z)) throw DegenerateModelError("cannot normalize a vanishing state");
  std::vector<double> lambda(m.lambda().begin(), m.lambda().end());
  for (double& l : lambda) l /= z;
  m.set_lambda(std::move(lambda));
  if (m.leaf_rooted()) {
    const NodeId u = center_of_leaf_root(m.topology());
    DenseTensor tu = m.tensor(u);
    tu *= 1.0 / z;
    m.set_tensor(u, std::move(tu));
  }
}

double canonical_error(const TensorTreeModel& m) {
  const TreeTopology& t = m.topology();
  const std::vector<int> facing = root_facing_slots(t);
  double err = 0.0;
  for (NodeId x = static_cast<NodeId>(t.num_variables()); x < t.num_nodes(); ++x) {
    if (facing[x] < 0) continue;
    std::vector<std::size_t> perm = slots_except(static_cast<std::size_t>(facing[x]));
    perm.push_back(static_cast<std::size_t>(facing[x]));
    const Eigen::MatrixXd mat = matricize(m.tensor(x), perm, 2);
    const Eigen::MatrixXd gram = mat.transpose() * mat;
    err = std::max(err, (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff());
  }
  const auto lambda = m.lambda();
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!(lambda[k] > 0.0) || (k > 0 && lambda[k] > lambda[k - 1])) err = std::max(err, 1.0);
  }
  if (m.leaf_rooted()) {
    const double tn = m.tensor(center_of_leaf_root(t)).norm();
    const double z = m.partition_function();
    err = std::max(err, std::abs(tn * tn - z) / std::max(z, std::numeric_limits<double>::min()));
  }
  return err;
}

TensorTreeModel init_model(const TreeTopology& topology, std::size_t chi, std::uint64_t seed) {
  if (chi < 2) throw std::invalid_argument("chi must be at least 2");
  TreeTopology t = topology;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::map<Edge, std::size_t> extent;
  for (Edge e : t.edges()) {
    if (!t.is_virtual(e)) {
      extent[e] = 2;
      continue;
    }
    const auto [a, b] = bipartition(t, e);
    const std::size_t small = std::min(a.size(), b.size());
    extent[e] = small >= 62 ? chi : std::min<std::size_t>(chi, std::size_t{1} << small);
  }

  std::vector<DenseTensor> tensors(t.num_nodes());
  for (NodeId x = static_cast<NodeId>(t.num_variables()); x < t.num_nodes(); ++x) {
    std::vector<std::size_t> shape;
    for (NodeId y : t.neighbors(x)) shape.push_back(extent.at(Edge::of(x, y)));
    DenseTensor tx(shape);
    for (double& v : tx.data()) v = gauss(rng);
    tensors[x] = std::move(tx);
  }
  const Edge r = t.root_edge();
  std::vector<double> lambda(t.is_virtual(r) ? extent.at(r) : 1, 1.0);
  TensorTreeModel m(std::move(t), std::move(tensors), std::move(lambda), chi);
  canonicalize_impl(m, r, false);
  normalize(m);
  return m;
}

ScaledAmplitudes scaled_amplitudes(const TensorTreeModel& m, const DataBatch& batch, std::size_t threads) {
  if (batch.num_variables() != m.num_variables()) {
    throw FormatError("data has " + std::to_string(batch.num_variables()) + " variables, model has " +
                      std::to_string(m.num_variables()));
  }
  const std::size_t rows = batch.num_samples();
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (rows + kChunk - 1) / kChunk;
  ScaledAmplitudes out{std::vector<double>(rows), std::vector<double>(rows)};

  auto run = [&](std::size_t c) {
    std::vector<std::size_t> idx;
    for (std::size_t r = c * kChunk; r < std::min(rows, (c + 1) * kChunk); ++r) idx.push_back(r);
    const DataBatch sub = chunks == 1 ? batch : batch.select(idx);
    MessageCache cache(m, sub);
    const auto [v, e] = root_amplitudes(m, cache);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.mantissa[idx[i]] = v(static_cast<Eigen::Index>(i));
      out.exponent[idx[i]] = e(static_cast<Eigen::Index>(i));
    }
  };

  threads = std::max<std::size_t>(1, std::min(threads, chunks));
  if (threads == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run(c);
    return out;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < chunks; c += threads) run(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<double> amplitudes(const TensorTreeModel& m, const DataBatch& batch, std::size_t threads) {
  const ScaledAmplitudes s = scaled_amplitudes(m, batch, threads);
  std::vector<double> psi(s.mantissa.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    psi[i] = std::ldexp(s.mantissa[i], static_cast<int>(s.exponent[i]));
  }
  return psi;
}

double amplitude(const TensorTreeModel& m, std::span<const std::uint8_t> x) {
  if (x.size() != m.num_variables()) {
    throw ShapeError("configuration has " + std::to_string(x.size()) + " entries, model has " +
                     std::to_string(m.num_variables()) + " variables");
  }
  const DataBatch one(x.size(), std::vector<std::uint8_t>(x.begin(), x.end()));
  return amplitudes(m, one).front();
}

double log_prob(const TensorTreeModel& m, std::span<const std::uint8_t> x) {
  if (x.size() != m.num_variables()) {
    throw ShapeError("configuration has " + std::to_string(x.size()) + " entries, model has " +
                     std::to_string(m.num_variables()) + " variables");
  }
  const DataBatch one(x.size(), std::vector<std::uint8_t>(x.begin(), x.end()));
  const ScaledAmplitudes s = scaled_amplitudes(m, one);
  const double psi = s.mantissa.front();
  if (psi == 0.0) return -std::numeric_limits<double>::infinity();
  return 2.0 * (std::log(std::abs(psi)) + s.exponent.front() * std::numbers::ln2) -
         std::log(m.partition_function());
}

double nll(const TensorTreeModel& m, const DataBatch& batch, ZeroPolicy policy, std::size_t threads) {
  const ScaledAmplitudes s = scaled_amplitudes(m, batch, threads);
  const double log_z = std::log(m.partition_function());
  double total = 0.0;
  for (std::size_t i = 0; i < s.mantissa.size(); ++i) {
    double p2 = s.mantissa[i] * s.mantissa[i];
    if (p2 == 0.0 || (policy == ZeroPolicy::Clamp && p2 < kMinProbability)) {
      if (policy == ZeroPolicy::Strict) return std::numeric_limits<double>::infinity();
      p2 = kMinProbability;
    }
    total -= std::log(p2) + 2.0 * s.exponent[i] * std::numbers::ln2 - log_z;
  }
  return total / static_cast<double>(s.mantissa.size());
}

DenseTensor root_working_tensor(const TensorTreeModel& m) {
  const TreeTopology& t = m.topology();
  if (m.leaf_rooted()) return m.tensor(center_of_leaf_root(t));
  const RootLegs legs = root_legs(t);
  const std::size_t pu[3] = {t.slot_of(legs.u, legs.a), t.slot_of(legs.u, legs.b), t.slot_of(legs.u, legs.v)};
  const std::size_t pv[3] = {t.slot_of(legs.v, legs.c), t.slot_of(legs.v, legs.d), t.slot_of(legs.v, legs.u)};
  const Eigen::MatrixXd tu = matricize(m.tensor(legs.u), pu, 2);
  const Eigen::MatrixXd tv = matricize(m.tensor(legs.v), pv, 2);
  const Eigen::Map<const Eigen::VectorXd> lambda(m.lambda().data(),
                                                 static_cast<Eigen::Index>(m.lambda().size()));
  const Eigen::MatrixXd theta = tu * lambda.asDiagonal() * tv.transpose();
  const DenseTensor& u = m.tensor(legs.u);
  const DenseTensor& v = m.tensor(legs.v);
  const std::size_t id[4] = {0, 1, 2, 3};
  return tensorize(theta, {u.extent(pu[0]), u.extent(pu[1]), v.extent(pv[0]), v.extent(pv[1])}, id);
}

DenseTensor grad_root_tensor(const TensorTreeModel& m, const DataBatch& batch) {
  const TreeTopology& t = m.topology();
  MessageCache cache(m, batch);
  const DenseTensor theta = root_working_tensor(m);
  Eigen::MatrixXd env;  // batch x |theta|, row-major flattening of the legs
  if (m.leaf_rooted()) {
    const NodeId u = center_of_leaf_root(t);
    const Eigen::MatrixXd m0 = cache.toward(t.neighbor(u, 0), u);
    const Eigen::MatrixXd m1 = cache.toward(t.neighbor(u, 1), u);
    const Eigen::MatrixXd m2 = cache.toward(t.neighbor(u, 2), u);
    env = row_kron(row_kron(m0, m1), m2);
  } else {
    const RootLegs legs = root_legs(t);
    const Eigen::MatrixXd ma = cache.toward(legs.a, legs.u);
    const Eigen::MatrixXd mb = cache.toward(legs.b, legs.u);
    const Eigen::MatrixXd mc = cache.toward(legs.c, legs.v);
    const Eigen::MatrixXd md = cache.toward(legs.d, legs.v);
    env = row_kron(row_kron(row_kron(ma, mb), mc), md);
  }
  const Eigen::Map<const Eigen::VectorXd> vec(theta.data().data(), static_cast<Eigen::Index>(theta.size()));
  const Eigen::VectorXd psi = env * vec;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (psi(i) == 0.0) throw ZeroAmplitudeError(static_cast<std::size_t>(i), "zero amplitude in gradient");
  }
  const double norm2 = vec.squaredNorm();
  const double rows = static_cast<double>(psi.size());
  const Eigen::VectorXd g = (2.0 / norm2) * vec - (2.0 / rows) * (env.transpose() * psi.cwiseInverse());
  DenseTensor out(theta.shape());
  std::copy(g.data(), g.data() + g.size(), out.data().begin());
  return out;
}

std::vector<double> exact_distribution(const TensorTreeModel& m) {
  const std::size_t n = m.num_variables();
  if (n > kMaxEnumerationVariables) {
    throw std::invalid_argument("enumeration limited to " + std::to_string(kMaxEnumerationVariables) +
                                " variables");
  }
  const std::size_t total = std::size_t{1} << n;
  std::vector<std::uint8_t> values(total * n);
  for (std::size_t idx = 0; idx < total; ++idx) {
    for (std::size_t i = 0; i < n; ++i) values[idx * n + i] = static_cast<std::uint8_t>((idx >> i) & 1U);
  }
  const DataBatch all(n, std::move(values));
  std::vector<double> p = amplitudes(m, all);
  const double z = m.partition_function();
  for (double& v : p) v = v * v / z;
  return p;
}

}  // namespace att
