#include <doctest.h>

#include <cmath>
#include <random>

#include "att/errors.hpp"
#include "att/model.hpp"
#include "support.hpp"

using namespace att;
using namespace att::testing;

namespace {

TensorTreeModel gaussian_model(const TreeTopology& t, std::size_t bond, std::uint64_t seed) {
  // Raw, non-canonical tensors with unit lambda.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<DenseTensor> tensors(t.num_nodes());
  for (NodeId x = static_cast<NodeId>(t.num_variables()); x < t.num_nodes(); ++x) {
    std::vector<std::size_t> shape;
    for (NodeId y : t.neighbors(x)) shape.push_back(t.is_leaf(y) ? 2 : bond);
    tensors[x] = DenseTensor(shape);
    for (double& v : tensors[x].data()) v = g(rng);
  }
  const std::size_t root_dim = t.is_virtual(t.root_edge()) ? bond : 2;
  return TensorTreeModel(t, std::move(tensors), std::vector<double>(t.is_virtual(t.root_edge()) ? root_dim : 1, 1.0),
                         bond);
}

// Exact superposition of distinct patterns on a tensor train: the bond
// index names the pattern.
TensorTreeModel pattern_model(const std::vector<std::vector<std::uint8_t>>& patterns) {
  const std::size_t n = patterns.front().size();
  const std::size_t k = patterns.size();
  const TreeTopology t = make_tensor_train(n);
  std::vector<DenseTensor> tensors(t.num_nodes());
  const std::size_t m = n - 2;
  for (std::size_t j = 0; j < m; ++j) {
    const NodeId node = static_cast<NodeId>(n + j);
    const bool first = j == 0, last = j + 1 == m;
    DenseTensor tj({first ? 2 : k, 2, last ? 2 : k});
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t idx[3] = {first ? patterns[p][0] : p, patterns[p][j + 1], last ? patterns[p][n - 1] : p};
      tj.at(idx) = 1.0;
    }
    tensors[node] = tj;
  }
  return TensorTreeModel(t, std::move(tensors), std::vector<double>(k, 1.0), k);
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("init_model is normalized and deterministic") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TensorTreeModel m = init_model(make_random_tree(9, seed), 3, seed);
    CHECK(std::abs(m.partition_function() - 1.0) <= 1e-10);
    CHECK(isometry_error(m) <= 1e-8);
    CHECK(init_model(make_random_tree(9, seed), 3, seed) == m);
  }
  CHECK_THROWS_AS(init_model(make_tensor_train(5), 1, 0), std::invalid_argument);
}

TEST_CASE("init_model sums to one by enumeration") {
  const TensorTreeModel m = init_model(make_balanced_tree(8), 4, 3);
  double total = 0.0;
  for (std::size_t i = 0; i < 256; ++i) {
    const double a = naive_amplitude(m, bits_of(i, 8));
    total += a * a;
  }
  CHECK(std::abs(total - 1.0) <= 1e-10);
}

TEST_CASE("bond extents respect chi and the side sizes") {
  const TensorTreeModel m = init_model(make_tensor_train(10), 6, 1);
  const TreeTopology& t = m.topology();
  for (Edge e : t.edges()) {
    const auto [a, b] = bipartition(t, e);
    const std::size_t cap = std::min<std::size_t>(6, std::size_t{1} << std::min(a.size(), b.size()));
    CHECK(m.bond_dim(e) <= cap);
  }
}

TEST_CASE("canonicalize preserves the state") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const TensorTreeModel raw = gaussian_model(make_random_tree(6, seed), 3, seed);
    const double z = naive_norm2(raw);
    const TensorTreeModel c = canonicalize(raw, raw.topology().root_edge());
    CHECK(rel(c.partition_function(), z) <= 1e-8);
    CHECK(isometry_error(c) <= 1e-8);
    CHECK(canonical_error(c) <= 1e-8);
    for (std::size_t i = 0; i < 64; ++i) {
      const auto x = bits_of(i, 6);
      CHECK(rel(amplitude(c, x), naive_amplitude(raw, x)) <= 1e-8);
    }
    for (std::size_t k = 0; k + 1 < c.lambda().size(); ++k) CHECK(c.lambda()[k] >= c.lambda()[k + 1]);
    for (double l : c.lambda()) CHECK(l > 0.0);
  }
}

TEST_CASE("canonicalize is idempotent") {
  const TensorTreeModel m = init_model(make_random_tree(8, 2), 4, 2);
  const TensorTreeModel again = canonicalize(m, m.topology().root_edge());
  for (std::size_t i = 0; i < 256; ++i) {
    const auto x = bits_of(i, 8);
    CHECK(std::abs(amplitude(again, x) - amplitude(m, x)) <= 1e-12);
  }
}

TEST_CASE("canonicalize onto every edge") {
  const TensorTreeModel m = init_model(make_random_tree(7, 4), 3, 4);
  const auto p = naive_distribution(m);
  for (Edge e : m.topology().edges()) {
    const TensorTreeModel c = canonicalize(m, e);
    CHECK(c.topology().root_edge() == e);
    CHECK(isometry_error(c) <= 1e-8);
    CHECK(std::abs(c.partition_function() - 1.0) <= 1e-10);
    const auto q = exact_distribution(c);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(q[i] - p[i]) <= 1e-8 * std::max(p[i], 1e-3));
  }
}

TEST_CASE("zero wave function is reported") {
  TensorTreeModel raw = gaussian_model(make_tensor_train(5), 2, 1);
  for (NodeId x = 5; x < raw.topology().num_nodes(); ++x) {
    DenseTensor z = raw.tensor(x);
    z *= 0.0;
    raw.set_tensor(x, z);
  }
  CHECK_THROWS_AS(canonicalize(raw, raw.topology().root_edge()), DegenerateModelError);
}

TEST_CASE("move_root keeps amplitudes") {
  const TensorTreeModel m = init_model(make_random_tree(6, 9), 3, 9);
  std::mt19937_64 rng(1);
  TensorTreeModel cur = m;
  for (int step = 0; step < 20; ++step) {
    const Edge r = cur.topology().root_edge();
    std::vector<Edge> options;
    for (NodeId x : {r.a, r.b}) {
      for (NodeId y : cur.topology().neighbors(x)) {
        if (Edge::of(x, y) != r) options.push_back(Edge::of(x, y));
      }
    }
    const Edge next = options[rng() % options.size()];
    cur = move_root(cur, next);
    CHECK(cur.topology().root_edge() == next);
    CHECK(isometry_error(cur) <= 1e-8);
    double total = 0.0;
    for (double v : naive_distribution(cur)) total += v;
    CHECK(std::abs(total - 1.0) <= 1e-8);
    CHECK(std::abs(naive_norm2(cur) - 1.0) <= 1e-8);
    for (std::size_t i = 0; i < 64; ++i) {
      const auto x = bits_of(i, 6);
      CHECK(rel(amplitude(cur, x), amplitude(m, x)) <= 1e-8);
    }
  }
}

TEST_CASE("move_root round trip and errors") {
  const TensorTreeModel m = init_model(make_tensor_train(7), 3, 1);
  const Edge r = m.topology().root_edge();
  const NodeId x = r.a;
  Edge away{};
  for (NodeId y : m.topology().neighbors(x)) {
    if (y != r.b) away = Edge::of(x, y);
  }
  const TensorTreeModel back = move_root(move_root(m, away), r);
  for (std::size_t i = 0; i < 128; ++i) {
    const auto v = bits_of(i, 7);
    CHECK(rel(amplitude(back, v), amplitude(m, v)) <= 1e-10);
  }
  for (Edge e : m.topology().edges()) {
    if (!e.touches(r.a) && !e.touches(r.b)) {
      CHECK_THROWS_AS(move_root(m, e), TopologyError);
      break;
    }
  }
}

TEST_CASE("amplitude on a single tensor") {
  const TensorTreeModel m = init_model(make_tensor_train(3), 2, 5);
  CHECK(m.leaf_rooted());
  const DenseTensor& t = m.tensor(3);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto x = bits_of(i, 3);
    const std::size_t idx[3] = {x[0], x[1], x[2]};
    CHECK(amplitude(m, x) == doctest::Approx(t.at(idx)).epsilon(1e-14));
  }
  CHECK(std::abs(m.partition_function() - t.norm() * t.norm()) <= 1e-12);
  CHECK_THROWS(amplitude(m, std::vector<std::uint8_t>{0, 1}));
}

TEST_CASE("constant tensors give a flat amplitude") {
  const TreeTopology t = make_balanced_tree(6);
  std::vector<DenseTensor> tensors(t.num_nodes());
  for (NodeId x = 6; x < t.num_nodes(); ++x) {
    std::vector<std::size_t> shape;
    for (NodeId y : t.neighbors(x)) shape.push_back(2);
    tensors[x] = DenseTensor(shape, std::vector<double>(8, 0.7));
  }
  const TensorTreeModel m(t, tensors, {1.0, 1.0}, 2);
  const double a0 = amplitude(m, bits_of(0, 6));
  for (std::size_t i = 1; i < 64; ++i) CHECK(amplitude(m, bits_of(i, 6)) == doctest::Approx(a0).epsilon(1e-14));
}

TEST_CASE("amplitude matches the naive contraction") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TensorTreeModel m = init_model(make_random_tree(8, seed), 3, seed);
    std::vector<std::uint8_t> all;
    for (std::size_t i = 0; i < 256; ++i) {
      const auto x = bits_of(i, 8);
      CHECK(rel(amplitude(m, x), naive_amplitude(m, x)) <= 1e-12);
      all.insert(all.end(), x.begin(), x.end());
    }
    const DataBatch batch(8, all);
    const auto one = amplitudes(m, batch, 1);
    const auto many = amplitudes(m, batch, 3);
    CHECK(one == many);
    for (std::size_t i = 0; i < 256; ++i) CHECK(rel(one[i], naive_amplitude(m, bits_of(i, 8))) <= 1e-12);
  }
}

TEST_CASE("nll of a uniform model") {
  const TreeTopology t = make_tensor_train(3);
  std::vector<DenseTensor> tensors(4);
  tensors[3] = DenseTensor({2, 2, 2}, std::vector<double>(8, 0.5));
  const TensorTreeModel m = canonicalize(TensorTreeModel(t, tensors, {1.0}, 2), t.root_edge());
  const DataBatch b = DataBatch::from_rows({{0, 1, 1}, {1, 1, 1}, {0, 0, 0}});
  CHECK(nll(m, b) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
}

TEST_CASE("nll of an exact pattern memorizer is ln 10") {
  std::mt19937_64 rng(3);
  std::vector<std::vector<std::uint8_t>> patterns;
  while (patterns.size() < 10) {
    std::vector<std::uint8_t> p(12);
    for (auto& b : p) b = static_cast<std::uint8_t>(rng() & 1);
    if (std::find(patterns.begin(), patterns.end(), p) == patterns.end()) patterns.push_back(p);
  }
  const TensorTreeModel raw = pattern_model(patterns);
  const TensorTreeModel m = canonicalize(raw, raw.topology().root_edge());
  const DataBatch batch = DataBatch::from_rows(patterns);
  CHECK(std::abs(nll(m, batch) - std::log(10.0)) <= 1e-10);

  // A configuration outside the support has amplitude exactly zero.
  std::vector<std::uint8_t> other(12, 0);
  while (std::find(patterns.begin(), patterns.end(), other) != patterns.end()) other[rng() % 12] ^= 1;
  const DataBatch miss = DataBatch::from_rows({patterns[0], other});
  CHECK(amplitude(raw, other) == 0.0);
  CHECK(std::isinf(nll(raw, miss, ZeroPolicy::Strict)));
  CHECK(nll(raw, miss, ZeroPolicy::Strict) > 0.0);
  CHECK(std::isfinite(nll(raw, miss, ZeroPolicy::Clamp)));
}

TEST_CASE("nll and log_prob match enumeration") {
  const TensorTreeModel m = init_model(make_random_tree(8, 17), 4, 17);
  const auto p = naive_distribution(m);
  std::mt19937_64 rng(5);
  std::vector<std::vector<std::uint8_t>> rows;
  double want = 0.0;
  for (int r = 0; r < 50; ++r) {
    const std::size_t idx = rng() % 256;
    rows.push_back(bits_of(idx, 8));
    want -= std::log(p[idx]);
    CHECK(std::abs(log_prob(m, rows.back()) - std::log(p[idx])) <= 1e-10);
  }
  want /= 50.0;
  CHECK(std::abs(nll(m, DataBatch::from_rows(rows)) - want) <= 1e-10);
  const auto q = exact_distribution(m);
  for (std::size_t i = 0; i < 256; ++i) CHECK(std::abs(q[i] - p[i]) <= 1e-12);
}

TEST_CASE("root gradient matches finite differences") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = 4 + trial % 3;
    const std::size_t chi = 2 + trial % 3;
    const TensorTreeModel m = init_model(make_random_tree(n, rng()), chi, rng());
    std::vector<std::vector<std::uint8_t>> rows;
    for (int r = 0; r < 12; ++r) rows.push_back(bits_of(rng() % (std::size_t{1} << n), n));
    const DataBatch batch = DataBatch::from_rows(rows);
    const DenseTensor theta = root_working_tensor(m);
    const DenseTensor g = grad_root_tensor(m, batch);
    REQUIRE(g.shape() == theta.shape());
    CHECK(std::abs(substituted_nll(m, theta, batch) - nll(m, batch)) <= 1e-10);
    const DenseTensor fd = finite_difference_gradient(m, theta, batch);
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(std::abs(g[i] - fd[i]) <= 1e-4 * std::max(std::abs(fd[i]), 1e-6));
    }
  }
}

TEST_CASE("root gradient on a leaf root") {
  const TensorTreeModel m = init_model(make_tensor_train(3), 2, 8);
  const DataBatch batch = DataBatch::from_rows({{0, 1, 0}, {1, 1, 0}, {0, 0, 1}});
  const DenseTensor theta = root_working_tensor(m);
  const DenseTensor g = grad_root_tensor(m, batch);
  const DenseTensor fd = finite_difference_gradient(m, theta, batch);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i] - fd[i]) <= 1e-4 * std::max(std::abs(fd[i]), 1e-6));
}

TEST_CASE("uniform model with a uniform batch has zero gradient") {
  const TreeTopology t = make_balanced_tree(4);
  std::vector<DenseTensor> tensors(t.num_nodes());
  for (NodeId x = 4; x < 6; ++x) {
    std::vector<std::size_t> shape;
    for (NodeId y : t.neighbors(x)) shape.push_back(t.is_leaf(y) ? 2 : 1);
    tensors[x] = DenseTensor(shape, std::vector<double>(4, 0.5));
  }
  const TensorTreeModel m(t, tensors, {1.0}, 2);
  std::vector<std::vector<std::uint8_t>> rows;
  for (std::size_t i = 0; i < 16; ++i) rows.push_back(bits_of(i, 4));
  const DenseTensor g = grad_root_tensor(m, DataBatch::from_rows(rows));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(g[i]) <= 1e-10);
}

TEST_CASE("gradient names the zero-amplitude sample") {
  std::vector<std::vector<std::uint8_t>> patterns{{0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}};
  const TensorTreeModel m = pattern_model(patterns);
  const DataBatch batch = DataBatch::from_rows({{0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}, {1, 0, 1, 0, 1}});
  try {
    grad_root_tensor(m, batch);
    FAIL("expected ZeroAmplitudeError");
  } catch (const ZeroAmplitudeError& e) {
    CHECK(e.sample_index() == 2);
  }
}

TEST_CASE("init_model on a thousand leaves stays finite") {
  const TensorTreeModel m = init_model(make_random_tree(1024, 3), 6, 4);
  CHECK(std::abs(m.partition_function() - 1.0) <= 1e-10);
  CHECK(canonical_error(m) <= 1e-8);
  for (double l : m.lambda()) CHECK(std::isfinite(l));
}

TEST_CASE("log_prob and nll do not underflow on long product states") {
  // Unit bonds make p(x) a product over nodes with an exact log oracle.
  const std::size_t n = 1100;
  const TreeTopology t = make_random_tree(n, 9);
  TensorTreeModel raw = raw_gaussian_model(t, [](Edge) { return std::size_t{1}; }, 10);
  std::vector<DenseTensor> tensors = raw.tensors();
  for (NodeId x = static_cast<NodeId>(n); x < t.num_nodes(); ++x) tensors[x] *= 1.0 / tensors[x].norm();
  const TensorTreeModel m = canonicalize(TensorTreeModel(t, tensors, {1.0}, 8), t.root_edge());
  CHECK(std::abs(m.partition_function() - 1.0) <= 1e-10);

  std::mt19937_64 rng(11);
  std::vector<std::uint8_t> values(3 * n);
  for (auto& v : values) v = static_cast<std::uint8_t>(rng() & 1U);
  const DataBatch batch(n, values);
  double expected_nll = 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    double lp = 0.0;
    for (NodeId x = static_cast<NodeId>(n); x < t.num_nodes(); ++x) {
      std::size_t idx[3];
      for (std::size_t s = 0; s < 3; ++s) {
        const NodeId y = t.neighbor(x, s);
        idx[s] = t.is_leaf(y) ? batch.at(r, y) : 0;
      }
      const double v = tensors[x].at(idx);
      lp += std::log(v * v);
    }
    CHECK(lp < -700.0);
    CHECK(std::abs(log_prob(m, batch.row(r)) - lp) <= 1e-8 * std::abs(lp));
    expected_nll -= lp / 3.0;
  }
  CHECK(std::abs(nll(m, batch) - expected_nll) <= 1e-8 * expected_nll);
  CHECK(std::abs(nll(m, batch, ZeroPolicy::Clamp) - expected_nll) <= 1e-8 * expected_nll);
}

TEST_CASE("enumeration guard") {
  const TensorTreeModel m = init_model(make_tensor_train(21), 2, 0);
  CHECK_THROWS_AS(exact_distribution(m), std::invalid_argument);
}

TEST_CASE("dense state oracle agrees with the naive contraction") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const TreeTopology t = make_random_tree(6, seed);
    TensorTreeModel m = raw_gaussian_model(t, [](Edge) { return std::size_t{3}; }, seed);
    if (seed == 3) m = canonicalize(init_model(t, 3, seed), Edge::of(0, t.neighbor(0, 0)));  // leaf root
    const std::vector<double> psi = dense_state(m);
    for (std::size_t i = 0; i < psi.size(); ++i) {
      CHECK(psi[i] == doctest::Approx(naive_amplitude(m, bits_of(i, 6))).epsilon(1e-12));
    }
  }
}

}  // TEST_SUITE
