#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>

#include "att/model.hpp"
#include "att/sampling.hpp"
#include "support.hpp"

using namespace att;
using namespace att::testing;

namespace {

std::vector<double> empirical(const DataBatch& b) {
  std::vector<double> q(std::size_t{1} << b.num_variables(), 0.0);
  for (std::size_t r = 0; r < b.num_samples(); ++r) q[index_of(b.row(r))] += 1.0;
  for (double& v : q) v /= static_cast<double>(b.num_samples());
  return q;
}

// Pearson statistic with cells of expected count < 5 pooled together.
std::pair<double, std::size_t> chi_square(const std::vector<double>& p, const std::vector<double>& q, double count) {
  double stat = 0.0, pooled_e = 0.0, pooled_o = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double e = p[i] * count, o = q[i] * count;
    if (e < 5.0) {
      pooled_e += e;
      pooled_o += o;
      continue;
    }
    stat += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pooled_e > 0.0) {
    stat += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
    ++cells;
  }
  return {stat, cells - 1};
}

}  // namespace

TEST_SUITE("sampling") {

TEST_CASE("deterministic model always gives its pattern") {
  // Product state |1 0 1 1 0>.
  const TreeTopology t = make_tensor_train(5);
  TensorTreeModel m = raw_gaussian_model(t, [](Edge) { return std::size_t{1}; }, 1);
  const std::vector<std::uint8_t> want{1, 0, 1, 1, 0};
  for (NodeId x = 5; x < t.num_nodes(); ++x) {
    DenseTensor tx = m.tensor(x);
    for (std::size_t i = 0; i < tx.size(); ++i) tx[i] = 0.0;
    std::size_t idx[3];
    for (std::size_t s = 0; s < 3; ++s) {
      const NodeId y = t.neighbor(x, s);
      idx[s] = t.is_leaf(y) ? want[y] : 0;
    }
    tx.at(idx) = 1.0;
    m.set_tensor(x, tx);
  }
  m = canonicalize(m, t.root_edge());
  const DataBatch b = sample_batch(m, 200, 3);
  for (std::size_t r = 0; r < b.num_samples(); ++r) {
    CHECK(std::vector<std::uint8_t>(b.row(r).begin(), b.row(r).end()) == want);
  }
}

TEST_CASE("sample_batch is reproducible") {
  const TensorTreeModel m = init_model(make_random_tree(10, 1), 3, 1);
  CHECK(sample_batch(m, 500, 42) == sample_batch(m, 500, 42));
  CHECK(!(sample_batch(m, 500, 42) == sample_batch(m, 500, 43)));
}

TEST_CASE("total variation at n = 6") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const TensorTreeModel m = init_model(make_random_tree(6, seed), 3, seed + 10);
    const auto p = naive_distribution(m);
    const auto q = empirical(sample_batch(m, 100000, seed));
    CHECK(total_variation(p, q) <= 0.02);
  }
}

TEST_CASE("chi-square goodness of fit at n = 8") {
  const std::vector<TreeTopology> shapes{make_tensor_train(8), make_balanced_tree(8), make_random_tree(8, 5)};
  std::uint64_t seed = 100;
  for (const TreeTopology& t : shapes) {
    for (Edge root : {t.root_edge(), t.edges().front()}) {
      const TensorTreeModel m = canonicalize(init_model(t, 4, ++seed), root);
      const auto p = naive_distribution(m);
      const auto q = empirical(sample_batch(m, 100000, ++seed));
      const auto [stat, dof] = chi_square(p, q, 100000.0);
      const double critical = boost::math::quantile(boost::math::chi_squared(static_cast<double>(dof)), 0.999);
      CHECK(stat < critical);
    }
  }
}

TEST_CASE("independent blocks show no cross-block information") {
  const TreeTopology t = make_tensor_train(6);
  const Edge cut = t.root_edge();
  TensorTreeModel m = raw_gaussian_model(t, [&](Edge e) { return e == cut ? std::size_t{1} : std::size_t{2}; }, 4);
  m = canonicalize(m, cut);
  const DataBatch b = sample_batch(m, 100000, 9);
  const auto q = empirical(b);
  const double mi = mi_from_distribution(q, 6, bipartition(t, cut).first);
  CHECK(mi <= 0.01);
}

TEST_CASE("leaf-rooted model samples correctly") {
  const TensorTreeModel m = canonicalize(init_model(make_tensor_train(6), 3, 2), Edge::of(0, 6));
  CHECK(m.leaf_rooted());
  const auto p = naive_distribution(m);
  const auto q = empirical(sample_batch(m, 100000, 5));
  CHECK(total_variation(p, q) <= 0.02);
}

}  // TEST_SUITE
