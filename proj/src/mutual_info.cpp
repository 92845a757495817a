#include "att/mutual_info.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "att/errors.hpp"
#include "att/messages.hpp"

namespace att {

double bmi_exact(const TensorTreeModel& m, Edge e) {
  const std::size_t n = m.num_variables();
  if (n > kMaxExactBmiVariables) {
    throw std::invalid_argument("exact BMI needs at most " + std::to_string(kMaxExactBmiVariables) +
                                " variables, model has " + std::to_string(n));
  }
  const auto [a, b] = bipartition(m.topology(), e);
  const std::vector<double> p = exact_distribution(m);

  auto sub_index = [](std::size_t full, const std::vector<std::size_t>& vars) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < vars.size(); ++k) idx |= ((full >> vars[k]) & 1U) << k;
    return idx;
  };
  std::vector<double> pa(std::size_t{1} << a.size(), 0.0), pb(std::size_t{1} << b.size(), 0.0);
  for (std::size_t x = 0; x < p.size(); ++x) {
    pa[sub_index(x, a)] += p[x];
    pb[sub_index(x, b)] += p[x];
  }
  double mi = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] <= 0.0) continue;
    mi += p[x] * std::log(p[x] / (pa[sub_index(x, a)] * pb[sub_index(x, b)]));
  }
  return mi;
}

BmiEstimate bmi_from_schmidt(const Eigen::Ref<const Eigen::MatrixXd>& side_a,
                             const Eigen::Ref<const Eigen::MatrixXd>& side_b,
                             const Eigen::Ref<const Eigen::VectorXd>& weights, bool clamp) {
  const Eigen::Index rows = side_a.rows();
  if (rows == 0 || side_b.rows() != rows || side_a.cols() != weights.size() ||
      side_b.cols() != weights.size()) {
    throw ShapeError("inconsistent shapes in BMI estimate");
  }
  const Eigen::VectorXd w2 = weights.array().square();
  const double z = w2.sum();
  const Eigen::VectorXd psi = (side_a.array() * side_b.array()).matrix() * weights;
  const Eigen::VectorXd qa = side_a.array().square().matrix() * w2;
  const Eigen::VectorXd qb = side_b.array().square().matrix() * w2;

  double sum = 0.0, sum2 = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    double joint = psi(i) * psi(i), ma = qa(i), mb = qb(i);
    if (clamp) {
      joint = std::max(joint, kMinProbability);
      ma = std::max(ma, kMinProbability);
      mb = std::max(mb, kMinProbability);
    } else if (joint == 0.0) {
      throw ZeroAmplitudeError(static_cast<std::size_t>(i), "zero joint probability in BMI estimate");
    }
    // p(a,b) / (p(a) p(b)) with Z = sum of w^2
    const double v = std::log(joint) + std::log(z) - std::log(ma) - std::log(mb);
    sum += v;
    sum2 += v * v;
  }
  BmiEstimate out;
  out.samples = static_cast<std::size_t>(rows);
  const double nrows = static_cast<double>(rows);
  out.raw_mean = sum / nrows;
  out.value = std::abs(out.raw_mean);
  if (rows > 1) {
    const double var = std::max(0.0, (sum2 - nrows * out.raw_mean * out.raw_mean) / (nrows - 1.0));
    out.std_error = std::sqrt(var / nrows);
  }
  return out;
}

BmiEstimate bmi_empirical(const TensorTreeModel& model, Edge e, const DataBatch& batch) {
  const TensorTreeModel m = model.topology().root_edge() == e ? model : canonicalize(model, e);
  const TreeTopology& t = m.topology();
  MessageCache cache(m, batch);
  const Eigen::Map<const Eigen::VectorXd> lambda(m.lambda().data(), static_cast<Eigen::Index>(m.lambda().size()));

  if (!m.leaf_rooted()) {
    const Eigen::MatrixXd alpha = cache.toward(e.a, e.b);
    const Eigen::MatrixXd beta = cache.toward(e.b, e.a);
    return bmi_from_schmidt(alpha, beta, lambda);
  }

  // Leaf cut: rotate both sides of the weight-carrying tensor into the
  // Schmidt basis of the cut.
  const NodeId u = t.is_leaf(e.a) ? e.b : e.a;
  const NodeId leaf = e.other(u);
  const std::size_t ls = t.slot_of(u, leaf);
  std::vector<std::size_t> perm{ls};
  for (std::size_t k = 0; k < 3; ++k) {
    if (k != ls) perm.push_back(k);
  }
  const Eigen::MatrixXd tm = matricize(m.tensor(u), perm, 1);
  const linalg::Svd svd = linalg::truncated_svd(tm, 2);
  Eigen::Index r = 0;
  while (r < svd.s.size() && svd.s(r) > 0.0) ++r;
  const Eigen::MatrixXd leaf_msg = cache.toward(leaf, u);
  const Eigen::MatrixXd m1 = cache.toward(t.neighbor(u, perm[1]), u);
  const Eigen::MatrixXd m2 = cache.toward(t.neighbor(u, perm[2]), u);
  const Eigen::MatrixXd side_a = leaf_msg * svd.u.leftCols(r);
  const Eigen::MatrixXd side_b = row_kron(m1, m2) * svd.v.leftCols(r);
  return bmi_from_schmidt(side_a, side_b, svd.s.head(r));
}

}  // namespace att
