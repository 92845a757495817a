#include "att/sampling.hpp"

#include <stdexcept>

#include "att/errors.hpp"

namespace att {
namespace {

class Sampler {
 public:
  Sampler(const TensorTreeModel& m, std::mt19937_64& rng, std::vector<std::uint8_t>& x)
      : m_(m), t_(m.topology()), rng_(rng), x_(x) {}

  // Samples every leaf behind `node` (entered from `parent`) given the
  // density matrix rho on that edge. Returns the unit-norm message of the
  // sampled subtree toward `parent`.
  Eigen::VectorXd subtree(NodeId node, NodeId parent, const Eigen::MatrixXd& rho) {
    if (t_.is_leaf(node)) {
      const double p0 = std::max(rho(0, 0), 0.0);
      const double p1 = std::max(rho(1, 1), 0.0);
      if (!(p0 + p1 > 0.0)) throw NumericalError("sampling reached a zero-probability branch");
      const std::uint8_t bit = uniform_(rng_) * (p0 + p1) < p0 ? 0 : 1;
      x_[node] = bit;
      Eigen::VectorXd e = Eigen::VectorXd::Zero(2);
      e(bit) = 1.0;
      return e;
    }
    const std::size_t ps = t_.slot_of(node, parent);
    auto [s1, s2] = children(ps);
    const std::size_t perm[3] = {s1, s2, ps};
    const Eigen::MatrixXd tm = matricize(m_.tensor(node), perm, 2);  // (d1 d2) x dp
    const Eigen::MatrixXd sigma = tm * rho * tm.transpose();
    const Eigen::VectorXd out = children_given(node, s1, s2, sigma, &tm);
    return out;
  }

  // Pure state on (s1, s2) legs of `node`.
  void from_pure(NodeId node, std::size_t s1, std::size_t s2, const Eigen::VectorXd& state) {
    children_given(node, s1, s2, state * state.transpose(), nullptr);
  }

 private:
  std::pair<std::size_t, std::size_t> children(std::size_t ps) const {
    if (ps == 0) return {1, 2};
    if (ps == 1) return {0, 2};
    return {0, 1};
  }

  // sigma is the density over the flattened (d1, d2) legs. When tm is given,
  // returns the sampled message toward the remaining slot.
  Eigen::VectorXd children_given(NodeId node, std::size_t s1, std::size_t s2, const Eigen::MatrixXd& sigma,
                                 const Eigen::MatrixXd* tm) {
    const DenseTensor& tx = m_.tensor(node);
    const auto d1 = static_cast<Eigen::Index>(tx.extent(s1));
    const auto d2 = static_cast<Eigen::Index>(tx.extent(s2));
    Eigen::MatrixXd rho1 = Eigen::MatrixXd::Zero(d1, d1);
    for (Eigen::Index i = 0; i < d1; ++i) {
      for (Eigen::Index k = 0; k < d1; ++k) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < d2; ++j) acc += sigma(i * d2 + j, k * d2 + j);
        rho1(i, k) = acc;
      }
    }
    rho1 /= rho1.trace();
    const Eigen::VectorXd a1 = subtree(t_.neighbor(node, s1), node, rho1);

    Eigen::MatrixXd rho2 = Eigen::MatrixXd::Zero(d2, d2);
    for (Eigen::Index i = 0; i < d1; ++i) {
      for (Eigen::Index k = 0; k < d1; ++k) {
        const double w = a1(i) * a1(k);
        if (w == 0.0) continue;
        rho2 += w * sigma.block(i * d2, k * d2, d2, d2);
      }
    }
    rho2 /= rho2.trace();
    const Eigen::VectorXd a2 = subtree(t_.neighbor(node, s2), node, rho2);
    if (tm == nullptr) return {};

    Eigen::VectorXd kron(d1 * d2);
    for (Eigen::Index i = 0; i < d1; ++i) kron.segment(i * d2, d2) = a1(i) * a2;
    Eigen::VectorXd out = tm->transpose() * kron;
    const double n = out.norm();
    if (!(n > 0.0)) throw NumericalError("sampled subtree has zero weight");
    return out / n;
  }

  const TensorTreeModel& m_;
  const TreeTopology& t_;
  std::mt19937_64& rng_;
  std::vector<std::uint8_t>& x_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace

std::vector<std::uint8_t> sample(const TensorTreeModel& m, std::mt19937_64& rng) {
  const TreeTopology& t = m.topology();
  std::vector<std::uint8_t> x(m.num_variables(), 0);
  Sampler s(m, rng, x);
  const Edge r = t.root_edge();
  const Eigen::Map<const Eigen::VectorXd> lambda(m.lambda().data(), static_cast<Eigen::Index>(m.lambda().size()));

  if (m.leaf_rooted()) {
    const NodeId u = t.is_leaf(r.a) ? r.b : r.a;
    const NodeId leaf = r.other(u);
    const std::size_t ls = t.slot_of(u, leaf);
    std::vector<std::size_t> perm{ls};
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != ls) perm.push_back(k);
    }
    const Eigen::MatrixXd tm = matricize(m.tensor(u), perm, 1);  // 2 x (d1 d2)
    const Eigen::MatrixXd rho = tm * tm.transpose();
    const Eigen::VectorXd e = s.subtree(leaf, u, rho / rho.trace());
    const Eigen::VectorXd state = tm.transpose() * e;
    s.from_pure(u, perm[1], perm[2], state / state.norm());
    return x;
  }

  const Eigen::MatrixXd rho_a = Eigen::MatrixXd(lambda.array().square().matrix().asDiagonal()) /
                                lambda.squaredNorm();
  const Eigen::VectorXd alpha = s.subtree(r.a, r.b, rho_a);
  const Eigen::VectorXd w = lambda.cwiseProduct(alpha);
  const double wn = w.norm();
  if (!(wn > 0.0)) throw NumericalError("sampled subtree has zero weight");
  s.subtree(r.b, r.a, (w / wn) * (w / wn).transpose());
  return x;
}

DataBatch sample_batch(const TensorTreeModel& m, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("sample count must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> values;
  values.reserve(count * m.num_variables());
  for (std::size_t i = 0; i < count; ++i) {
    const auto x = sample(m, rng);
    values.insert(values.end(), x.begin(), x.end());
  }
  return DataBatch(m.num_variables(), std::move(values));
}

}  // namespace att
