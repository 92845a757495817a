#include "att/local_update.hpp"

#include <algorithm>
#include <cmath>

#include "att/errors.hpp"
#include "att/model.hpp"

namespace att {
namespace {

constexpr double kDropTolerance = 1e-14;

// 2 lr / (M psi), with psi floored in clamp mode.
Eigen::VectorXd data_weights(const Eigen::VectorXd& psi, double learning_rate, bool clamp) {
  const double floor = std::sqrt(kMinProbability);
  Eigen::VectorXd c(psi.size());
  const double scale = 2.0 * learning_rate / static_cast<double>(psi.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    double p = psi(i);
    if (std::abs(p) < floor) {
      if (!clamp && p == 0.0) throw ZeroAmplitudeError(static_cast<std::size_t>(i), "zero amplitude in update");
      if (clamp) p = p < 0.0 ? -floor : floor;
    }
    c(i) = scale / p;
  }
  return c;
}

void finish(linalg::Svd& svd) {
  if (svd.s.size() == 0 || !(svd.s(0) > 0.0)) throw DegenerateModelError("working tensor vanished");
  Eigen::Index r = 1;
  while (r < svd.s.size() && svd.s(r) > kDropTolerance * svd.s(0)) ++r;
  svd.s.conservativeResize(r);
  svd.u.conservativeResize(Eigen::NoChange, r);
  svd.v.conservativeResize(Eigen::NoChange, r);
  svd.s /= svd.s.norm();
}

}  // namespace

FactoredTensor FactoredTensor::from_svd(const linalg::Svd& svd) {
  return {svd.u * svd.s.asDiagonal(), svd.v};
}

Eigen::MatrixXd FactoredTensor::dense() const {
  switch (identity) {
    case Identity::Left: return r.transpose();
    case Identity::Right: return l;
    case Identity::None: break;
  }
  return l * r.transpose();
}

double FactoredTensor::squared_norm() const {
  switch (identity) {
    case Identity::Left: return r.squaredNorm();
    case Identity::Right: return l.squaredNorm();
    case Identity::None: break;
  }
  if (l.cols() >= std::min(l.rows(), r.rows())) return dense().squaredNorm();
  return ((l.transpose() * l).array() * (r.transpose() * r).array()).sum();
}

void FactoredTensor::scale(double factor) {
  if (identity == Identity::Left) {
    r *= factor;
  } else {
    l *= factor;
  }
}

std::size_t FactoredTensor::rank() const {
  if (identity == Identity::None) return static_cast<std::size_t>(l.cols());
  return static_cast<std::size_t>(std::min(rows(), cols()));
}

namespace {

void store_dense(FactoredTensor& f, Eigen::MatrixXd theta) {
  if (theta.rows() <= theta.cols()) {
    f.r = theta.transpose();
    f.l.resize(0, 0);
    f.identity = FactoredTensor::Identity::Left;
  } else {
    f.l = std::move(theta);
    f.r.resize(0, 0);
    f.identity = FactoredTensor::Identity::Right;
  }
}

}  // namespace

void FactoredTensor::compact() {
  if (identity != Identity::None || l.cols() <= std::min(l.rows(), r.rows())) return;
  store_dense(*this, dense());
}

Eigen::VectorXd factored_amplitudes(const FactoredTensor& theta, const Eigen::Ref<const Eigen::MatrixXd>& a,
                                    const Eigen::Ref<const Eigen::MatrixXd>& b) {
  switch (theta.identity) {
    case FactoredTensor::Identity::Left: return (a.array() * (b * theta.r).array()).rowwise().sum();
    case FactoredTensor::Identity::Right: return ((a * theta.l).array() * b.array()).rowwise().sum();
    case FactoredTensor::Identity::None: break;
  }
  return ((a * theta.l).array() * (b * theta.r).array()).rowwise().sum();
}

void gradient_step(FactoredTensor& theta, const Eigen::Ref<const Eigen::MatrixXd>& a,
                   const Eigen::Ref<const Eigen::MatrixXd>& b, double learning_rate, bool clamp) {
  const double norm2 = theta.squared_norm();
  const Eigen::VectorXd c = data_weights(factored_amplitudes(theta, a, b), learning_rate, clamp);
  const double decay = 1.0 - 2.0 * learning_rate / norm2;
  const Eigen::Index k = static_cast<Eigen::Index>(theta.rank()), m = a.rows();
  if (theta.identity != FactoredTensor::Identity::None || k + m > std::min(theta.rows(), theta.cols())) {
    Eigen::MatrixXd dense = theta.dense() * decay;
    dense.noalias() += a.transpose() * c.asDiagonal() * b;
    dense /= dense.norm();
    store_dense(theta, std::move(dense));
    return;
  }
  Eigen::MatrixXd l(theta.l.rows(), k + m), r(theta.r.rows(), k + m);
  l.leftCols(k) = theta.l * decay;
  l.rightCols(m) = a.transpose() * c.asDiagonal();
  r.leftCols(k) = theta.r;
  r.rightCols(m) = b.transpose();
  theta.l = std::move(l);
  theta.r = std::move(r);
  theta.scale(1.0 / std::sqrt(theta.squared_norm()));
}

void gradient_step_dense(Eigen::MatrixXd& theta, const Eigen::Ref<const Eigen::MatrixXd>& a,
                         const Eigen::Ref<const Eigen::MatrixXd>& b, double learning_rate, bool clamp) {
  const double norm2 = theta.squaredNorm();
  const Eigen::VectorXd psi = ((a * theta).array() * b.array()).rowwise().sum();
  const Eigen::VectorXd c = data_weights(psi, learning_rate, clamp);
  theta = theta * (1.0 - 2.0 * learning_rate / norm2) + a.transpose() * c.asDiagonal() * b;
  theta /= theta.norm();
}

linalg::Svd truncate_normalized(const FactoredTensor& theta, std::size_t chi) {
  linalg::Svd svd = theta.identity == FactoredTensor::Identity::None
                        ? linalg::truncated_svd_factored(theta.l, theta.r, chi)
                        : linalg::truncated_svd(theta.dense(), chi);
  finish(svd);
  return svd;
}

linalg::Svd truncate_normalized(const Eigen::Ref<const Eigen::MatrixXd>& theta, std::size_t chi) {
  linalg::Svd svd = linalg::truncated_svd(theta, chi);
  finish(svd);
  return svd;
}

}  // namespace att
