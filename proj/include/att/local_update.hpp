#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "att/tensor.hpp"

namespace att {

// Matricized working tensor kept as theta = l * r^T. Rows of l run over the
// first leg group, rows of r over the second. Once the rank reaches the
// matrix size one factor is the identity and is left implicit.
struct FactoredTensor {
  enum class Identity { None, Left, Right };

  Eigen::MatrixXd l;
  Eigen::MatrixXd r;
  Identity identity = Identity::None;  // Left: theta = r^T, Right: theta = l

  static FactoredTensor from_svd(const linalg::Svd& svd);
  Eigen::MatrixXd dense() const;
  double squared_norm() const;
  void scale(double factor);
  // Rewrites the factors exactly with rank at most min(rows, cols).
  void compact();
  std::size_t rank() const;
  Eigen::Index rows() const { return identity == Identity::Left ? r.cols() : l.rows(); }
  Eigen::Index cols() const { return identity == Identity::Right ? l.cols() : r.rows(); }
};

// psi for every row of the batch, where a and b hold the row-wise Kronecker
// products of the leg messages of the two groups.
Eigen::VectorXd factored_amplitudes(const FactoredTensor& theta, const Eigen::Ref<const Eigen::MatrixXd>& a,
                                    const Eigen::Ref<const Eigen::MatrixXd>& b);

// One NLL gradient-descent step followed by rescaling to unit norm. The
// data term is appended as extra columns, so the rank grows by the batch
// size. With clamp, |psi| is floored at sqrt(kMinProbability); without it a
// zero amplitude raises ZeroAmplitudeError.
void gradient_step(FactoredTensor& theta, const Eigen::Ref<const Eigen::MatrixXd>& a,
                   const Eigen::Ref<const Eigen::MatrixXd>& b, double learning_rate, bool clamp);

// Dense reference for gradient_step.
void gradient_step_dense(Eigen::MatrixXd& theta, const Eigen::Ref<const Eigen::MatrixXd>& a,
                         const Eigen::Ref<const Eigen::MatrixXd>& b, double learning_rate, bool clamp);

// Best rank-chi approximation, negligible singular values dropped and the
// spectrum rescaled to unit norm.
linalg::Svd truncate_normalized(const FactoredTensor& theta, std::size_t chi);
linalg::Svd truncate_normalized(const Eigen::Ref<const Eigen::MatrixXd>& theta, std::size_t chi);

}  // namespace att
