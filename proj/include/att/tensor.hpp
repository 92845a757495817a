#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace att {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Real dense tensor in row-major order. The last index varies fastest.
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> shape);
  DenseTensor(std::vector<std::size_t> shape, std::vector<double> data);

  static DenseTensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static DenseTensor from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double& at(std::span<const std::size_t> index);
  double at(std::span<const std::size_t> index) const;
  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  // New tensor whose axis i is axis perm[i] of this one.
  DenseTensor permuted(std::span<const std::size_t> perm) const;
  DenseTensor reshaped(std::vector<std::size_t> shape) const;

  // Rank-2 view of the data as a (rows x cols) row-major matrix.
  Eigen::Map<const RowMatrix> as_matrix(std::size_t rows, std::size_t cols) const;
  Eigen::Map<RowMatrix> as_matrix(std::size_t rows, std::size_t cols);

  double norm() const;
  DenseTensor& operator*=(double alpha);
  bool all_finite() const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::size_t offset(std::span<const std::size_t> index) const;

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

DenseTensor operator*(double alpha, DenseTensor t);
DenseTensor operator+(const DenseTensor& a, const DenseTensor& b);
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);

// Sum over paired axes. Result axes: unpaired axes of a (in order), then
// unpaired axes of b (in order).
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const std::pair<std::size_t, std::size_t>> pairs);

// Matrix whose rows run over the axes in `perm` before position `split`
// and whose columns run over the rest (row-major flattening on both sides).
Eigen::MatrixXd matricize(const DenseTensor& t, std::span<const std::size_t> perm, std::size_t split);

// Inverse of matricize: `shape` lists the extents in `perm` order.
DenseTensor tensorize(const Eigen::Ref<const Eigen::MatrixXd>& m, std::vector<std::size_t> shape,
                      std::span<const std::size_t> perm);

// t with axis `axis` replaced by m * (that axis); m is new_extent x old_extent.
DenseTensor apply_to_axis(const DenseTensor& t, std::size_t axis,
                          const Eigen::Ref<const Eigen::MatrixXd>& m);

struct SvdResult {
  DenseTensor u;  // rows x r, orthonormal columns
  std::vector<double> s;
  DenseTensor v;  // cols x r, orthonormal columns
  double discarded_weight = 0.0;
};

// Best rank-min(max_rank, rank) approximation m ~ u diag(s) v^T. In each
// column of u the entry of largest magnitude is made positive.
SvdResult svd_truncate(const DenseTensor& m, std::size_t max_rank);

namespace linalg {

struct Svd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;
  Eigen::MatrixXd v;
  double discarded_weight = 0.0;
};

// Thin SVD truncated to max_rank with the sign convention applied. Throws
// NumericalError if the decomposition fails or produces non-finite values.
Svd truncated_svd(const Eigen::Ref<const Eigen::MatrixXd>& m, std::size_t max_rank);

// Truncated SVD of l * r^T computed from thin QR factors of l and r, without
// forming the product. l and r must have the same number of columns.
Svd truncated_svd_factored(const Eigen::Ref<const Eigen::MatrixXd>& l,
                           const Eigen::Ref<const Eigen::MatrixXd>& r, std::size_t max_rank);

void fix_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v);

}  // namespace linalg
}  // namespace att
