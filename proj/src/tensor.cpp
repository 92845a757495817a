#include "att/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <lapacke.h>

#include "att/errors.hpp"

namespace att {
namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const std::vector<std::size_t>& shape) {
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive");
  }
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(product(shape_), 0.0);
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != product(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape product " + std::to_string(product(shape_)));
  }
}

DenseTensor DenseTensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return DenseTensor({rows, cols}, std::move(data));
}

DenseTensor DenseTensor::from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  t.as_matrix(m.rows(), m.cols()) = m;
  return t;
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw ShapeError("index rank does not match tensor rank");
  std::size_t off = 0;
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (index[i] >= shape_[i]) throw ShapeError("index out of range on axis " + std::to_string(i));
    off = off * shape_[i] + index[i];
  }
  return off;
}

double& DenseTensor::at(std::span<const std::size_t> index) { return data_[offset(index)]; }
double DenseTensor::at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

DenseTensor DenseTensor::permuted(std::span<const std::size_t> perm) const {
  const std::size_t r = rank();
  if (perm.size() != r) throw ShapeError("permutation length does not match tensor rank");
  std::vector<bool> seen(r, false);
  for (std::size_t p : perm) {
    if (p >= r || seen[p]) throw ShapeError("invalid axis permutation");
    seen[p] = true;
  }

  std::vector<std::size_t> old_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) old_strides[i - 1] = old_strides[i] * shape_[i];

  std::vector<std::size_t> new_shape(r);
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    new_shape[i] = shape_[perm[i]];
    stride[i] = old_strides[perm[i]];
  }

  DenseTensor out(new_shape);
  std::vector<std::size_t> idx(r, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < out.data_.size(); ++flat) {
    out.data_[flat] = data_[src];
    // odometer increment over the new axes
    for (std::size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      src += stride[ax];
      if (idx[ax] < new_shape[ax]) break;
      src -= stride[ax] * new_shape[ax];
      idx[ax] = 0;
    }
  }
  return out;
}

DenseTensor DenseTensor::reshaped(std::vector<std::size_t> shape) const {
  return DenseTensor(std::move(shape), data_);
}

Eigen::Map<const RowMatrix> DenseTensor::as_matrix(std::size_t rows, std::size_t cols) const {
  if (rows * cols != data_.size()) throw ShapeError("matrix view does not match tensor size");
  return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<RowMatrix> DenseTensor::as_matrix(std::size_t rows, std::size_t cols) {
  if (rows * cols != data_.size()) throw ShapeError("matrix view does not match tensor size");
  return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

double DenseTensor::norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

DenseTensor& DenseTensor::operator*=(double alpha) {
  for (double& x : data_) x *= alpha;
  return *this;
}

bool DenseTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

DenseTensor operator*(double alpha, DenseTensor t) {
  t *= alpha;
  return t;
}

DenseTensor operator+(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("shape mismatch in tensor addition");
  DenseTensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("shape mismatch in tensor subtraction");
  DenseTensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
  for (auto [ia, ib] : pairs) {
    const std::string tag = "(" + std::to_string(ia) + ", " + std::to_string(ib) + ")";
    if (ia >= a.rank() || ib >= b.rank()) throw ShapeError("axis pair " + tag + " out of range");
    if (used_a[ia] || used_b[ib]) throw ShapeError("axis pair " + tag + " reuses an axis");
    if (a.extent(ia) != b.extent(ib)) {
      throw ShapeError("axis pair " + tag + " has mismatched extents " +
                       std::to_string(a.extent(ia)) + " and " + std::to_string(b.extent(ib)));
    }
    used_a[ia] = true;
    used_b[ib] = true;
  }

  std::vector<std::size_t> perm_a, perm_b, out_shape;
  std::size_t free_a = 1, free_b = 1, inner = 1;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (!used_a[i]) {
      perm_a.push_back(i);
      out_shape.push_back(a.extent(i));
      free_a *= a.extent(i);
    }
  }
  for (auto [ia, ib] : pairs) {
    perm_a.push_back(ia);
    perm_b.push_back(ib);
    inner *= a.extent(ia);
  }
  for (std::size_t i = 0; i < b.rank(); ++i) {
    if (!used_b[i]) {
      perm_b.push_back(i);
      out_shape.push_back(b.extent(i));
      free_b *= b.extent(i);
    }
  }

  const DenseTensor pa = a.permuted(perm_a);
  const DenseTensor pb = b.permuted(perm_b);
  if (out_shape.empty()) out_shape.push_back(1);
  DenseTensor out(out_shape);
  out.as_matrix(free_a, free_b).noalias() = pa.as_matrix(free_a, inner) * pb.as_matrix(inner, free_b);
  return out;
}

Eigen::MatrixXd matricize(const DenseTensor& t, std::span<const std::size_t> perm, std::size_t split) {
  if (split > perm.size()) throw ShapeError("matricize split beyond rank");
  const DenseTensor p = t.permuted(perm);
  std::size_t rows = 1;
  for (std::size_t i = 0; i < split; ++i) rows *= p.extent(i);
  return p.as_matrix(rows, p.size() / rows);
}

DenseTensor tensorize(const Eigen::Ref<const Eigen::MatrixXd>& m, std::vector<std::size_t> shape,
                      std::span<const std::size_t> perm) {
  if (shape.size() != perm.size()) throw ShapeError("tensorize shape and permutation differ in rank");
  DenseTensor p(std::move(shape));
  if (static_cast<std::size_t>(m.size()) != p.size()) throw ShapeError("tensorize size mismatch");
  p.as_matrix(m.rows(), m.cols()) = m;
  std::vector<std::size_t> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = i;
  return p.permuted(inverse);
}

DenseTensor apply_to_axis(const DenseTensor& t, std::size_t axis,
                          const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (axis >= t.rank()) throw ShapeError("apply_to_axis: axis out of range");
  if (static_cast<std::size_t>(m.cols()) != t.extent(axis)) {
    throw ShapeError("apply_to_axis: matrix has " + std::to_string(m.cols()) + " columns, axis extent is " +
                     std::to_string(t.extent(axis)));
  }
  std::vector<std::size_t> perm{axis};
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i != axis) perm.push_back(i);
  }
  std::vector<std::size_t> shape;
  for (std::size_t i : perm) shape.push_back(t.extent(i));
  shape[0] = static_cast<std::size_t>(m.rows());
  const Eigen::MatrixXd front = matricize(t, perm, 1);
  return tensorize(m * front, std::move(shape), perm);
}

namespace linalg {

void fix_signs(Eigen::MatrixXd& u, Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    Eigen::Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0.0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
}

namespace {

bool finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

// Full thin decomposition, no truncation.
Svd thin_svd(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  const lapack_int rows = static_cast<lapack_int>(m.rows());
  const lapack_int cols = static_cast<lapack_int>(m.cols());
  if (rows == 0 || cols == 0) throw ShapeError("SVD of an empty matrix");
  if (!m.allFinite()) throw NumericalError("SVD input contains non-finite entries");
  const lapack_int p = std::min(rows, cols);

  Eigen::MatrixXd a = m;
  Svd out;
  out.s.resize(p);
  out.u.resize(rows, p);
  Eigen::MatrixXd vt(p, cols);
  lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', rows, cols, a.data(), rows, out.s.data(),
                                   out.u.data(), rows, vt.data(), p);
  if (info == 0) {
    out.v = vt.transpose();
  } else {
    // dgesdd occasionally fails to converge; one-sided Jacobi is slower but robust.
    Eigen::JacobiSVD<Eigen::MatrixXd> jac(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (jac.info() != Eigen::Success) {
      throw NumericalError("SVD failed to converge (LAPACK info " + std::to_string(info) + ")");
    }
    out.u = jac.matrixU();
    out.s = jac.singularValues();
    out.v = jac.matrixV();
  }
  if (!finite(out.u) || !finite(out.v) || !out.s.allFinite()) {
    throw NumericalError("SVD produced non-finite values");
  }
  return out;
}

void truncate(Svd& svd, std::size_t max_rank) {
  const Eigen::Index keep = std::min<Eigen::Index>(svd.s.size(), static_cast<Eigen::Index>(max_rank));
  svd.discarded_weight = svd.s.tail(svd.s.size() - keep).squaredNorm();
  svd.s.conservativeResize(keep);
  svd.u.conservativeResize(Eigen::NoChange, keep);
  svd.v.conservativeResize(Eigen::NoChange, keep);
  fix_signs(svd.u, svd.v);
}

}  // namespace

Svd truncated_svd(const Eigen::Ref<const Eigen::MatrixXd>& m, std::size_t max_rank) {
  if (max_rank == 0) throw ShapeError("max_rank must be at least 1");
  Svd svd = thin_svd(m);
  truncate(svd, max_rank);
  return svd;
}

Svd truncated_svd_factored(const Eigen::Ref<const Eigen::MatrixXd>& l,
                           const Eigen::Ref<const Eigen::MatrixXd>& r, std::size_t max_rank) {
  if (l.cols() != r.cols()) throw ShapeError("factor column counts differ");
  const Eigen::Index k = l.cols();
  if (k >= std::min(l.rows(), r.rows())) return truncated_svd(l * r.transpose(), max_rank);

  Eigen::HouseholderQR<Eigen::MatrixXd> ql(l), qr(r);
  const Eigen::MatrixXd rl = ql.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rr = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Svd core = thin_svd(rl * rr.transpose());

  Svd out;
  out.u = ql.householderQ() * Eigen::MatrixXd::Identity(l.rows(), k) * core.u;
  out.v = qr.householderQ() * Eigen::MatrixXd::Identity(r.rows(), k) * core.v;
  out.s = core.s;
  truncate(out, max_rank);
  return out;
}

}  // namespace linalg

SvdResult svd_truncate(const DenseTensor& m, std::size_t max_rank) {
  if (m.rank() != 2) throw ShapeError("svd_truncate expects a rank-2 tensor");
  const Eigen::MatrixXd mat = m.as_matrix(m.extent(0), m.extent(1));
  linalg::Svd svd = linalg::truncated_svd(mat, max_rank);
  SvdResult out;
  out.u = DenseTensor::from_matrix(svd.u);
  out.v = DenseTensor::from_matrix(svd.v);
  out.s.assign(svd.s.data(), svd.s.data() + svd.s.size());
  out.discarded_weight = svd.discarded_weight;
  return out;
}

}  // namespace att
