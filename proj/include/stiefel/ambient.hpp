#pragma once

// Ambient space M_{n x p}(R): vectorization, Kronecker algebra, the
// orthonormality constraints and their derivatives, and random points.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stiefel/error.hpp"

namespace stiefel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Explicit-state generator. Never global; callers pass it by reference.
using Rng = std::mt19937_64;

inline constexpr double kOrthonormalityTol = 1e-10;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_shape(const Matrix& m, Index rows, Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InputError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

/// Column stacking: column j occupies positions j*rows .. (j+1)*rows-1.
inline Vector vec(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (rows <= 0 || cols <= 0 || v.size() != rows * cols) {
    throw InputError("unvec: vector of length " + std::to_string(v.size()) +
                     " cannot be reshaped to " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// K_{p,n}: the permutation with K * vec(X) = vec(X^t) for X of shape p x n.
/// With this orientation Lambda(U) = K_{p,n} * (U kron U^t).
inline Matrix commutation_matrix(Index p, Index n) {
  if (p < 1 || n < 1) throw InputError("commutation_matrix: dimensions must be positive");
  Matrix k = Matrix::Zero(p * n, p * n);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < n; ++j) {
      // X(i,j) sits at j*p+i in vec(X) and at i*n+j in vec(X^t).
      k(i * n + j, j * p + i) = 1.0;
    }
  }
  return k;
}

/// max |M^t M - I|.
inline double orthonormality_residual(const Matrix& m) {
  return (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff();
}

/// An n x p matrix with orthonormal columns. Construction validates; inputs
/// that fail must be passed through project_to_stiefel explicitly.
class StiefelPoint {
 public:
  explicit StiefelPoint(Matrix u, double tol = kOrthonormalityTol) : u_(std::move(u)) {
    if (u_.size() == 0) throw InputError("StiefelPoint: empty matrix");
    if (u_.cols() > u_.rows()) {
      throw InputError("StiefelPoint: need p <= n, got " + std::to_string(u_.rows()) + "x" +
                       std::to_string(u_.cols()));
    }
    if (!u_.allFinite()) throw InputError("StiefelPoint: non-finite entries");
    residual_ = orthonormality_residual(u_);
    if (!(residual_ <= tol)) {
      throw InputError("point is not on the Stiefel manifold: max|U^tU - I| = " +
                       std::to_string(residual_) +
                       " exceeds tolerance; call project_to_stiefel first");
    }
  }

  Index n() const { return u_.rows(); }
  Index p() const { return u_.cols(); }
  const Matrix& matrix() const { return u_; }
  /// 0-based column access (u_{a+1} in 1-based notation).
  auto column(Index a) const { return u_.col(a); }
  double residual() const { return residual_; }

 private:
  Matrix u_;
  double residual_ = 0.0;
};

/// Index of one constraint function. Labels are 1-based: Diag(a) is
/// F_aa = 1/2 |u_a|^2, OffDiag(b, c) with b < c is F_bc = <u_b, u_c>.
struct ConstraintIndex {
  enum class Kind { Diag, OffDiag };
  Kind kind = Kind::Diag;
  int first = 1;
  int second = 1;

  static ConstraintIndex diag(int a) {
    if (a < 1) throw InputError("ConstraintIndex: Diag index must be >= 1");
    return {Kind::Diag, a, a};
  }
  static ConstraintIndex off_diag(int b, int c) {
    if (b == c) throw InputError("ConstraintIndex: OffDiag needs distinct indices");
    if (b > c) std::swap(b, c);
    if (b < 1) throw InputError("ConstraintIndex: OffDiag indices must be >= 1");
    return {Kind::OffDiag, b, c};
  }

  /// The component of the regular value: 1/2 for Diag, 0 for OffDiag.
  double regular_value() const { return kind == Kind::Diag ? 0.5 : 0.0; }

  std::string label() const {
    return "F_" + std::to_string(first) + "," + std::to_string(second);
  }

  bool operator==(const ConstraintIndex&) const = default;
};

/// Diag(1..p) followed by OffDiag(b,c) in lexicographic order.
inline std::vector<ConstraintIndex> all_constraints(int p) {
  std::vector<ConstraintIndex> out;
  for (int a = 1; a <= p; ++a) out.push_back(ConstraintIndex::diag(a));
  for (int b = 1; b <= p; ++b) {
    for (int c = b + 1; c <= p; ++c) out.push_back(ConstraintIndex::off_diag(b, c));
  }
  return out;
}

namespace detail {
inline void check_constraint(const ConstraintIndex& idx, Index p) {
  if (idx.first < 1 || idx.second > p || idx.first > idx.second ||
      (idx.kind == ConstraintIndex::Kind::Diag) != (idx.first == idx.second)) {
    throw InputError("constraint " + idx.label() + " out of range for p = " + std::to_string(p));
  }
}
}  // namespace detail

inline double constraint_value(const ConstraintIndex& idx, const Matrix& u) {
  detail::check_constraint(idx, u.cols());
  const auto b = u.col(idx.first - 1);
  const auto c = u.col(idx.second - 1);
  return idx.kind == ConstraintIndex::Kind::Diag ? 0.5 * b.squaredNorm() : b.dot(c);
}

inline Matrix constraint_gradient(const ConstraintIndex& idx, const Matrix& u) {
  detail::check_constraint(idx, u.cols());
  Matrix g = Matrix::Zero(u.rows(), u.cols());
  const Index b = idx.first - 1;
  const Index c = idx.second - 1;
  if (idx.kind == ConstraintIndex::Kind::Diag) {
    g.col(b) = u.col(b);
  } else {
    g.col(b) = u.col(c);
    g.col(c) = u.col(b);
  }
  return g;
}

/// Constant in U; block (i,j) is the n x n block coupling columns u_i, u_j.
inline Matrix constraint_hessian(const ConstraintIndex& idx, Index n, Index p) {
  detail::check_constraint(idx, p);
  Matrix h = Matrix::Zero(n * p, n * p);
  const Index b = idx.first - 1;
  const Index c = idx.second - 1;
  if (idx.kind == ConstraintIndex::Kind::Diag) {
    h.block(b * n, b * n, n, n).setIdentity();
  } else {
    h.block(b * n, c * n, n, n).setIdentity();
    h.block(c * n, b * n, n, n).setIdentity();
  }
  return h;
}

inline Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

/// Q factor of a thin QR with the diagonal of R made positive. Throws
/// DegeneracyError on (numerical) rank loss.
inline Matrix orthonormalize(const Matrix& m) {
  const Index n = m.rows();
  const Index p = m.cols();
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  const Matrix r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  const double scale = r.diagonal().cwiseAbs().maxCoeff();
  for (Index j = 0; j < p; ++j) {
    const double d = r(j, j);
    if (!(std::abs(d) > 1e-13 * scale) || scale == 0.0) {
      throw DegeneracyError("orthonormalize: matrix is numerically rank deficient");
    }
    if (d < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

/// Haar-distributed point: orthogonal factor of a Gaussian matrix.
inline StiefelPoint random_stiefel(Index n, Index p, Rng& rng) {
  if (p < 1 || p > n) {
    throw InputError("random_stiefel: need 1 <= p <= n, got n=" + std::to_string(n) +
                     " p=" + std::to_string(p));
  }
  return StiefelPoint(orthonormalize(gaussian_matrix(n, p, rng)), 1e-12);
}

inline StiefelPoint random_stiefel(Index n, Index p, std::uint64_t seed) {
  Rng rng(seed);
  return random_stiefel(n, p, rng);
}

/// Orthogonal polar factor: the closest Stiefel point in Frobenius norm.
inline StiefelPoint project_to_stiefel(const Matrix& m) {
  if (m.cols() > m.rows() || m.size() == 0) {
    throw InputError("project_to_stiefel: need a nonempty n x p matrix with p <= n");
  }
  if (!m.allFinite()) throw InputError("project_to_stiefel: non-finite entries");
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (!(s(s.size() - 1) > 1e-12 * s(0))) {
    throw InputError("project_to_stiefel: matrix does not have full column rank");
  }
  return StiefelPoint(svd.matrixU() * svd.matrixV().transpose());
}

}  // namespace stiefel
