#pragma once

// Explicit tangent basis of St_p^n built from a full-rank p x p row block,
// the transformation matrix T whose columns are the vectorized basis
// elements, and the orthogonal projector onto the tangent space.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "stiefel/ambient.hpp"
#include "stiefel/lambda.hpp"

namespace stiefel {

inline constexpr double kRankTol = 1e-8;

/// A reordering of the rows of U whose leading p x p block U_1 is invertible.
struct RowSelection {
  /// order[k] is the 0-based original row placed at position k. The first p
  /// entries are the selected rows, each part in ascending original order.
  std::vector<Index> order;
  Index p = 0;
  Matrix u1;  // p x p
  Matrix u2;  // (n-p) x p
  double abs_det_u1 = 0.0;

  std::vector<Index> selected() const { return {order.begin(), order.begin() + p}; }
  std::vector<Index> complement() const { return {order.begin() + p, order.end()}; }

  /// Rows of m reordered by `order`.
  Matrix permute_rows(const Matrix& m) const {
    Matrix out(m.rows(), m.cols());
    for (std::size_t k = 0; k < order.size(); ++k) out.row(k) = m.row(order[k]);
    return out;
  }

  /// Permutation matrix P with P * m == permute_rows(m).
  Matrix permutation_matrix() const {
    const Index n = static_cast<Index>(order.size());
    Matrix pm = Matrix::Zero(n, n);
    for (Index k = 0; k < n; ++k) pm(k, order[k]) = 1.0;
    return pm;
  }
};

/// Builds a selection from an explicit set of p row indices (0-based).
inline RowSelection make_row_selection(const StiefelPoint& point, std::vector<Index> rows,
                                       double tol = kRankTol) {
  const Index n = point.n();
  const Index p = point.p();
  std::sort(rows.begin(), rows.end());
  if (static_cast<Index>(rows.size()) != p ||
      std::adjacent_find(rows.begin(), rows.end()) != rows.end() ||
      (p > 0 && (rows.front() < 0 || rows.back() >= n))) {
    throw InputError("row selection must name p distinct rows of U");
  }
  RowSelection sel;
  sel.p = p;
  sel.order = rows;
  for (Index i = 0; i < n; ++i) {
    if (!std::binary_search(rows.begin(), rows.end(), i)) sel.order.push_back(i);
  }
  const Matrix permuted = sel.permute_rows(point.matrix());
  sel.u1 = permuted.topRows(p);
  sel.u2 = permuted.bottomRows(n - p);
  sel.abs_det_u1 = std::abs(sel.u1.fullPivLu().determinant());
  if (!(sel.abs_det_u1 > tol)) {
    throw DegeneracyError("row selection: |det(U_1)| = " + std::to_string(sel.abs_det_u1) +
                          " does not exceed tolerance");
  }
  return sel;
}

/// Greedy volume-maximizing row pivoting (QR with column pivoting on U^t).
/// Ties go to the lowest row index.
inline RowSelection select_full_rank_rows(const StiefelPoint& point, double tol = kRankTol) {
  const Index n = point.n();
  const Index p = point.p();
  Matrix w = point.matrix();
  std::vector<bool> taken(n, false);
  std::vector<Index> chosen;
  for (Index k = 0; k < p; ++k) {
    Index best = -1;
    double best_norm = -1.0;
    for (Index i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double nrm = w.row(i).norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = i;
      }
    }
    if (!(best_norm > 0.0)) throw DegeneracyError("row selection: U has rank < p");
    taken[best] = true;
    chosen.push_back(best);
    const Eigen::RowVectorXd q = w.row(best) / best_norm;
    for (Index i = 0; i < n; ++i) {
      if (!taken[i]) w.row(i) -= w.row(i).dot(q) * q;
    }
    w.row(best).setZero();
  }
  return make_row_selection(point, std::move(chosen), tol);
}

/// A_ab = (-1)^(a+b) (f_a f_b^t - f_b f_a^t), 1 <= a < b <= p.
inline Matrix skew_basis_matrix(int a, int b, int p) {
  if (!(1 <= a && a < b && b <= p)) {
    throw InputError("skew_basis_matrix: need 1 <= a < b <= p");
  }
  const double sign = ((a + b) % 2 == 0) ? 1.0 : -1.0;
  Matrix m = Matrix::Zero(p, p);
  m(a - 1, b - 1) = sign;
  m(b - 1, a - 1) = -sign;
  return m;
}

struct BasisLabel {
  enum class Kind { Skew, Normal };
  Kind kind;
  /// Skew: (a, b) with a < b. Normal: (i, c) with i the original row. 1-based.
  int first;
  int second;
};

struct TangentBasis {
  std::vector<Matrix> elements;  // Delta'_ab (lexicographic), then Delta''_ic (colexicographic)
  std::vector<BasisLabel> labels;
  Index skew_count = 0;
  RowSelection selection;
  Matrix z;  // I_n - U U^t
};

inline Index manifold_dimension(Index n, Index p) { return n * p - p * (p + 1) / 2; }

inline TangentBasis tangent_basis(const StiefelPoint& point, RowSelection selection) {
  const Matrix& u = point.matrix();
  const Index n = point.n();
  const int p = static_cast<int>(point.p());
  TangentBasis basis;
  basis.z = Matrix::Identity(n, n) - u * u.transpose();
  for (int a = 1; a <= p; ++a) {
    for (int b = a + 1; b <= p; ++b) {
      basis.elements.push_back(u * skew_basis_matrix(a, b, p));
      basis.labels.push_back({BasisLabel::Kind::Skew, a, b});
    }
  }
  basis.skew_count = static_cast<Index>(basis.elements.size());
  const auto rest = selection.complement();
  for (int c = 1; c <= p; ++c) {
    for (Index i : rest) {
      // Z C_ic = Z e_i f_c^t: column c holds the i-th column of Z.
      Matrix d = Matrix::Zero(n, p);
      d.col(c - 1) = basis.z.col(i);
      basis.elements.push_back(std::move(d));
      basis.labels.push_back({BasisLabel::Kind::Normal, static_cast<int>(i) + 1, c});
    }
  }
  basis.selection = std::move(selection);
  return basis;
}

inline TangentBasis tangent_basis(const StiefelPoint& point) {
  return tangent_basis(point, select_full_rank_rows(point));
}

/// max |U^t V + V^t U|
inline double tangency_residual(const Matrix& u, const Matrix& v) {
  return (u.transpose() * v + v.transpose() * u).cwiseAbs().maxCoeff();
}

struct TransformationMatrix {
  Matrix t;  // np x (p(p-1)/2 + p(n-p))
  Index skew_cols = 0;
  std::vector<BasisLabel> labels;

  auto t1() const { return t.leftCols(skew_cols); }
  auto t2() const { return t.rightCols(t.cols() - skew_cols); }
};

inline TransformationMatrix build_T(const TangentBasis& basis) {
  TransformationMatrix tm;
  const Index rows = basis.z.rows() * basis.selection.p;
  tm.t.resize(rows, static_cast<Index>(basis.elements.size()));
  for (std::size_t k = 0; k < basis.elements.size(); ++k) tm.t.col(k) = vec(basis.elements[k]);
  tm.skew_cols = basis.skew_count;
  tm.labels = basis.labels;
  return tm;
}

/// T^t T from its block structure: diag(2 I, I_p kron (I_{n-p} - U_2 U_2^t)).
inline Matrix gram_T_closed(const StiefelPoint& point, const RowSelection& selection) {
  const Index n = point.n();
  const Index p = point.p();
  const Index skew = p * (p - 1) / 2;
  const Index normal = p * (n - p);
  Matrix g = Matrix::Zero(skew + normal, skew + normal);
  g.topLeftCorner(skew, skew).diagonal().setConstant(2.0);
  if (normal > 0) {
    const Matrix block =
        Matrix::Identity(n - p, n - p) - selection.u2 * selection.u2.transpose();
    g.bottomRightCorner(normal, normal) = kron(Matrix::Identity(p, p), block);
  }
  return g;
}

/// (I_{n-p} - U_2 U_2^t)^{-1} = I_{n-p} + U_2 U_1^{-1} U_1^{-t} U_2^t
inline Matrix woodbury_inverse(const RowSelection& selection) {
  const Index m = selection.u2.rows();
  const Matrix x = selection.u1.transpose().fullPivLu().solve(selection.u2.transpose());  // U_1^{-t} U_2^t
  return Matrix::Identity(m, m) + x.transpose() * x;
}

/// 1/2 T_1 T_1^t + T_2 (I_p kron W) T_2^t, W the Woodbury inverse, for a
/// given row selection.
inline Matrix projector_woodbury(const StiefelPoint& point, const RowSelection& selection) {
  const Index n = point.n();
  const Index p = point.p();
  const TangentBasis basis = tangent_basis(point, selection);
  const TransformationMatrix tm = build_T(basis);
  Matrix out = 0.5 * tm.t1() * tm.t1().transpose();
  if (n > p) {
    const Matrix w = kron(Matrix::Identity(p, p), woodbury_inverse(selection));
    out += tm.t2() * w * tm.t2().transpose();
  }
  return out;
}

enum class ProjectorPath {
  Closed,    // I - 1/2 I_p kron UU^t - 1/2 Lambda(U)
  Woodbury,  // 1/2 T_1 T_1^t + T_2 (I_p kron W) T_2^t
  Direct,    // T (T^t T)^{-1} T^t with a generic solve
};

inline Matrix projector(const StiefelPoint& point, ProjectorPath path = ProjectorPath::Closed,
                        const DenseLimits& limits = {}) {
  const Index n = point.n();
  const Index p = point.p();
  require_dense_size(n * p, limits, "projector");
  switch (path) {
    case ProjectorPath::Closed:
      return Matrix::Identity(n * p, n * p) - 0.5 * kron_identity_uut(point) - 0.5 * lambda_of(point);
    case ProjectorPath::Woodbury:
      return projector_woodbury(point, select_full_rank_rows(point));
    case ProjectorPath::Direct: {
      const TransformationMatrix tm = build_T(tangent_basis(point));
      if (tm.t.cols() == 0) return Matrix::Zero(n * p, n * p);
      const Matrix gram = tm.t.transpose() * tm.t;
      return tm.t * gram.ldlt().solve(tm.t.transpose());
    }
  }
  throw std::logic_error("unknown projector path");
}

/// Matrix form of the projector: W - U sym(U^t W).
inline Matrix apply_projector(const StiefelPoint& point, const Matrix& w) {
  require_shape(w, point.n(), point.p(), "apply_projector");
  const Matrix& u = point.matrix();
  const Matrix utw = u.transpose() * w;
  return w - 0.5 * u * (utw + utw.transpose());
}

}  // namespace stiefel
