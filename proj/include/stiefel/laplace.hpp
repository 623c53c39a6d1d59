#pragma once

// Laplace-Beltrami operator on St_p^n for the Frobenius (embedded) metric,
// evaluated from the Euclidean gradient and Hessian of any smooth
// prolongation f of the function on the manifold:
//
//   Lap f~ = Lap f - (n - (p+1)/2) tr(U^t grad f)
//            - 1/2 tr((I_p kron UU^t + Lambda(U)) Hess f)
//
// The sign convention makes the operator negative semi-definite (it is the
// trace of the Riemannian Hessian).

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "stiefel/ambient.hpp"
#include "stiefel/functions.hpp"
#include "stiefel/lambda.hpp"
#include "stiefel/tangent.hpp"

namespace stiefel {

enum class Method { ClosedDense, ClosedBlock, FrameOracle, Sphere, SpecialOrthogonal };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::ClosedDense: return "closed-dense";
    case Method::ClosedBlock: return "closed-block";
    case Method::FrameOracle: return "frame-oracle";
    case Method::Sphere: return "sphere";
    case Method::SpecialOrthogonal: return "special-orthogonal";
  }
  return "?";
}

struct Diagnostics {
  std::optional<double> abs_det_u1;
  double orthonormality_residual = 0.0;
  /// Relative gap between the dense and block closed-form paths, when both ran.
  std::optional<double> path_discrepancy;
  double elapsed_seconds = 0.0;
};

struct LaplaceReport {
  double value = 0.0;
  Method method = Method::ClosedBlock;
  Diagnostics diagnostics;
};

/// |a - b| / max(1, |b|)
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

/// n - (p+1)/2
inline double closed_form_coefficient(Index n, Index p) {
  return static_cast<double>(n) - 0.5 * static_cast<double>(p + 1);
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void require_field_shape(const ScalarField& f, const StiefelPoint& point) {
  if (f.n() != point.n() || f.p() != point.p()) {
    throw InputError("field shape " + std::to_string(f.n()) + "x" + std::to_string(f.p()) +
                     " does not match point shape " + std::to_string(point.n()) + "x" +
                     std::to_string(point.p()));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lagrange multipliers

/// Sigma(U) from the componentwise formulas
///   sigma_aa = <df/du_a, u_a>,  sigma_bc = 1/2 (<df/du_c, u_b> + <df/du_b, u_c>).
inline Matrix sigma_from_gradient(const Matrix& grad, const Matrix& u) {
  const Index p = u.cols();
  Matrix s(p, p);
  for (Index a = 0; a < p; ++a) s(a, a) = grad.col(a).dot(u.col(a));
  for (Index b = 0; b < p; ++b) {
    for (Index c = b + 1; c < p; ++c) {
      const double v = 0.5 * (grad.col(c).dot(u.col(b)) + grad.col(b).dot(u.col(c)));
      s(b, c) = v;
      s(c, b) = v;
    }
  }
  return s;
}

inline Matrix sigma_of(const ScalarField& f, const StiefelPoint& point) {
  detail::require_field_shape(f, point);
  return sigma_from_gradient(f.gradient(point.matrix()), point.matrix());
}

/// Multipliers as ratios of Gram determinants (Cramer's rule on
/// G sigma = b with G_ab = <grad F_a, grad F_b>, b_a = <grad F_a, grad f>).
inline Matrix sigma_gram_oracle(const ScalarField& f, const StiefelPoint& point) {
  detail::require_field_shape(f, point);
  const Matrix& u = point.matrix();
  const auto constraints = all_constraints(static_cast<int>(point.p()));
  const Index k = static_cast<Index>(constraints.size());

  std::vector<Matrix> grads;
  grads.reserve(constraints.size());
  for (const auto& c : constraints) grads.push_back(constraint_gradient(c, u));
  const Matrix gf = f.gradient(u);

  Matrix gram(k, k);
  Vector rhs(k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) gram(a, b) = (grads[a].array() * grads[b].array()).sum();
    rhs(a) = (grads[a].array() * gf.array()).sum();
  }
  const double det = gram.fullPivLu().determinant();
  const double scale = std::pow(gram.cwiseAbs().maxCoeff(), static_cast<double>(k));
  if (!(std::abs(det) > 1e-12 * scale)) {
    throw DegeneracyError("sigma_gram_oracle: constraint Gram matrix is singular");
  }

  Matrix sigma = Matrix::Zero(point.p(), point.p());
  for (Index a = 0; a < k; ++a) {
    Matrix replaced = gram;
    replaced.col(a) = rhs;
    const double value = replaced.fullPivLu().determinant() / det;
    const auto& c = constraints[a];
    sigma(c.first - 1, c.second - 1) = value;
    sigma(c.second - 1, c.first - 1) = value;
  }
  return sigma;
}

// ---------------------------------------------------------------------------
// Closed form

namespace detail {

struct ClosedTerms {
  double laplacian = 0.0;     // Lap f = tr(Hess f)
  double trace_ut_grad = 0.0; // tr(U^t grad f)
  double trace_uut = 0.0;     // tr((I_p kron UU^t) Hess f)
  double trace_lambda = 0.0;  // tr(Lambda(U) Hess f)
};

inline double assemble(const ClosedTerms& t, Index n, Index p) {
  return t.laplacian - closed_form_coefficient(n, p) * t.trace_ut_grad -
         0.5 * (t.trace_uut + t.trace_lambda);
}

// Contracts n x n blocks of H directly; never forms np x np auxiliaries.
inline ClosedTerms block_terms(const Matrix& u, const Matrix& grad, const Matrix& hess) {
  const Index n = u.rows();
  const Index p = u.cols();
  ClosedTerms t;
  t.laplacian = hess.trace();
  t.trace_ut_grad = (u.array() * grad.array()).sum();
  for (Index a = 0; a < p; ++a) {
    const auto haa = hess.block(a * n, a * n, n, n);
    t.trace_uut += (u.transpose() * haa * u).trace();
  }
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      t.trace_lambda += u.col(i).dot(hess.block(j * n, i * n, n, n) * u.col(j));
    }
  }
  return t;
}

inline ClosedTerms dense_terms(const StiefelPoint& point, const Matrix& grad, const Matrix& hess) {
  ClosedTerms t;
  t.laplacian = hess.trace();
  t.trace_ut_grad = (point.matrix().transpose() * grad).trace();
  // tr(M H) = sum(M .* H^t)
  t.trace_uut = (kron_identity_uut(point).array() * hess.transpose().array()).sum();
  t.trace_lambda = (lambda_of(point).array() * hess.transpose().array()).sum();
  return t;
}

}  // namespace detail

/// Evaluates the closed form by block contraction and, when np fits the
/// dense cap, also by literal np x np products; the two must agree to 1e-10
/// (relative, floor 1). Returns the block value.
inline LaplaceReport laplace_closed(const ScalarField& f, const StiefelPoint& point,
                                    const DenseLimits& limits = {}) {
  detail::require_field_shape(f, point);
  detail::Stopwatch watch;
  const Matrix& u = point.matrix();
  const Index n = point.n();
  const Index p = point.p();
  const Matrix grad = f.gradient(u);
  const Matrix hess = f.hessian(u);

  LaplaceReport report;
  report.method = Method::ClosedBlock;
  report.value = detail::assemble(detail::block_terms(u, grad, hess), n, p);
  report.diagnostics.orthonormality_residual = point.residual();
  if (n * p <= limits.max_dim) {
    const double dense = detail::assemble(detail::dense_terms(point, grad, hess), n, p);
    const double gap = relative_error(dense, report.value);
    report.diagnostics.path_discrepancy = gap;
    if (!(gap <= 1e-10)) {
      throw DegeneracyError("laplace_closed: dense and block paths disagree (relative gap " +
                            std::to_string(gap) + ")");
    }
  }
  if (!std::isfinite(report.value)) throw DegeneracyError("laplace_closed: non-finite value");
  report.diagnostics.elapsed_seconds = watch.seconds();
  return report;
}

/// Dense path only; kept for tests and reports.
inline LaplaceReport laplace_closed_dense(const ScalarField& f, const StiefelPoint& point,
                                          const DenseLimits& limits = {}) {
  detail::require_field_shape(f, point);
  require_dense_size(point.n() * point.p(), limits, "laplace_closed_dense");
  detail::Stopwatch watch;
  const Matrix grad = f.gradient(point.matrix());
  const Matrix hess = f.hessian(point.matrix());
  LaplaceReport report;
  report.method = Method::ClosedDense;
  report.value = detail::assemble(detail::dense_terms(point, grad, hess), point.n(), point.p());
  report.diagnostics.orthonormality_residual = point.residual();
  report.diagnostics.elapsed_seconds = watch.seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Adapted-frame formula

/// tr(P Hess f) - sum_alpha sigma_alpha tr(P Hess F_alpha) with
/// P = T (T^t T)^{-1} T^t from the explicit tangent basis and sigma from
/// the Gram determinants.
inline LaplaceReport laplace_frame_oracle(const ScalarField& f, const StiefelPoint& point,
                                          const RowSelection& selection,
                                          const DenseLimits& limits = {}) {
  detail::require_field_shape(f, point);
  const Index n = point.n();
  const Index p = point.p();
  require_dense_size(n * p, limits, "laplace_frame_oracle");
  detail::Stopwatch watch;

  const TangentBasis basis = tangent_basis(point, selection);
  const TransformationMatrix tm = build_T(basis);
  Matrix proj = Matrix::Zero(n * p, n * p);
  if (tm.t.cols() > 0) {
    const Matrix gram = tm.t.transpose() * tm.t;
    proj = tm.t * gram.ldlt().solve(tm.t.transpose());
  }

  const Matrix hess = f.hessian(point.matrix());
  const Matrix sigma = sigma_gram_oracle(f, point);

  double value = (proj * hess).trace();
  for (const auto& c : all_constraints(static_cast<int>(p))) {
    const double s = sigma(c.first - 1, c.second - 1);
    value -= s * (proj * constraint_hessian(c, n, p)).trace();
  }

  LaplaceReport report;
  report.method = Method::FrameOracle;
  report.value = value;
  report.diagnostics.abs_det_u1 = basis.selection.abs_det_u1;
  report.diagnostics.orthonormality_residual = point.residual();
  report.diagnostics.elapsed_seconds = watch.seconds();
  if (!std::isfinite(value)) throw DegeneracyError("laplace_frame_oracle: non-finite value");
  return report;
}

inline LaplaceReport laplace_frame_oracle(const ScalarField& f, const StiefelPoint& point,
                                          const DenseLimits& limits = {}) {
  require_dense_size(point.n() * point.p(), limits, "laplace_frame_oracle");
  return laplace_frame_oracle(f, point, select_full_rank_rows(point), limits);
}

// ---------------------------------------------------------------------------
// Riemannian Hessian

/// vec(V1)^t (Hess f - Sigma kron I_n) vec(V2) for tangent V1, V2.
/// Symmetric in (V1, V2) bit for bit.
inline double riemannian_hessian_form(const ScalarField& f, const StiefelPoint& point,
                                      const Matrix& v1, const Matrix& v2,
                                      double tangency_tol = 1e-8) {
  detail::require_field_shape(f, point);
  require_shape(v1, point.n(), point.p(), "riemannian_hessian_form: V1");
  require_shape(v2, point.n(), point.p(), "riemannian_hessian_form: V2");
  const Matrix& u = point.matrix();
  if (tangency_residual(u, v1) > tangency_tol || tangency_residual(u, v2) > tangency_tol) {
    throw InputError("riemannian_hessian_form: arguments must be tangent at U");
  }
  const Matrix hess = f.hessian(u);
  const Matrix sigma = sigma_from_gradient(f.gradient(u), u);
  const Vector x = vec(v1);
  const Vector y = vec(v2);
  // (Sigma kron I_n) vec(V) = vec(V Sigma^t)
  auto form = [&](const Vector& a, const Vector& b, const Matrix& bm) {
    return a.dot(hess * b) - a.dot(vec(bm * sigma.transpose()));
  };
  return 0.5 * (form(x, y, v2) + form(y, x, v1));
}

// ---------------------------------------------------------------------------
// Reductions

/// p = 1: Lap f - (n-1) <grad f, u> - u^t Hess f u.
inline double sphere_laplacian(const ScalarField& f, const Vector& u, double tol = kOrthonormalityTol) {
  if (f.p() != 1 || f.n() != u.size()) {
    throw InputError("sphere_laplacian: needs a field on n x 1 matrices matching u");
  }
  if (!u.allFinite() || !(std::abs(u.norm() - 1.0) <= tol)) {
    throw InputError("sphere_laplacian: u must be a unit vector");
  }
  const Matrix um = u;
  const Matrix hess = f.hessian(um);
  const Vector grad = vec(f.gradient(um));
  const double n = static_cast<double>(u.size());
  return hess.trace() - (n - 1.0) * grad.dot(u) - u.dot(hess * u);
}

/// (n - 1) / 2
inline double special_orthogonal_coefficient(Index n) { return 0.5 * static_cast<double>(n - 1); }

/// p = n: Lap f - ((n-1)/2) tr(U^t grad f) - 1/2 tr((I + Lambda(U)) Hess f).
inline double special_orthogonal_laplacian(const ScalarField& f, const StiefelPoint& point) {
  if (point.p() != point.n()) throw InputError("special_orthogonal_laplacian: needs p = n");
  detail::require_field_shape(f, point);
  const Matrix& u = point.matrix();
  const Matrix hess = f.hessian(u);
  const Matrix grad = f.gradient(u);
  const double lap = hess.trace();
  const double trace_lambda = (lambda_of(point).array() * hess.transpose().array()).sum();
  return lap - special_orthogonal_coefficient(point.n()) * (u.array() * grad.array()).sum() -
         0.5 * (lap + trace_lambda);
}

}  // namespace stiefel
