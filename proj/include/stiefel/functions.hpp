#pragma once

// Scalar fields f : M_{n x p}(R) -> R with value, gradient (n x p, matrix
// form) and Hessian (np x np; block (i,j) differentiates against the columns
// u_i and u_j).

#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stiefel/ambient.hpp"
#include "stiefel/expression.hpp"
#include "stiefel/hyperdual.hpp"

namespace stiefel {

class FieldImpl {
 public:
  virtual ~FieldImpl() = default;
  virtual double value(const Matrix& u) const = 0;
  virtual Matrix gradient(const Matrix& u) const = 0;
  virtual Matrix hessian(const Matrix& u) const = 0;
  virtual std::string describe() const = 0;
};

/// Immutable, cheap to copy, safe to share across threads.
class ScalarField {
 public:
  ScalarField(Index n, Index p, std::shared_ptr<const FieldImpl> impl)
      : n_(n), p_(p), impl_(std::move(impl)) {}

  Index n() const { return n_; }
  Index p() const { return p_; }
  std::string describe() const { return impl_->describe(); }

  double value(const Matrix& u) const {
    check(u);
    return impl_->value(u);
  }
  Matrix gradient(const Matrix& u) const {
    check(u);
    return impl_->gradient(u);
  }
  Matrix hessian(const Matrix& u) const {
    check(u);
    return impl_->hessian(u);
  }

 private:
  void check(const Matrix& u) const { require_shape(u, n_, p_, "scalar field argument"); }

  Index n_;
  Index p_;
  std::shared_ptr<const FieldImpl> impl_;
};

inline double field_value(const ScalarField& f, const Matrix& u) { return f.value(u); }
inline Matrix field_gradient(const ScalarField& f, const Matrix& u) { return f.gradient(u); }
inline Matrix field_hessian(const ScalarField& f, const Matrix& u) { return f.hessian(u); }

// ---------------------------------------------------------------------------
// Built-in families

/// f(U) = tr(A^t U)
struct LinearFamily {
  Matrix a;
};

/// f(U) = tr(U^t B U C), B symmetric n x n, C = diag(c) p x p
struct BrockettFamily {
  Matrix b;
  Vector c;
};

/// f(U) = 1/2 |A U - B|_F^2, A m x n, B m x p
struct ProcrustesFamily {
  Matrix a;
  Matrix b;
};

using BuiltinFamily = std::variant<LinearFamily, BrockettFamily, ProcrustesFamily>;

namespace detail {

class LinearField final : public FieldImpl {
 public:
  explicit LinearField(Matrix a) : a_(std::move(a)) {}
  double value(const Matrix& u) const override { return (a_.array() * u.array()).sum(); }
  Matrix gradient(const Matrix&) const override { return a_; }
  Matrix hessian(const Matrix&) const override { return Matrix::Zero(a_.size(), a_.size()); }
  std::string describe() const override { return "linear"; }

 private:
  Matrix a_;
};

class BrockettField final : public FieldImpl {
 public:
  BrockettField(Matrix b, Vector c) : b_(std::move(b)), c_(std::move(c)) {}
  double value(const Matrix& u) const override {
    return ((b_ * u).array() * u.array()).matrix().colwise().sum().dot(c_);
  }
  Matrix gradient(const Matrix& u) const override { return 2.0 * b_ * u * c_.asDiagonal(); }
  Matrix hessian(const Matrix&) const override {
    const Index n = b_.rows();
    const Index p = c_.size();
    Matrix h = Matrix::Zero(n * p, n * p);
    for (Index a = 0; a < p; ++a) h.block(a * n, a * n, n, n) = 2.0 * c_(a) * b_;
    return h;
  }
  std::string describe() const override { return "brockett"; }

 private:
  Matrix b_;
  Vector c_;
};

class ProcrustesField final : public FieldImpl {
 public:
  ProcrustesField(Matrix a, Matrix b) : a_(std::move(a)), b_(std::move(b)), ata_(a_.transpose() * a_) {}
  double value(const Matrix& u) const override { return 0.5 * (a_ * u - b_).squaredNorm(); }
  Matrix gradient(const Matrix& u) const override { return a_.transpose() * (a_ * u - b_); }
  Matrix hessian(const Matrix&) const override {
    return kron(Matrix::Identity(b_.cols(), b_.cols()), ata_);
  }
  std::string describe() const override { return "procrustes"; }

 private:
  Matrix a_;
  Matrix b_;
  Matrix ata_;
};

class ConstantField final : public FieldImpl {
 public:
  ConstantField(Index n, Index p, double c) : n_(n), p_(p), c_(c) {}
  double value(const Matrix&) const override { return c_; }
  Matrix gradient(const Matrix&) const override { return Matrix::Zero(n_, p_); }
  Matrix hessian(const Matrix&) const override { return Matrix::Zero(n_ * p_, n_ * p_); }
  std::string describe() const override { return "constant(" + format_number(c_) + ")"; }

 private:
  Index n_;
  Index p_;
  double c_;
};

class ConstraintField final : public FieldImpl {
 public:
  ConstraintField(ConstraintIndex idx, Index n, Index p) : idx_(idx), n_(n), p_(p) {
    check_constraint(idx_, p_);
  }
  double value(const Matrix& u) const override { return constraint_value(idx_, u); }
  Matrix gradient(const Matrix& u) const override { return constraint_gradient(idx_, u); }
  Matrix hessian(const Matrix&) const override { return constraint_hessian(idx_, n_, p_); }
  std::string describe() const override { return idx_.label(); }

 private:
  ConstraintIndex idx_;
  Index n_;
  Index p_;
};

/// Value, gradient and Hessian by hyper-dual evaluation. Only variables that
/// occur in the expression are seeded; one pass per unordered pair.
class ExpressionField final : public FieldImpl {
 public:
  explicit ExpressionField(ExpressionAst ast) : ast_(std::move(ast)) {
    for (const auto& [row, col] : ast_.variables()) {
      slots_.push_back(static_cast<Index>(col - 1) * ast_.n() + (row - 1));
    }
  }

  double value(const Matrix& u) const override {
    const double v = ast_.evaluate<double>([&](int i, int j) { return u(i, j); });
    if (!std::isfinite(v)) throw DomainError("non-finite value", "expression root");
    return v;
  }

  Matrix gradient(const Matrix& u) const override {
    Vector g = Vector::Zero(u.size());
    for (Index s : slots_) g(s) = seeded(u, s, -1).b;
    return unvec(g, u.rows(), u.cols());
  }

  Matrix hessian(const Matrix& u) const override {
    const Index m = u.size();
    Matrix h = Matrix::Zero(m, m);
    for (std::size_t k = 0; k < slots_.size(); ++k) {
      for (std::size_t l = k; l < slots_.size(); ++l) {
        const double d = seeded(u, slots_[k], slots_[l]).d;
        h(slots_[k], slots_[l]) = d;
        h(slots_[l], slots_[k]) = d;
      }
    }
    return h;
  }

  std::string describe() const override { return "expression(" + ast_.source() + ")"; }

 private:
  using HD = HyperDual<double>;

  // e1 seeded on slot k; e2 on slot l (l < 0: e2 unseeded).
  HD seeded(const Matrix& u, Index k, Index l) const {
    const Index n = u.rows();
    HD r = ast_.evaluate<HD>([&](int i, int j) {
      const Index s = static_cast<Index>(j) * n + i;
      return HD(u(i, j), s == k ? 1.0 : 0.0, s == l ? 1.0 : 0.0, 0.0);
    });
    if (!std::isfinite(r.a) || !std::isfinite(r.b) || !std::isfinite(r.c) || !std::isfinite(r.d)) {
      throw DomainError("non-finite derivative", "expression root");
    }
    return r;
  }

  ExpressionAst ast_;
  std::vector<Index> slots_;
};

struct Term {
  double coeff;
  ScalarField field;
};

class LinearCombinationField final : public FieldImpl {
 public:
  explicit LinearCombinationField(std::vector<Term> terms) : terms_(std::move(terms)) {}
  double value(const Matrix& u) const override {
    double acc = 0.0;
    for (const auto& t : terms_) acc += t.coeff * t.field.value(u);
    return acc;
  }
  Matrix gradient(const Matrix& u) const override {
    Matrix acc = Matrix::Zero(u.rows(), u.cols());
    for (const auto& t : terms_) acc += t.coeff * t.field.gradient(u);
    return acc;
  }
  Matrix hessian(const Matrix& u) const override {
    Matrix acc = Matrix::Zero(u.size(), u.size());
    for (const auto& t : terms_) acc += t.coeff * t.field.hessian(u);
    return acc;
  }
  std::string describe() const override {
    std::string s = "sum(";
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      if (i) s += ", ";
      s += format_number(terms_[i].coeff) + "*" + terms_[i].field.describe();
    }
    return s + ")";
  }

 private:
  std::vector<Term> terms_;
};

class ProductField final : public FieldImpl {
 public:
  ProductField(ScalarField f, ScalarField g) : f_(std::move(f)), g_(std::move(g)) {}
  double value(const Matrix& u) const override { return f_.value(u) * g_.value(u); }
  Matrix gradient(const Matrix& u) const override {
    return f_.value(u) * g_.gradient(u) + g_.value(u) * f_.gradient(u);
  }
  Matrix hessian(const Matrix& u) const override {
    const Vector df = vec(f_.gradient(u));
    const Vector dg = vec(g_.gradient(u));
    Matrix h = f_.value(u) * g_.hessian(u) + g_.value(u) * f_.hessian(u);
    h.noalias() += df * dg.transpose();
    h.noalias() += dg * df.transpose();
    return h;
  }
  std::string describe() const override {
    return "product(" + f_.describe() + ", " + g_.describe() + ")";
  }

 private:
  ScalarField f_;
  ScalarField g_;
};

/// g(U) = f(Q U R). With L = R^t kron Q, vec(QUR) = L vec(U).
class CompositionField final : public FieldImpl {
 public:
  CompositionField(ScalarField f, Matrix q, Matrix r)
      : f_(std::move(f)), q_(std::move(q)), r_(std::move(r)), lin_(kron(r_.transpose(), q_)) {}
  double value(const Matrix& u) const override { return f_.value(q_ * u * r_); }
  Matrix gradient(const Matrix& u) const override {
    return q_.transpose() * f_.gradient(q_ * u * r_) * r_.transpose();
  }
  Matrix hessian(const Matrix& u) const override {
    return lin_.transpose() * f_.hessian(q_ * u * r_) * lin_;
  }
  std::string describe() const override { return "compose(" + f_.describe() + ", Q, R)"; }

 private:
  ScalarField f_;
  Matrix q_;
  Matrix r_;
  Matrix lin_;
};

inline void require_same_shape(const ScalarField& f, const ScalarField& g) {
  if (f.n() != g.n() || f.p() != g.p()) throw InputError("fields have different shapes");
}

}  // namespace detail

inline ScalarField make_field(const LinearFamily& fam) {
  if (fam.a.size() == 0 || !fam.a.allFinite()) throw InputError("linear field: invalid A");
  return {fam.a.rows(), fam.a.cols(), std::make_shared<detail::LinearField>(fam.a)};
}

inline ScalarField make_field(const BrockettFamily& fam) {
  if (fam.b.rows() != fam.b.cols() || fam.b.size() == 0 || fam.c.size() == 0) {
    throw InputError("brockett field: B must be square and C nonempty");
  }
  if (!fam.b.allFinite() || !fam.c.allFinite()) throw InputError("brockett field: non-finite entries");
  if ((fam.b - fam.b.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InputError("brockett field: B is not symmetric");
  }
  if (fam.c.size() > fam.b.rows()) throw InputError("brockett field: need p <= n");
  return {fam.b.rows(), fam.c.size(), std::make_shared<detail::BrockettField>(fam.b, fam.c)};
}

inline ScalarField make_field(const ProcrustesFamily& fam) {
  if (fam.a.rows() != fam.b.rows() || fam.a.size() == 0 || fam.b.size() == 0) {
    throw InputError("procrustes field: A and B must have the same number of rows");
  }
  if (!fam.a.allFinite() || !fam.b.allFinite()) throw InputError("procrustes field: non-finite entries");
  return {fam.a.cols(), fam.b.cols(), std::make_shared<detail::ProcrustesField>(fam.a, fam.b)};
}

inline ScalarField make_field(const BuiltinFamily& fam) {
  return std::visit([](const auto& f) { return make_field(f); }, fam);
}

inline ScalarField expression_field(ExpressionAst ast) {
  const Index n = ast.n();
  const Index p = ast.p();
  return {n, p, std::make_shared<detail::ExpressionField>(std::move(ast))};
}

inline ScalarField expression_field(std::string_view source, int n, int p) {
  return expression_field(parse_expression(source, n, p));
}

inline ScalarField constant_field(Index n, Index p, double c) {
  return {n, p, std::make_shared<detail::ConstantField>(n, p, c)};
}

/// The constraint function F_alpha as an ambient field.
inline ScalarField constraint_field(const ConstraintIndex& idx, Index n, Index p) {
  return {n, p, std::make_shared<detail::ConstraintField>(idx, n, p)};
}

/// alpha f + beta g
inline ScalarField combine(double alpha, const ScalarField& f, double beta, const ScalarField& g) {
  detail::require_same_shape(f, g);
  return {f.n(), f.p(),
          std::make_shared<detail::LinearCombinationField>(
              std::vector<detail::Term>{{alpha, f}, {beta, g}})};
}

inline ScalarField operator+(const ScalarField& f, const ScalarField& g) { return combine(1.0, f, 1.0, g); }

inline ScalarField operator*(const ScalarField& f, const ScalarField& g) {
  detail::require_same_shape(f, g);
  return {f.n(), f.p(), std::make_shared<detail::ProductField>(f, g)};
}

/// g(U) = f(Q U R) for Q n x n and R p x p.
inline ScalarField compose(const ScalarField& f, const Matrix& q, const Matrix& r) {
  require_shape(q, f.n(), f.n(), "compose: Q");
  require_shape(r, f.p(), f.p(), "compose: R");
  return {f.n(), f.p(), std::make_shared<detail::CompositionField>(f, q, r)};
}

// ---------------------------------------------------------------------------
// Finite-difference oracles

inline constexpr double kFdGradientStep = 1e-6;
inline constexpr double kFdHessianStep = 1e-4;

inline Matrix fd_gradient(const ScalarField& f, const Matrix& u, double step = kFdGradientStep) {
  if (!(step > 0.0)) throw InputError("fd_gradient: step must be positive");
  Matrix g(u.rows(), u.cols());
  Matrix x = u;
  for (Index j = 0; j < u.cols(); ++j) {
    for (Index i = 0; i < u.rows(); ++i) {
      x(i, j) = u(i, j) + step;
      const double fp = f.value(x);
      x(i, j) = u(i, j) - step;
      const double fm = f.value(x);
      x(i, j) = u(i, j);
      g(i, j) = (fp - fm) / (2.0 * step);
    }
  }
  return g;
}

/// Central second differences on vec(U), symmetrized.
inline Matrix fd_hessian(const ScalarField& f, const Matrix& u, double step = kFdHessianStep) {
  if (!(step > 0.0)) throw InputError("fd_hessian: step must be positive");
  const Index m = u.size();
  Vector x0 = vec(u);
  auto eval = [&](Index k, double sk, Index l, double sl) {
    Vector x = x0;
    x(k) += sk;
    x(l) += sl;
    return f.value(unvec(x, u.rows(), u.cols()));
  };
  Matrix h(m, m);
  for (Index k = 0; k < m; ++k) {
    for (Index l = 0; l < m; ++l) {
      h(k, l) = (eval(k, step, l, step) - eval(k, step, l, -step) - eval(k, -step, l, step) +
                 eval(k, -step, l, -step)) /
                (4.0 * step * step);
    }
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace stiefel
