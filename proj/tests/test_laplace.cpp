#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stiefel/lambda.hpp"
#include "stiefel/laplace.hpp"
#include "stiefel/verify.hpp"

using namespace stiefel;

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Matrix e(Index n, Index i) {
  Matrix m = Matrix::Zero(n, 1);
  m(i, 0) = 1.0;
  return m;
}

ScalarField frobenius_squared(Index n, Index p) {
  std::string src;
  for (Index j = 1; j <= p; ++j) {
    for (Index i = 1; i <= n; ++i) {
      if (!src.empty()) src += " + ";
      src += "u[" + std::to_string(i) + "," + std::to_string(j) + "]^2";
    }
  }
  return expression_field(src, static_cast<int>(n), static_cast<int>(p));
}

}  // namespace

TEST(Lambda, Examples) {
  Rng rng(1);
  const StiefelPoint s = random_stiefel(4, 1, rng);
  EXPECT_LE(max_abs(lambda_of(s) - s.matrix() * s.matrix().transpose()), 1e-16);

  EXPECT_EQ(lambda_of(StiefelPoint(Matrix::Identity(2, 2))), commutation_matrix(2, 2));

  for (int k = 0; k < 20; ++k) {
    const Index n = 2 + k % 6;
    const Index p = 1 + k % n;
    const StiefelPoint u = random_stiefel(n, p, rng);
    const Matrix l = lambda_of(u);
    EXPECT_NEAR(l.trace(), double(p), 1e-13);
    EXPECT_EQ(l, l.transpose());
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        EXPECT_EQ(l.block(i * n, j * n, n, n), u.matrix().col(j) * u.matrix().col(i).transpose());
      }
    }
  }
}

TEST(Sigma, Examples) {
  const StiefelPoint i32(Matrix::Identity(3, 2));
  EXPECT_EQ(sigma_of(make_field(LinearFamily{Matrix::Identity(3, 2)}), i32), Matrix::Identity(2, 2));
  EXPECT_EQ(sigma_of(constant_field(3, 2, 7.0), i32), Matrix::Zero(2, 2));
  EXPECT_LE(max_abs(sigma_gram_oracle(constant_field(3, 2, 7.0), i32)), 1e-15);

  Rng rng(2);
  const StiefelPoint u = random_stiefel(4, 3, rng);
  const Matrix s = sigma_gram_oracle(constraint_field(ConstraintIndex::diag(2), 4, 3), u);
  Matrix expected = Matrix::Zero(3, 3);
  expected(1, 1) = 1.0;
  EXPECT_LE(max_abs(s - expected), 1e-12);
}

TEST(Sigma, ComponentwiseAndGramAgree) {
  const verify::Tolerances tol;
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Index n = 1 + k % 6;
    const Index p = 1 + (k / 6) % n;
    const StiefelPoint u = random_stiefel(n, p, rng);
    const ScalarField f = verify::random_field(verify::sweep_kind(k), n, p, rng).field;
    const Matrix s = sigma_of(f, u);
    EXPECT_EQ(s, s.transpose());
    EXPECT_LE(max_abs(s - sigma_gram_oracle(f, u)), tol.get("sigma"));
    const Matrix g = f.gradient(u.matrix());
    EXPECT_LE(max_abs(s - 0.5 * (g.transpose() * u.matrix() + u.matrix().transpose() * g)), 1e-13);
  }
}

TEST(LaplaceClosed, ConstraintsAreAnnihilated) {
  Rng rng(4);
  for (Index n = 1; n <= 6; ++n) {
    for (Index p = 1; p <= n; ++p) {
      const StiefelPoint u = random_stiefel(n, p, rng);
      for (const auto& c : all_constraints(static_cast<int>(p))) {
        const ScalarField f = constraint_field(c, n, p);
        EXPECT_NEAR(laplace_closed(f, u).value, 0.0, 1e-12) << c.label();
        EXPECT_NEAR(laplace_frame_oracle(f, u).value, 0.0, 1e-10) << c.label();
      }
    }
  }
}

TEST(LaplaceClosed, FrobeniusNormIsConstant) {
  Rng rng(5);
  for (Index n = 1; n <= 6; ++n) {
    for (Index p = 1; p <= n; ++p) {
      EXPECT_NEAR(laplace_closed(frobenius_squared(n, p), random_stiefel(n, p, rng)).value, 0.0, 1e-11);
    }
  }
}

TEST(LaplaceClosed, LinearOnTheCircle) {
  const StiefelPoint u(e(3, 0));
  const LaplaceReport r = laplace_closed(make_field(LinearFamily{e(3, 0)}), u);
  EXPECT_NEAR(r.value, -2.0, 1e-15);
  EXPECT_EQ(r.method, Method::ClosedBlock);
  ASSERT_TRUE(r.diagnostics.path_discrepancy.has_value());
  EXPECT_LE(*r.diagnostics.path_discrepancy, 1e-10);
}

TEST(LaplaceClosed, ZonalHarmonic) {
  const ScalarField f = expression_field("3*u[3,1]^2 - 1", 3, 1);
  const StiefelPoint u(e(3, 2));
  const double expected = oracle::sphere_eigenvalue(2, 3) * f.value(u.matrix());
  EXPECT_DOUBLE_EQ(expected, -12.0);
  EXPECT_NEAR(laplace_closed(f, u).value, expected, 1e-12);
}

TEST(LaplaceClosed, DenseAndBlockAgree) {
  Rng rng(6);
  for (int k = 0; k < 50; ++k) {
    const Index n = 1 + k % 7;
    const Index p = 1 + (k / 7) % n;
    const StiefelPoint u = random_stiefel(n, p, rng);
    const ScalarField f = verify::random_field(verify::sweep_kind(k), n, p, rng).field;
    const double block = laplace_closed(f, u).value;
    EXPECT_LE(relative_error(laplace_closed_dense(f, u).value, block), 1e-10);
  }
}

TEST(LaplaceClosed, BlockPathBeyondDenseCap) {
  Rng rng(7);
  const StiefelPoint u = random_stiefel(30, 15, rng);
  const ScalarField f = verify::random_field(verify::FieldKind::Brockett, 30, 15, rng).field;
  const LaplaceReport r = laplace_closed(f, u);
  EXPECT_FALSE(r.diagnostics.path_discrepancy.has_value());
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_THROW(laplace_closed_dense(f, u), InputError);
  EXPECT_THROW(laplace_frame_oracle(f, u), InputError);
  EXPECT_LE(relative_error(laplace_closed_dense(f, u, DenseLimits{450}).value, r.value), 1e-10);
}

TEST(LaplaceClosed, RejectsMismatchedShapes) {
  const StiefelPoint u(Matrix::Identity(3, 2));
  EXPECT_THROW(laplace_closed(make_field(LinearFamily{Matrix::Identity(3, 1)}), u), InputError);
  EXPECT_THROW(laplace_frame_oracle(make_field(LinearFamily{Matrix::Identity(4, 2)}), u), InputError);
}

TEST(FrameOracle, AgreesWithClosedForm) {
  const verify::Tolerances tol;
  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    const Index n = 2 + k % 7;
    const Index p = 2 + (k / 7) % (n - 1);
    const StiefelPoint u = random_stiefel(n, p, rng);
    const ScalarField f = verify::random_field(verify::sweep_kind(k), n, p, rng).field;
    const LaplaceReport frame = laplace_frame_oracle(f, u);
    EXPECT_EQ(frame.method, Method::FrameOracle);
    ASSERT_TRUE(frame.diagnostics.abs_det_u1.has_value());
    EXPECT_LE(relative_error(laplace_closed(f, u).value, frame.value), tol.get("closed-vs-frame"))
        << f.describe() << " n=" << n << " p=" << p;
  }
}

TEST(FrameOracle, SquareCase) {
  Rng rng(9);
  for (Index n = 1; n <= 5; ++n) {
    const StiefelPoint u = random_stiefel(n, n, rng);
    const ScalarField f = verify::random_field(verify::FieldKind::Polynomial, n, n, rng).field;
    EXPECT_LE(relative_error(laplace_frame_oracle(f, u).value, laplace_closed(f, u).value), 1e-9);
  }
}

TEST(FrameOracle, InvariantToRowSelection) {
  Rng rng(10);
  for (Index n = 2; n <= 5; ++n) {
    for (Index p = 1; p <= n; ++p) {
      const StiefelPoint u = random_stiefel(n, p, rng);
      const ScalarField f = verify::random_field(verify::FieldKind::Polynomial, n, p, rng).field;
      const double greedy = laplace_frame_oracle(f, u).value;
      int tried = 0;
      for (const auto& rows : oracle::row_subsets(n, p)) {
        RowSelection sel;
        try {
          sel = make_row_selection(u, rows, 1e-3);
        } catch (const DegeneracyError&) {
          continue;
        }
        ++tried;
        EXPECT_LE(relative_error(laplace_frame_oracle(f, u, sel).value, greedy), 1e-9);
      }
      EXPECT_GT(tried, 0);
    }
  }
}

TEST(RiemannianHessian, LinearFieldWithIdentitySigma) {
  const StiefelPoint u(Matrix::Identity(4, 2));
  const ScalarField f = make_field(LinearFamily{Matrix::Identity(4, 2)});
  ASSERT_EQ(sigma_of(f, u), Matrix::Identity(2, 2));
  Rng rng(11);
  for (int k = 0; k < 10; ++k) {
    const Matrix v = apply_projector(u, gaussian_matrix(4, 2, rng));
    EXPECT_NEAR(riemannian_hessian_form(f, u, v, v), -v.squaredNorm(), 1e-13);
  }
}

TEST(RiemannianHessian, SymmetricAndChecksTangency) {
  Rng rng(12);
  const StiefelPoint u = random_stiefel(5, 3, rng);
  const ScalarField f = verify::random_field(verify::FieldKind::Polynomial, 5, 3, rng).field;
  for (int k = 0; k < 20; ++k) {
    const Matrix v1 = apply_projector(u, gaussian_matrix(5, 3, rng));
    const Matrix v2 = apply_projector(u, gaussian_matrix(5, 3, rng));
    EXPECT_EQ(riemannian_hessian_form(f, u, v1, v2), riemannian_hessian_form(f, u, v2, v1));
  }
  EXPECT_THROW(riemannian_hessian_form(f, u, u.matrix(), u.matrix()), InputError);
}

TEST(RiemannianHessian, TraceOverOrthonormalFrameIsLaplacian) {
  Rng rng(13);
  for (int k = 0; k < 40; ++k) {
    const Index n = 1 + k % 6;
    const Index p = 1 + (k / 6) % n;
    const StiefelPoint u = random_stiefel(n, p, rng);
    const ScalarField f = verify::random_field(verify::sweep_kind(k), n, p, rng).field;
    const auto frame = oracle::gram_schmidt(tangent_basis(u).elements);
    ASSERT_EQ(static_cast<Index>(frame.size()), manifold_dimension(n, p));
    double trace = 0.0;
    for (const auto& v : frame) trace += riemannian_hessian_form(f, u, v, v);
    EXPECT_LE(relative_error(trace, laplace_closed(f, u).value), 1e-9) << f.describe();
  }
}

TEST(Sphere, Examples) {
  const ScalarField lin = expression_field("u[1,1]", 3, 1);
  EXPECT_NEAR(sphere_laplacian(lin, e(3, 0).col(0)), oracle::sphere_eigenvalue(1, 3), 1e-15);
  EXPECT_DOUBLE_EQ(oracle::sphere_eigenvalue(1, 3), -2.0);

  const ScalarField zonal = expression_field("3*u[3,1]^2 - 1", 3, 1);
  Rng rng(14);
  for (int k = 0; k < 50; ++k) {
    const Vector u = random_stiefel(3, 1, rng).matrix().col(0);
    const double value = zonal.value(Matrix(u));
    EXPECT_NEAR(sphere_laplacian(zonal, u), -6.0 * value, 1e-9);
  }
  EXPECT_THROW(sphere_laplacian(zonal, Vector::Ones(3)), InputError);
  EXPECT_THROW(sphere_laplacian(make_field(LinearFamily{Matrix::Identity(3, 2)}), e(3, 0).col(0)),
               InputError);
}

TEST(Sphere, MatchesClosedForm) {
  Rng rng(15);
  for (int k = 0; k < 50; ++k) {
    const Index n = 1 + k % 8;
    const StiefelPoint u = random_stiefel(n, 1, rng);
    const ScalarField f = verify::random_field(verify::sweep_kind(k), n, 1, rng).field;
    EXPECT_LE(relative_error(sphere_laplacian(f, u.matrix().col(0)), laplace_closed(f, u).value), 1e-12);
  }
}

TEST(SpecialOrthogonal, Examples) {
  const StiefelPoint i3(Matrix::Identity(3, 3));
  EXPECT_EQ(special_orthogonal_laplacian(constant_field(3, 3, 2.0), i3), 0.0);
  EXPECT_NEAR(special_orthogonal_laplacian(make_field(LinearFamily{Matrix::Identity(3, 3)}), i3), -3.0, 1e-15);
  EXPECT_EQ(special_orthogonal_coefficient(3), closed_form_coefficient(3, 3));
  EXPECT_THROW(special_orthogonal_laplacian(constant_field(3, 2, 1.0), StiefelPoint(Matrix::Identity(3, 2))),
               InputError);

  Rng rng(16);
  for (int k = 0; k < 50; ++k) {
    const Index n = 1 + k % 6;
    const StiefelPoint u = random_stiefel(n, n, rng);
    const ScalarField f = verify::random_field(verify::sweep_kind(k), n, n, rng).field;
    EXPECT_LE(relative_error(special_orthogonal_laplacian(f, u), laplace_closed(f, u).value), 1e-12);
  }
}

TEST(Invariants, ProlongationIsometryLinearity) {
  Rng rng(17);
  for (int k = 0; k < 40; ++k) {
    const Index n = 1 + k % 6;
    const Index p = 1 + (k / 6) % n;
    const StiefelPoint u = random_stiefel(n, p, rng);
    const ScalarField f = verify::random_field(verify::sweep_kind(k), n, p, rng).field;
    const ScalarField g = verify::random_field(verify::FieldKind::Polynomial, n, p, rng).field;
    const double lf = laplace_closed(f, u).value;

    const auto cons = all_constraints(static_cast<int>(p));
    const auto& alpha = cons[verify::uniform_index(rng, 0, static_cast<Index>(cons.size()) - 1)];
    const ScalarField shifted =
        combine(1.0, constraint_field(alpha, n, p), -1.0, constant_field(n, p, alpha.regular_value()));
    EXPECT_LE(relative_error(laplace_closed(f + shifted * g, u).value, lf), 1e-8);

    const Matrix q = random_stiefel(n, n, rng).matrix();
    const Matrix r = random_stiefel(p, p, rng).matrix();
    EXPECT_LE(relative_error(laplace_closed(compose(f, q, r), u).value,
                             laplace_closed(f, StiefelPoint(q * u.matrix() * r)).value),
              1e-8);

    const double a = verify::uniform_real(rng, -2, 2), b = verify::uniform_real(rng, -2, 2);
    EXPECT_LE(relative_error(laplace_closed(combine(a, f, b, g), u).value,
                             a * lf + b * laplace_closed(g, u).value),
              1e-10);
  }
}

TEST(Invariants, TraceIdentities) {
  Rng rng(18);
  for (int k = 0; k < 40; ++k) {
    const Index n = 1 + k % 6;
    const Index p = 1 + (k / 6) % n;
    const StiefelPoint u = random_stiefel(n, p, rng);
    const ScalarField f = verify::random_field(verify::sweep_kind(k), n, p, rng).field;
    const Matrix s = sigma_of(f, u);
    const double tr_ug = (u.matrix().transpose() * f.gradient(u.matrix())).trace();
    const Matrix in = Matrix::Identity(n, n);
    EXPECT_NEAR((lambda_of(u) * kron(s, in)).trace(), s.trace(), 1e-11);
    EXPECT_LE(relative_error(kron(s, in).trace(), n * tr_ug), 1e-10);
    EXPECT_LE(relative_error(kron(s, u.matrix() * u.matrix().transpose()).trace(), p * tr_ug), 1e-10);
  }
}
