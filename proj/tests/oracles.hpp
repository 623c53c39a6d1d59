#pragma once

// Test-only reference computations. Nothing here calls the code paths it is
// used to check.

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using MatrixFn = std::function<double(const Matrix&)>;

inline Matrix central_gradient(const MatrixFn& f, const Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      Matrix a = x, b = x;
      a(i, j) += h;
      b(i, j) -= h;
      g(i, j) = (f(a) - f(b)) / (2 * h);
    }
  }
  return g;
}

/// Second-order central differences over the column-major vectorization.
inline Matrix central_hessian(const MatrixFn& f, const Matrix& x, double h) {
  const Index m = x.size();
  Matrix out(m, m);
  auto shifted = [&](Index k, double sk, Index l, double sl) {
    Matrix y = x;
    y(k % x.rows(), k / x.rows()) += sk;
    y(l % x.rows(), l / x.rows()) += sl;
    return f(y);
  };
  for (Index k = 0; k < m; ++k) {
    for (Index l = 0; l < m; ++l) {
      out(k, l) = (shifted(k, h, l, h) - shifted(k, h, l, -h) - shifted(k, -h, l, h) +
                   shifted(k, -h, l, -h)) /
                  (4 * h * h);
    }
  }
  return out;
}

/// Every p-subset of rows {0..n-1}, in lexicographic order.
inline std::vector<std::vector<Index>> row_subsets(Index n, Index p) {
  std::vector<std::vector<Index>> out;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + p, true);
  do {
    std::vector<Index> rows;
    for (Index i = 0; i < n; ++i) {
      if (mask[i]) rows.push_back(i);
    }
    out.push_back(rows);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return out;
}

/// Modified Gram-Schmidt on matrices under the Frobenius inner product.
inline std::vector<Matrix> gram_schmidt(std::vector<Matrix> v) {
  std::vector<Matrix> out;
  for (auto& x : v) {
    for (const auto& q : out) x -= (x.array() * q.array()).sum() * q;
    const double nrm = x.norm();
    if (nrm > 1e-12) out.push_back(x / nrm);
  }
  return out;
}

inline Index pivoted_rank(const Matrix& m, double tol) {
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(tol);
  return qr.rank();
}

/// Spherical harmonics of degree l on S^{n-1} have eigenvalue -l(l+n-2).
inline double sphere_eigenvalue(int degree, int n) { return -double(degree) * double(degree + n - 2); }

}  // namespace oracle
