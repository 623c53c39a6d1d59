#pragma once

#include "stiefel/ambient.hpp"

namespace stiefel {

/// Default cap on np for routines that materialize np x np matrices.
struct DenseLimits {
  Index max_dim = 400;
};

inline void require_dense_size(Index np, const DenseLimits& limits, const char* what) {
  if (np > limits.max_dim) {
    throw InputError(std::string(what) + ": np = " + std::to_string(np) +
                     " exceeds the dense size cap " + std::to_string(limits.max_dim));
  }
}

/// Lambda(U): np x np, block (i,j) = u_j u_i^t. Symmetric.
inline Matrix lambda_of(const StiefelPoint& point) {
  const Matrix& u = point.matrix();
  const Index n = point.n();
  const Index p = point.p();
  Matrix out(n * p, n * p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      out.block(i * n, j * n, n, n).noalias() = u.col(j) * u.col(i).transpose();
    }
  }
  return out;
}

/// I_p kron (U U^t)
inline Matrix kron_identity_uut(const StiefelPoint& point) {
  const Matrix& u = point.matrix();
  return kron(Matrix::Identity(point.p(), point.p()), u * u.transpose());
}

}  // namespace stiefel
