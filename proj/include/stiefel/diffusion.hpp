#pragma once

// Monte Carlo check that the operator generates Brownian motion on St_p^n:
// one step of a tangent Gaussian walk with QR retraction satisfies
//   (E f(X_h) - f(U)) / h  ->  1/2 Lap f~(U)   as h -> 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "stiefel/ambient.hpp"
#include "stiefel/functions.hpp"
#include "stiefel/tangent.hpp"

namespace stiefel {

struct WalkConfig {
  double h = 1e-3;
  std::int64_t samples = 100000;
  std::uint64_t seed = 0;
  /// Worker threads; 0 picks hardware concurrency. Results do not depend on it.
  unsigned threads = 0;
};

/// Standard Gaussian in the ambient space, projected onto T_U St_p^n.
inline Matrix tangent_gaussian_step(const StiefelPoint& point, Rng& rng) {
  return apply_projector(point, gaussian_matrix(point.n(), point.p(), rng));
}

/// qf(U + sqrt(h) xi), xi tangent Gaussian.
inline StiefelPoint walk_step(const StiefelPoint& point, double h, Rng& rng) {
  if (!(h > 0.0) || !std::isfinite(h)) throw InputError("walk_step: h must be positive");
  const Matrix xi = tangent_gaussian_step(point, rng);
  return StiefelPoint(orthonormalize(point.matrix() + std::sqrt(h) * xi), 1e-12);
}

/// Generator state of walker `index` under master seed `seed`.
inline Rng walker_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

struct GeneratorEstimate {
  double estimate = 0.0;
  /// Undefined for a single sample.
  std::optional<double> std_error;
  std::int64_t samples = 0;
};

inline GeneratorEstimate generator_estimate(const ScalarField& f, const StiefelPoint& point,
                                            const WalkConfig& cfg) {
  if (!(cfg.h > 0.0) || cfg.samples < 1) throw InputError("generator_estimate: need h > 0, M >= 1");
  if (f.n() != point.n() || f.p() != point.p()) throw InputError("generator_estimate: shape mismatch");

  const double f0 = f.value(point.matrix());
  const auto m = static_cast<std::size_t>(cfg.samples);
  std::vector<double> diffs(m);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      Rng rng = walker_rng(cfg.seed, k);
      diffs[k] = f.value(walk_step(point, cfg.h, rng).matrix()) - f0;
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, m));
  if (threads <= 1) {
    work(0, m);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (m + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(m, t * chunk);
      const std::size_t end = std::min(m, begin + chunk);
      pool.emplace_back([&, t, begin, end] {
        try {
          work(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // summed in walker order
  double sum = 0.0;
  for (double d : diffs) sum += d;
  const double mean = sum / static_cast<double>(m);

  GeneratorEstimate out;
  out.samples = cfg.samples;
  out.estimate = mean / cfg.h;
  if (m >= 2) {
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / static_cast<double>(m - 1));
    out.std_error = sd / (std::sqrt(static_cast<double>(m)) * cfg.h);
  }
  return out;
}

/// 3 std_error + 0.5 h (1 + |target|), target = 1/2 Lap f~.
inline double generator_tolerance(double std_error, double h, double target, double k_sigma = 3.0) {
  return k_sigma * std_error + 0.5 * h * (1.0 + std::abs(target));
}

}  // namespace stiefel
