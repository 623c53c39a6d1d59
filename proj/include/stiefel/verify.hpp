#pragma once

// Seeded randomized verification suites. Every case draws its inputs from a
// generator derived from (master seed, case index), so results depend only on
// the seed and are independent of the thread count.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "stiefel/ambient.hpp"
#include "stiefel/diffusion.hpp"
#include "stiefel/functions.hpp"
#include "stiefel/laplace.hpp"
#include "stiefel/tangent.hpp"

namespace stiefel::verify {

class Tolerances {
 public:
  Tolerances()
      : values_{{"closed-vs-frame", 1e-9}, {"sigma", 1e-8},         {"annihilation", 1e-11},
                {"projector", 1e-10},      {"idempotence", 1e-11},  {"rank", 1e-8},
                {"selection", 1e-9},       {"apply", 1e-10},        {"basis", 1e-10},
                {"gram", 1e-12},           {"t1", 1e-12},           {"t2", 1e-12},
                {"woodbury", 1e-9},        {"sandwich", 1e-9},      {"sphere-eigen", 1e-8},
                {"reduction", 1e-12},      {"prolongation", 1e-8},  {"isometry", 1e-8},
                {"linearity", 1e-10},      {"trace", 1e-10},        {"ad-gradient", 1e-6},
                {"ad-hessian", 1e-4},      {"lambda", 1e-14},       {"eval", 1e-9},
                {"diffusion-sigmas", 3.0}} {}

  double get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InputError("unknown tolerance key '" + key + "'");
    return it->second;
  }

  void set(const std::string& key, double value) {
    if (!values_.count(key)) throw InputError("unknown tolerance key '" + key + "'");
    if (!(value > 0.0)) throw InputError("tolerance '" + key + "' must be positive");
    values_[key] = value;
  }

  const std::map<std::string, double>& all() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

/// One compared quantity. Structural checks report the achieved error as
/// `value` against a target of 0.
struct Check {
  std::size_t instance = 0;
  std::string check;
  Index n = 0;
  Index p = 0;
  std::string field;
  std::string method;
  double value = 0.0;
  double target = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double tolerance = 0.0;
  bool relative = false;
  bool pass = false;
};

inline Check compare(std::string name, Index n, Index p, std::string field, std::string method,
                     double value, double target, double tolerance, bool relative) {
  Check c;
  c.check = std::move(name);
  c.n = n;
  c.p = p;
  c.field = std::move(field);
  c.method = std::move(method);
  c.value = value;
  c.target = target;
  c.abs_err = std::abs(value - target);
  c.rel_err = relative_error(value, target);
  c.tolerance = tolerance;
  c.relative = relative;
  c.pass = (relative ? c.rel_err : c.abs_err) <= tolerance;
  return c;
}

inline Check structural(std::string name, Index n, Index p, double error, double tolerance) {
  return compare(std::move(name), n, p, "", "", error, 0.0, tolerance, false);
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// max_ij |a_ij - b_ij| / max(1, |b_ij|)
inline double max_rel(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      worst = std::max(worst, relative_error(a(i, j), b(i, j)));
    }
  }
  return worst;
}

inline Rng case_rng(std::uint64_t seed, std::uint64_t index) { return walker_rng(seed, index); }

// ---------------------------------------------------------------------------
// Random inputs

inline Index uniform_index(Rng& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::string coeff_text(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", c);
  return buf;
}

inline std::string var_text(Rng& rng, Index n, Index p) {
  return "u[" + std::to_string(uniform_index(rng, 1, n)) + "," +
         std::to_string(uniform_index(rng, 1, p)) + "]";
}

/// Random polynomial of total degree <= max_degree in the entries of U.
inline std::string random_polynomial_source(Index n, Index p, Rng& rng, int max_degree = 3) {
  const Index terms = uniform_index(rng, 3, 7);
  std::string src;
  for (Index t = 0; t < terms; ++t) {
    if (t) src += " + ";
    src += coeff_text(uniform_real(rng, -2.0, 2.0));
    const Index degree = uniform_index(rng, 0, max_degree);
    for (Index d = 0; d < degree; ++d) src += "*" + var_text(rng, n, p);
  }
  return src;
}

/// Random expression mixing polynomial and transcendental terms, defined
/// everywhere.
inline std::string random_smooth_source(Index n, Index p, Rng& rng) {
  const Index terms = uniform_index(rng, 3, 6);
  std::string src;
  for (Index t = 0; t < terms; ++t) {
    if (t) src += " + ";
    const std::string c = coeff_text(uniform_real(rng, -2.0, 2.0));
    const std::string d = coeff_text(uniform_real(rng, -1.5, 1.5));
    const std::string x = var_text(rng, n, p);
    const std::string y = var_text(rng, n, p);
    switch (uniform_index(rng, 0, 7)) {
      case 0: src += c + "*sin(" + d + "*" + x + ")"; break;
      case 1: src += c + "*cos(" + x + "*" + y + ")"; break;
      case 2: src += c + "*exp(" + d + "*" + x + ")"; break;
      case 3: src += c + "*log(2 + " + x + "^2)"; break;
      case 4: src += c + "*sqrt(1 + " + x + "^2 + " + y + "^2)"; break;
      case 5: src += c + "*" + x + "/(2 + " + y + "^2)"; break;
      case 6: src += c + "*" + x + "^3*" + y; break;
      default: src += c + "*(" + x + " - " + y + ")^2"; break;
    }
  }
  return src;
}

enum class FieldKind { Linear, Brockett, Procrustes, Polynomial, Smooth };

inline const char* kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::Linear: return "linear";
    case FieldKind::Brockett: return "brockett";
    case FieldKind::Procrustes: return "procrustes";
    case FieldKind::Polynomial: return "polynomial";
    case FieldKind::Smooth: return "smooth";
  }
  return "?";
}

struct RandomField {
  ScalarField field;
  std::string description;
};

inline RandomField random_field(FieldKind kind, Index n, Index p, Rng& rng) {
  switch (kind) {
    case FieldKind::Linear:
      return {make_field(LinearFamily{gaussian_matrix(n, p, rng)}), "linear(random A)"};
    case FieldKind::Brockett: {
      const Matrix g = gaussian_matrix(n, n, rng);
      const Matrix b = 0.5 * (g + g.transpose());
      return {make_field(BrockettFamily{b, gaussian_matrix(p, 1, rng).col(0)}),
              "brockett(random B, C)"};
    }
    case FieldKind::Procrustes: {
      const Index m = n + uniform_index(rng, 0, 2);
      return {make_field(ProcrustesFamily{gaussian_matrix(m, n, rng), gaussian_matrix(m, p, rng)}),
              "procrustes(random A, B)"};
    }
    case FieldKind::Polynomial: {
      std::string src = random_polynomial_source(n, p, rng);
      return {expression_field(src, static_cast<int>(n), static_cast<int>(p)), src};
    }
    case FieldKind::Smooth: {
      std::string src = random_smooth_source(n, p, rng);
      return {expression_field(src, static_cast<int>(n), static_cast<int>(p)), src};
    }
  }
  throw std::logic_error("unknown field kind");
}

/// Kinds used for the main sweeps: the three families and polynomials of degree <= 3.
inline FieldKind sweep_kind(std::size_t index) {
  static constexpr FieldKind kinds[] = {FieldKind::Linear, FieldKind::Brockett,
                                        FieldKind::Procrustes, FieldKind::Polynomial};
  return kinds[index % 4];
}

struct Shape {
  Index n;
  Index p;
};

inline Shape random_shape(Rng& rng, Index p_min, Index n_max) {
  const Index n = uniform_index(rng, p_min, n_max);
  return {n, uniform_index(rng, p_min, n)};
}

/// Re((u_1 + i u_2)^l): a harmonic polynomial of degree l on R^n, n >= 2.
inline std::string harmonic_source(int degree) {
  switch (degree) {
    case 1: return "u[1,1]";
    case 2: return "u[1,1]^2 - u[2,1]^2";
    case 3: return "u[1,1]^3 - 3*u[1,1]*u[2,1]^2";
    default: throw InputError("harmonic_source: degree must be 1, 2 or 3");
  }
}

// ---------------------------------------------------------------------------
// Runner

struct SuiteOptions {
  std::size_t cases = 100;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  Tolerances tol;
};

using CaseFn = std::function<std::vector<Check>(std::size_t, Rng&, const Tolerances&)>;

inline std::vector<Check> run_cases(std::size_t count, const SuiteOptions& opt, const CaseFn& fn) {
  std::vector<std::vector<Check>> per_case(count);
  std::vector<std::exception_ptr> errors(count);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < count; k += stride) {
      try {
        Rng rng = case_rng(opt.seed, k);
        per_case[k] = fn(k, rng, opt.tol);
        for (auto& c : per_case[k]) c.instance = k;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, count)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Check> out;
  for (auto& v : per_case) {
    for (auto& c : v) out.push_back(std::move(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Suites

inline std::vector<Check> closed_vs_frame_case(std::size_t index, Rng& rng, const Tolerances& tol) {
  const auto [n, p] = random_shape(rng, 2, 8);
  const StiefelPoint u = random_stiefel(n, p, rng);
  const RandomField rf = random_field(sweep_kind(index), n, p, rng);
  const double closed = laplace_closed(rf.field, u).value;
  const double frame = laplace_frame_oracle(rf.field, u).value;
  return {
      compare("closed-vs-frame", n, p, rf.description, "closed-block/frame-oracle", closed, frame,
              tol.get("closed-vs-frame"), true),
      structural("sigma-explicit-vs-gram", n, p,
                 max_abs(sigma_of(rf.field, u) - sigma_gram_oracle(rf.field, u)), tol.get("sigma")),
  };
}

/// All (n, p) with 2 <= p <= n <= 8, `points` random points each; one check
/// per point holding max_alpha |Lap F_alpha|.
inline std::vector<Shape> annihilation_shapes() {
  std::vector<Shape> shapes;
  for (Index n = 2; n <= 8; ++n) {
    for (Index p = 2; p <= n; ++p) shapes.push_back({n, p});
  }
  return shapes;
}

inline std::vector<Check> annihilation_case(std::size_t index, std::size_t points, Rng& rng,
                                            const Tolerances& tol) {
  static const std::vector<Shape> shapes = annihilation_shapes();
  const Shape s = shapes[(index / points) % shapes.size()];
  const StiefelPoint u = random_stiefel(s.n, s.p, rng);
  double worst = 0.0;
  for (const auto& c : all_constraints(static_cast<int>(s.p))) {
    worst = std::max(worst, std::abs(laplace_closed(constraint_field(c, s.n, s.p), u).value));
  }
  return {compare("constraint-annihilation", s.n, s.p, "F_alpha (all)", "closed-block", worst, 0.0,
                  tol.get("annihilation"), false)};
}

/// A valid row selection different from `greedy`, if one exists, choosing
/// the subset with the largest |det U_1| among the others.
inline std::optional<RowSelection> alternative_selection(const StiefelPoint& u,
                                                         const RowSelection& greedy) {
  const Index n = u.n();
  const Index p = u.p();
  const auto chosen = greedy.selected();
  std::optional<RowSelection> best;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + p, true);
  do {
    std::vector<Index> rows;
    for (Index i = 0; i < n; ++i) {
      if (mask[i]) rows.push_back(i);
    }
    if (rows == chosen) continue;
    const double det = std::abs(u.matrix()(rows, Eigen::all).determinant());
    if (det > 1e-3 && (!best || det > best->abs_det_u1)) best = make_row_selection(u, rows);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

inline Index numerical_rank(const Matrix& m, double tol) {
  Eigen::JacobiSVD<Matrix> svd(m);
  Index r = 0;
  for (Index i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > tol) ++r;
  }
  return r;
}

inline std::vector<Check> projector_case(std::size_t, Rng& rng, const Tolerances& tol) {
  const auto [n, p] = random_shape(rng, 1, 8);
  const StiefelPoint u = random_stiefel(n, p, rng);
  const Matrix closed = projector(u, ProjectorPath::Closed);
  const Matrix direct = projector(u, ProjectorPath::Direct);
  const Matrix woodbury = projector(u, ProjectorPath::Woodbury);
  std::vector<Check> out{
      structural("projector-closed-vs-direct", n, p, max_abs(closed - direct), tol.get("projector")),
      structural("projector-woodbury-vs-direct", n, p, max_abs(woodbury - direct), tol.get("projector")),
      structural("projector-idempotence", n, p, max_abs(closed * closed - closed), tol.get("idempotence")),
      structural("projector-symmetry", n, p, max_abs(closed - closed.transpose()), tol.get("idempotence")),
  };
  const Index rank = numerical_rank(closed, tol.get("rank"));
  Check rc = compare("projector-rank", n, p, "", "", static_cast<double>(rank),
                     static_cast<double>(manifold_dimension(n, p)), 0.0, false);
  out.push_back(rc);

  const Matrix w = gaussian_matrix(n, p, rng);
  out.push_back(structural("apply-projector-vs-dense", n, p,
                           max_abs(apply_projector(u, w) - unvec(closed * vec(w), n, p)),
                           tol.get("apply")));

  const RowSelection greedy = select_full_rank_rows(u);
  if (auto alt = alternative_selection(u, greedy)) {
    out.push_back(structural("projector-selection-independence", n, p,
                             max_abs(projector_woodbury(u, *alt) - projector_woodbury(u, greedy)),
                             tol.get("selection")));
  }
  return out;
}

inline std::vector<Check> gram_structure_case(std::size_t, Rng& rng, const Tolerances& tol) {
  const auto [n, p] = random_shape(rng, 1, 8);
  const StiefelPoint point = random_stiefel(n, p, rng);
  const Matrix& u = point.matrix();
  const TangentBasis basis = tangent_basis(point);
  const TransformationMatrix tm = build_T(basis);
  const RowSelection& sel = basis.selection;
  const double tb = tol.get("basis");

  auto inner = [](const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); };

  double tangency = 0.0, orth_skew = 0.0, orth_groups = 0.0, orth_cross = 0.0;
  double norm_two = 0.0, z_entries = 0.0;
  const auto& el = basis.elements;
  const auto& lab = basis.labels;
  for (std::size_t k = 0; k < el.size(); ++k) {
    tangency = std::max(tangency, tangency_residual(u, el[k]));
    for (std::size_t l = 0; l < el.size(); ++l) {
      const double ip = inner(el[k], el[l]);
      const bool ks = lab[k].kind == BasisLabel::Kind::Skew;
      const bool ls = lab[l].kind == BasisLabel::Kind::Skew;
      if (ks && ls) {
        if (k == l) norm_two = std::max(norm_two, std::abs(ip - 2.0));
        else orth_skew = std::max(orth_skew, std::abs(ip));
      } else if (ks != ls) {
        orth_cross = std::max(orth_cross, std::abs(ip));
      } else if (lab[k].second != lab[l].second) {
        orth_groups = std::max(orth_groups, std::abs(ip));
      } else {
        const double z = basis.z(lab[k].first - 1, lab[l].first - 1);
        z_entries = std::max(z_entries, std::abs(ip - z));
      }
    }
  }

  std::vector<Check> out{
      compare("basis-count", n, p, "", "", static_cast<double>(el.size()),
              static_cast<double>(manifold_dimension(n, p)), 0.0, false),
      structural("basis-tangency", n, p, tangency, tb),
      structural("basis-skew-orthogonal", n, p, orth_skew, tb),
      structural("basis-column-groups-orthogonal", n, p, orth_groups, tb),
      structural("basis-skew-perp-normal", n, p, orth_cross, tb),
      structural("basis-skew-norm-two", n, p, norm_two, tb),
      structural("basis-normal-gram-is-z", n, p, z_entries, tb),
      structural("gram-closed-vs-direct", n, p,
                 max_abs(gram_T_closed(point, sel) - tm.t.transpose() * tm.t), tol.get("gram")),
      structural("t1-outer-identity", n, p,
                 max_abs(tm.t1() * tm.t1().transpose() -
                         (kron_identity_uut(point) - lambda_of(point))),
                 tol.get("t1")),
  };

  // Permuted-coordinate identities.
  const Matrix pm = sel.permutation_matrix();
  const Matrix up = sel.permute_rows(u);
  const Matrix zp = Matrix::Identity(n, n) - up * up.transpose();
  const Index m = n - p;
  out.push_back(structural("orthonormal-blocks", n, p,
                           max_abs(sel.u1.transpose() * sel.u1 + sel.u2.transpose() * sel.u2 -
                                   Matrix::Identity(p, p)),
                           tb));
  if (m > 0) {
    const Matrix z2 = zp.bottomRows(m);
    Matrix z2_formula(m, n);
    z2_formula << -sel.u2 * sel.u1.transpose(), Matrix::Identity(m, m) - sel.u2 * sel.u2.transpose();
    out.push_back(structural("z2-block-formula", n, p, max_abs(z2 - z2_formula), tb));
    out.push_back(structural("z2-outer", n, p,
                             max_abs(z2 * z2.transpose() -
                                     (Matrix::Identity(m, m) - sel.u2 * sel.u2.transpose())),
                             tb));
    const Matrix ip = Matrix::Identity(p, p);
    out.push_back(structural("t2-kron-structure", n, p,
                             max_abs(kron(ip, pm) * tm.t2() - kron(ip, z2.transpose())),
                             tol.get("t2")));
    const Matrix w = woodbury_inverse(sel);
    out.push_back(structural("woodbury-inverse", n, p,
                             max_abs((Matrix::Identity(m, m) - sel.u2 * sel.u2.transpose()) * w -
                                     Matrix::Identity(m, m)),
                             tol.get("woodbury")));
    out.push_back(structural("sandwich-identity", n, p,
                             max_abs(z2.transpose() * w * z2 - zp), tol.get("sandwich")));
  }
  return out;
}

inline std::vector<Check> sphere_eigen_case(std::size_t index, std::size_t points, Rng& rng,
                                            const Tolerances& tol) {
  // (n, degree) grid: n in 2..6, degree in 1..3.
  const std::size_t cell = (index / points) % 15;
  const Index n = 2 + static_cast<Index>(cell / 3);
  const int degree = 1 + static_cast<int>(cell % 3);
  const Matrix q = random_stiefel(n, n, rng).matrix();
  const ScalarField f = compose(expression_field(harmonic_source(degree), static_cast<int>(n), 1),
                                q, Matrix::Identity(1, 1));
  const StiefelPoint u = random_stiefel(n, 1, rng);
  const double eigen = -static_cast<double>(degree) * static_cast<double>(degree + n - 2);
  const double target = eigen * f.value(u.matrix());
  const std::string desc = "harmonic degree " + std::to_string(degree) + " (rotated)";
  const double ts = tol.get("sphere-eigen");
  return {
      compare("sphere-eigenfunction", n, 1, desc, "closed-block", laplace_closed(f, u).value,
              target, ts, true),
      compare("sphere-eigenfunction", n, 1, desc, "sphere", sphere_laplacian(f, u.matrix().col(0)),
              target, ts, true),
  };
}

inline std::vector<Check> reductions_case(std::size_t index, Rng& rng, const Tolerances& tol) {
  const double tr = tol.get("reduction");
  if (index % 2 == 0) {
    const Index n = uniform_index(rng, 1, 8);
    const StiefelPoint u = random_stiefel(n, 1, rng);
    const RandomField rf = random_field(sweep_kind(index / 2), n, 1, rng);
    return {compare("p1-closed-vs-sphere", n, 1, rf.description, "closed-block/sphere",
                    laplace_closed(rf.field, u).value, sphere_laplacian(rf.field, u.matrix().col(0)),
                    tr, true)};
  }
  const Index n = uniform_index(rng, 1, 7);
  const StiefelPoint u = random_stiefel(n, n, rng);
  const RandomField rf = random_field(sweep_kind(index / 2), n, n, rng);
  // n - (p+1)/2 at p = n is (2n - (n+1))/2 = (n-1)/2; both halves of integers are exact.
  return {
      compare("pn-closed-vs-special-orthogonal", n, n, rf.description,
              "closed-block/special-orthogonal", laplace_closed(rf.field, u).value,
              special_orthogonal_laplacian(rf.field, u), tr, true),
      compare("pn-coefficient", n, n, "", "", closed_form_coefficient(n, n),
              special_orthogonal_coefficient(n), 0.0, false),
  };
}

inline std::vector<Check> prolongation_case(std::size_t index, Rng& rng, const Tolerances& tol) {
  const auto [n, p] = random_shape(rng, 1, 8);
  const StiefelPoint u = random_stiefel(n, p, rng);
  const RandomField rf = random_field(sweep_kind(index), n, p, rng);
  const std::string gsrc = random_polynomial_source(n, p, rng);
  const ScalarField g = expression_field(gsrc, static_cast<int>(n), static_cast<int>(p));
  const auto constraints = all_constraints(static_cast<int>(p));
  const ConstraintIndex alpha =
      constraints[uniform_index(rng, 0, static_cast<Index>(constraints.size()) - 1)];
  const ScalarField shifted =
      combine(1.0, constraint_field(alpha, n, p), -alpha.regular_value(), constant_field(n, p, 1.0));
  const ScalarField extended = rf.field + shifted * g;
  return {compare("prolongation-independence", n, p,
                  rf.description + " + (" + alpha.label() + " - c) * (" + gsrc + ")", "closed-block",
                  laplace_closed(extended, u).value, laplace_closed(rf.field, u).value,
                  tol.get("prolongation"), true)};
}

inline std::vector<Check> isometry_case(std::size_t index, Rng& rng, const Tolerances& tol) {
  const auto [n, p] = random_shape(rng, 1, 8);
  const StiefelPoint u = random_stiefel(n, p, rng);
  const RandomField rf = random_field(sweep_kind(index), n, p, rng);
  const Matrix q = random_stiefel(n, n, rng).matrix();
  const Matrix r = random_stiefel(p, p, rng).matrix();
  const ScalarField g = compose(rf.field, q, r);
  const StiefelPoint moved(q * u.matrix() * r);
  return {compare("isometry-invariance", n, p, rf.description, "closed-block",
                  laplace_closed(g, u).value, laplace_closed(rf.field, moved).value,
                  tol.get("isometry"), true)};
}

inline std::vector<Check> linearity_case(std::size_t index, Rng& rng, const Tolerances& tol) {
  const auto [n, p] = random_shape(rng, 1, 8);
  const StiefelPoint u = random_stiefel(n, p, rng);
  const RandomField f = random_field(sweep_kind(index), n, p, rng);
  const RandomField g = random_field(sweep_kind(index + 1), n, p, rng);
  const double a = uniform_real(rng, -2.0, 2.0);
  const double b = uniform_real(rng, -2.0, 2.0);
  const double lhs = laplace_closed(combine(a, f.field, b, g.field), u).value;
  const double rhs = a * laplace_closed(f.field, u).value + b * laplace_closed(g.field, u).value;
  return {compare("linearity", n, p, f.description + " ; " + g.description, "closed-block", lhs,
                  rhs, tol.get("linearity"), true)};
}

inline std::vector<Check> trace_identities_case(std::size_t index, Rng& rng, const Tolerances& tol) {
  const auto [n, p] = random_shape(rng, 1, 8);
  const StiefelPoint point = random_stiefel(n, p, rng);
  const Matrix& u = point.matrix();
  const RandomField rf = random_field(sweep_kind(index), n, p, rng);
  const Matrix grad = rf.field.gradient(u);
  const Matrix sigma = sigma_of(rf.field, point);
  const double tr_ug = (u.transpose() * grad).trace();
  const Matrix sigma_in = kron(sigma, Matrix::Identity(n, n));
  const double tt = tol.get("trace");
  return {
      compare("trace-sigma-kron-identity", n, p, rf.description, "", sigma_in.trace(),
              static_cast<double>(n) * tr_ug, tt, true),
      compare("trace-sigma-kron-uut", n, p, rf.description, "",
              kron(sigma, u * u.transpose()).trace(), static_cast<double>(p) * tr_ug, tt, true),
      compare("trace-lambda-sigma", n, p, rf.description, "", (lambda_of(point) * sigma_in).trace(),
              sigma.trace(), tt, true),
      structural("sigma-matrix-form", n, p,
                 max_abs(sigma - 0.5 * (grad.transpose() * u + u.transpose() * grad)), tt),
  };
}

inline std::vector<Check> ad_case(std::size_t index, Rng& rng, const Tolerances& tol) {
  static constexpr FieldKind kinds[] = {FieldKind::Linear, FieldKind::Brockett, FieldKind::Procrustes,
                                        FieldKind::Polynomial, FieldKind::Smooth};
  const auto [n, p] = random_shape(rng, 1, 5);
  const RandomField rf = random_field(kinds[index % 5], n, p, rng);
  const Matrix x = random_stiefel(n, p, rng).matrix() + 0.3 * gaussian_matrix(n, p, rng);
  const Matrix h = rf.field.hessian(x);
  return {
      structural("ad-gradient-vs-fd", n, p, max_rel(rf.field.gradient(x), fd_gradient(rf.field, x)),
                 tol.get("ad-gradient")),
      structural("ad-hessian-vs-fd", n, p, max_rel(h, fd_hessian(rf.field, x)), tol.get("ad-hessian")),
      structural("hessian-symmetry", n, p, max_abs(h - h.transpose()), 1e-12),
  };
}

inline std::vector<Check> lambda_identity_case(std::size_t, Rng& rng, const Tolerances& tol) {
  const auto [n, p] = random_shape(rng, 1, 8);
  const StiefelPoint point = random_stiefel(n, p, rng);
  const Matrix& u = point.matrix();
  const Matrix lam = lambda_of(point);
  const Matrix k = commutation_matrix(p, n);
  const bool permutation = (k.rowwise().sum().array() == 1.0).all() &&
                           (k.colwise().sum().array() == 1.0).all() &&
                           ((k.array() == 0.0) || (k.array() == 1.0)).all();
  return {
      structural("lambda-commutation-identity", n, p, max_abs(lam - k * kron(u, u.transpose())),
                 tol.get("lambda")),
      structural("lambda-symmetry", n, p, max_abs(lam - lam.transpose()), tol.get("lambda")),
      compare("commutation-is-permutation", n, p, "", "", permutation ? 1.0 : 0.0, 1.0, 0.0, false),
      compare("lambda-trace", n, p, "", "", lam.trace(), static_cast<double>(p), 1e-12, false),
  };
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{
      "gram-structure", "projector-identity", "closed-vs-frame", "annihilation",
      "prolongation",   "isometry",           "linearity",       "trace-identities",
      "sphere-eigen",   "reductions",         "ad",              "lambda-identity"};
  return names;
}

/// For "annihilation" and "sphere-eigen", `cases` counts points per grid cell
/// ((n, p) pairs, resp. (n, degree) pairs); elsewhere it counts instances.
inline std::vector<Check> run_suite(const std::string& name, const SuiteOptions& opt) {
  const std::size_t cases = opt.cases;
  if (name == "closed-vs-frame") return run_cases(cases, opt, closed_vs_frame_case);
  if (name == "annihilation") {
    return run_cases(cases * annihilation_shapes().size(), opt,
                     [cases](std::size_t i, Rng& r, const Tolerances& t) {
                       return annihilation_case(i, cases, r, t);
                     });
  }
  if (name == "projector-identity") return run_cases(cases, opt, projector_case);
  if (name == "gram-structure") return run_cases(cases, opt, gram_structure_case);
  if (name == "sphere-eigen") {
    return run_cases(cases * 15, opt, [cases](std::size_t i, Rng& r, const Tolerances& t) {
      return sphere_eigen_case(i, cases, r, t);
    });
  }
  if (name == "reductions") return run_cases(cases, opt, reductions_case);
  if (name == "prolongation") return run_cases(cases, opt, prolongation_case);
  if (name == "isometry") return run_cases(cases, opt, isometry_case);
  if (name == "linearity") return run_cases(cases, opt, linearity_case);
  if (name == "trace-identities") return run_cases(cases, opt, trace_identities_case);
  if (name == "ad") return run_cases(cases, opt, ad_case);
  if (name == "lambda-identity") return run_cases(cases, opt, lambda_identity_case);
  throw InputError("unknown suite '" + name + "'");
}

struct Summary {
  std::size_t passed = 0;
  std::size_t failed = 0;
  double worst_ratio = 0.0;  // max over checks of error / tolerance
};

inline Summary summarize(const std::vector<Check>& checks) {
  Summary s;
  for (const auto& c : checks) {
    (c.pass ? s.passed : s.failed) += 1;
    const double err = c.relative ? c.rel_err : c.abs_err;
    if (c.tolerance > 0.0) s.worst_ratio = std::max(s.worst_ratio, err / c.tolerance);
  }
  return s;
}

}  // namespace stiefel::verify
