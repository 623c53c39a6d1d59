// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "stiefel/diffusion.hpp"
#include "stiefel/laplace.hpp"
#include "stiefel/verify.hpp"

using namespace stiefel;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome from_checks(const std::vector<verify::Check>& checks) {
  const verify::Summary s = verify::summarize(checks);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu/%zu checks, worst error/tolerance %.3g", s.passed,
                s.passed + s.failed, s.worst_ratio);
  Outcome o{s.failed == 0 && s.passed > 0, buf};
  for (const auto& c : checks) {
    if (!c.pass) {
      std::snprintf(buf, sizeof buf, "; first failure %s n=%td p=%td value %.17g target %.17g",
                    c.check.c_str(), c.n, c.p, c.value, c.target);
      o.detail += buf;
      break;
    }
  }
  return o;
}

std::vector<verify::Check> suite(const std::string& name, std::size_t cases, std::uint64_t seed) {
  verify::SuiteOptions opt;
  opt.cases = cases;
  opt.seed = seed;
  return verify::run_suite(name, opt);
}

std::vector<verify::Check> join(std::vector<verify::Check> a, const std::vector<verify::Check>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

Outcome reductions() {
  std::vector<verify::Check> checks = suite("reductions", 200, 6);
  // Integer form of the coefficient: 2(n - (p+1)/2) at p = n is 2n - n - 1 = n - 1.
  for (Index n = 1; n <= 64; ++n) {
    const Index twice_general = 2 * n - (n + 1);
    checks.push_back(verify::compare("coefficient-integer-form", n, n, "", "",
                                     static_cast<double>(twice_general), static_cast<double>(n - 1),
                                     0.0, false));
    checks.push_back(verify::compare("coefficient-closed-form", n, n, "", "",
                                     2.0 * closed_form_coefficient(n, n), static_cast<double>(n - 1),
                                     0.0, false));
    checks.push_back(verify::compare("coefficient-special-orthogonal", n, n, "", "",
                                     2.0 * special_orthogonal_coefficient(n), static_cast<double>(n - 1),
                                     0.0, false));
  }
  return from_checks(checks);
}

struct GeneratorCase {
  std::string label;
  ScalarField field;
  StiefelPoint point;
};

Outcome generator_check() {
  Rng rng = verify::case_rng(10, 0);
  const Matrix e1 = Matrix::Identity(3, 1);
  const StiefelPoint s2 = random_stiefel(3, 1, rng);
  const StiefelPoint st42 = random_stiefel(4, 2, rng);
  const Matrix g = gaussian_matrix(4, 4, rng);
  const std::vector<GeneratorCase> cases{
      {"u[1,1] at e1 (3,1)", expression_field("u[1,1]", 3, 1), StiefelPoint(e1)},
      {"3*u[3,1]^2 - 1 (3,1)", expression_field("3*u[3,1]^2 - 1", 3, 1), s2},
      {"u[1,1]*u[2,1] + sin(u[3,1]) (3,1)", expression_field("u[1,1]*u[2,1] + sin(u[3,1])", 3, 1), s2},
      {"linear (4,2)", make_field(LinearFamily{gaussian_matrix(4, 2, rng)}), st42},
      {"brockett (4,2)",
       make_field(BrockettFamily{0.5 * (g + g.transpose()), (Vector(2) << 1.0, 2.0).finished()}), st42},
      {"procrustes (4,2)",
       make_field(ProcrustesFamily{gaussian_matrix(5, 4, rng), gaussian_matrix(5, 2, rng)}), st42},
  };
  std::vector<verify::Check> checks;
  std::string detail;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& c = cases[k];
    const double target = 0.5 * laplace_closed(c.field, c.point).value;
    const WalkConfig cfg{1e-3, 100000, 1000 + k, 0};
    const GeneratorEstimate est = generator_estimate(c.field, c.point, cfg);
    const double tol = generator_tolerance(*est.std_error, cfg.h, target);
    checks.push_back(verify::compare("generator", c.point.n(), c.point.p(), c.label, "diffusion",
                                     est.estimate, target, tol, false));
    char buf[200];
    std::snprintf(buf, sizeof buf, "\n      %-36s estimate %+.5f  target %+.5f  |diff| %.2e  tol %.2e",
                  c.label.c_str(), est.estimate, target, std::abs(est.estimate - target), tol);
    detail += buf;
  }
  Outcome o = from_checks(checks);
  o.detail += detail;
  return o;
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "closed form agrees with adapted-frame formula",
       [] { return from_checks(suite("closed-vs-frame", 200, 1)); }},
      {2, "constraint functions are annihilated", [] { return from_checks(suite("annihilation", 50, 2)); }},
      {3, "projector identity, idempotence and rank",
       [] { return from_checks(suite("projector-identity", 100, 3)); }},
      {4, "tangent basis structure", [] { return from_checks(suite("gram-structure", 100, 4)); }},
      {5, "sphere eigenfunctions", [] { return from_checks(suite("sphere-eigen", 50, 5)); }},
      {6, "sphere and special orthogonal reductions", reductions},
      {7, "prolongation independence and isometry invariance",
       [] { return from_checks(join(suite("prolongation", 100, 7), suite("isometry", 100, 17))); }},
      {8, "trace identities", [] { return from_checks(suite("trace-identities", 100, 8)); }},
      {9, "derivatives agree with finite differences", [] { return from_checks(suite("ad", 100, 9)); }},
      {10, "random walk generator matches half the operator", generator_check},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %2d: %s (%.1f s) %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
