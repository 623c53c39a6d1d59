#pragma once

// Command-line front end: `eval`, `verify` and `diffuse`, each emitting a
// JSON report. Exit codes: 0 all checks pass, 1 a check failed, 2 input
// error, 3 numerical degeneracy.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stiefel/ambient.hpp"
#include "stiefel/diffusion.hpp"
#include "stiefel/field_file.hpp"
#include "stiefel/laplace.hpp"
#include "stiefel/matrix_io.hpp"
#include "stiefel/verify.hpp"

namespace stiefel::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kInputError = 2, kDegeneracy = 3 };

struct RunRequest {
  std::string command;
  int n = 0;
  int p = 0;
  std::string expr;
  std::string field_file;
  std::string point_file;
  int random_points = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> methods;
  std::vector<std::string> suites;
  std::size_t cases = 0;  // 0: suite default
  std::string out;
  std::vector<std::string> tol_overrides;
  double h = 1e-3;
  std::int64_t samples = 100000;
  unsigned threads = 0;
};

using json = nlohmann::json;

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline json versions() {
  return {{"stiefel_laplace", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

inline json base_report(const RunRequest& req) {
  return {{"schema_version", kSchemaVersion},
          {"command", req.command},
          {"seed", req.seed},
          {"versions", versions()},
          {"cases", json::array()}};
}

inline json nullable(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

inline void finish(json& report, const std::vector<std::optional<bool>>& passes, json timings) {
  std::size_t passed = 0, failed = 0;
  for (const auto& p : passes) {
    if (p) (*p ? passed : failed) += 1;
  }
  report["summary"] = {{"passed", passed}, {"failed", failed}};
  report["timings"] = std::move(timings);
}

inline verify::Tolerances tolerances(const RunRequest& req) {
  verify::Tolerances tol;
  for (const auto& kv : req.tol_overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("--tol-override expects KEY=VAL, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    char* end = nullptr;
    const double v = std::strtod(val.c_str(), &end);
    if (val.empty() || *end != '\0') throw InputError("--tol-override: invalid value '" + val + "'");
    tol.set(key, v);
  }
  return tol;
}

inline ScalarField load_field(const RunRequest& req) {
  const bool has_expr = !req.expr.empty();
  const bool has_file = !req.field_file.empty();
  if (has_expr == has_file) throw InputError("give exactly one of --expr and --field-file");
  if (has_expr) {
    if (req.n < 1 || req.p < 1) throw InputError("--expr needs --n and --p");
    return expression_field(req.expr, req.n, req.p);
  }
  ScalarField f = read_field_file(req.field_file);
  if ((req.n && req.n != f.n()) || (req.p && req.p != f.p())) {
    throw InputError("--n/--p do not match the field file shape");
  }
  return f;
}

inline std::string field_label(const RunRequest& req, const ScalarField& f) {
  return req.expr.empty() ? "file:" + req.field_file + " (" + f.describe() + ")" : req.expr;
}

inline std::vector<StiefelPoint> load_points(const RunRequest& req, Index n, Index p) {
  const bool has_file = !req.point_file.empty();
  const bool has_random = req.random_points > 0;
  if (has_file == has_random) throw InputError("give exactly one of --point-file and --random-points");
  std::vector<StiefelPoint> points;
  if (has_file) {
    const Matrix m = read_matrix_file(req.point_file);
    if (m.rows() != n || m.cols() != p) {
      throw InputError("point file shape " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + " does not match field shape " +
                       std::to_string(n) + "x" + std::to_string(p));
    }
    points.emplace_back(m);
    return points;
  }
  for (int k = 0; k < req.random_points; ++k) {
    Rng rng = verify::case_rng(req.seed, static_cast<std::uint64_t>(k));
    points.push_back(random_stiefel(n, p, rng));
  }
  return points;
}

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<std::string> expand_methods(const RunRequest& req, Index n, Index p) {
  std::vector<std::string> raw;
  for (const auto& m : req.methods) {
    std::stringstream ss(m);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) raw.push_back(item);
    }
  }
  if (raw.empty()) raw.push_back("closed");
  std::vector<std::string> out;
  auto add = [&](const std::string& m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  for (const auto& m : raw) {
    if (m == "all") {
      add("closed");
      if (n * p <= DenseLimits{}.max_dim) add("frame");
      if (p == 1) add("sphere");
      if (p == n) add("son");
    } else if (m == "closed" || m == "frame") {
      add(m);
    } else if (m == "sphere") {
      if (p != 1) throw InputError("--method sphere needs p = 1");
      add(m);
    } else if (m == "son") {
      if (p != n) throw InputError("--method son needs p = n");
      add(m);
    } else {
      throw InputError("unknown method '" + m + "'");
    }
  }
  return out;
}

inline json diagnostics_json(const Diagnostics& d) {
  return {{"abs_det_u1", nullable(d.abs_det_u1)},
          {"orthonormality_residual", d.orthonormality_residual},
          {"path_discrepancy", nullable(d.path_discrepancy)}};
}

}  // namespace detail

inline int cmd_eval(const RunRequest& req, json& report) {
  const auto t0 = std::chrono::steady_clock::now();
  const verify::Tolerances tol = detail::tolerances(req);
  const ScalarField f = detail::load_field(req);
  const auto points = detail::load_points(req, f.n(), f.p());
  const auto methods = detail::expand_methods(req, f.n(), f.p());
  const double tolerance = tol.get("eval");

  std::vector<std::optional<bool>> passes;
  json discrepancies = json::array();
  json case_timings = json::array();
  std::size_t id = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const StiefelPoint& u = points[k];
    std::vector<double> values;
    for (const auto& m : methods) {
      const auto tc = std::chrono::steady_clock::now();
      json diag = nullptr;
      std::string method_tag;
      double value = 0.0;
      if (m == "closed") {
        const LaplaceReport r = laplace_closed(f, u);
        value = r.value;
        method_tag = method_name(r.method);
        diag = detail::diagnostics_json(r.diagnostics);
      } else if (m == "frame") {
        const LaplaceReport r = laplace_frame_oracle(f, u);
        value = r.value;
        method_tag = method_name(r.method);
        diag = detail::diagnostics_json(r.diagnostics);
      } else if (m == "sphere") {
        value = sphere_laplacian(f, u.matrix().col(0));
        method_tag = method_name(Method::Sphere);
      } else {
        value = special_orthogonal_laplacian(f, u);
        method_tag = method_name(Method::SpecialOrthogonal);
      }
      json c = {{"id", id},
                {"inputs", {{"point", k}, {"n", f.n()}, {"p", f.p()}, {"field", detail::field_label(req, f)},
                            {"U", detail::matrix_json(u.matrix())}}},
                {"method", method_tag},
                {"value", value},
                {"diagnostics", diag}};
      if (values.empty()) {
        c["target"] = nullptr;
        c["abs_err"] = nullptr;
        c["rel_err"] = nullptr;
        c["pass"] = nullptr;
        passes.emplace_back(std::nullopt);
      } else {
        const double target = values.front();
        const double rel = relative_error(value, target);
        c["target"] = target;
        c["abs_err"] = std::abs(value - target);
        c["rel_err"] = rel;
        c["tolerance"] = tolerance;
        c["pass"] = rel <= tolerance;
        passes.emplace_back(rel <= tolerance);
      }
      for (std::size_t a = 0; a < values.size(); ++a) {
        discrepancies.push_back({{"point", k},
                                 {"methods", {methods[a], m}},
                                 {"rel_err", relative_error(value, values[a])}});
      }
      values.push_back(value);
      case_timings.push_back({{"id", id}, {"seconds", detail::seconds_since(tc)}});
      report["cases"].push_back(std::move(c));
      ++id;
    }
  }
  report["discrepancies"] = std::move(discrepancies);
  detail::finish(report, passes,
                 {{"total_seconds", detail::seconds_since(t0)}, {"cases", std::move(case_timings)}});
  return report["summary"]["failed"].get<std::size_t>() ? kCheckFailure : kPass;
}

inline int cmd_verify(const RunRequest& req, json& report) {
  const auto t0 = std::chrono::steady_clock::now();
  verify::SuiteOptions opt;
  opt.seed = req.seed;
  opt.threads = req.threads;
  opt.tol = detail::tolerances(req);

  std::vector<std::string> suites = req.suites;
  if (suites.empty() || (suites.size() == 1 && suites[0] == "all")) suites = verify::suite_names();

  std::vector<std::optional<bool>> passes;
  json suite_timings = json::object();
  json suite_summaries = json::object();
  std::size_t id = 0;
  for (const auto& name : suites) {
    const auto ts = std::chrono::steady_clock::now();
    opt.cases = req.cases ? req.cases
                          : (name == "closed-vs-frame" ? 200
                             : (name == "annihilation" || name == "sphere-eigen") ? 50
                                                                                   : 100);
    const auto checks = verify::run_suite(name, opt);
    const auto s = verify::summarize(checks);
    for (const auto& c : checks) {
      report["cases"].push_back({{"id", id++},
                                 {"inputs",
                                  {{"suite", name},
                                   {"check", c.check},
                                   {"instance", c.instance},
                                   {"n", c.n},
                                   {"p", c.p},
                                   {"field", c.field}}},
                                 {"method", c.method},
                                 {"value", c.value},
                                 {"target", c.target},
                                 {"abs_err", c.abs_err},
                                 {"rel_err", c.rel_err},
                                 {"tolerance", c.tolerance},
                                 {"error_kind", c.relative ? "relative" : "absolute"},
                                 {"pass", c.pass}});
      passes.emplace_back(c.pass);
    }
    suite_summaries[name] = {{"cases", opt.cases}, {"passed", s.passed}, {"failed", s.failed},
                             {"worst_error_over_tolerance", s.worst_ratio}};
    suite_timings[name] = detail::seconds_since(ts);
  }
  report["suites"] = std::move(suite_summaries);
  detail::finish(report, passes,
                 {{"total_seconds", detail::seconds_since(t0)}, {"suites", std::move(suite_timings)}});
  return report["summary"]["failed"].get<std::size_t>() ? kCheckFailure : kPass;
}

inline int cmd_diffuse(const RunRequest& req, json& report) {
  const auto t0 = std::chrono::steady_clock::now();
  const verify::Tolerances tol = detail::tolerances(req);
  const ScalarField f = detail::load_field(req);
  const auto points = detail::load_points(req, f.n(), f.p());

  WalkConfig cfg;
  cfg.h = req.h;
  cfg.samples = req.samples;
  cfg.threads = req.threads;

  std::vector<std::optional<bool>> passes;
  json case_timings = json::array();
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto tc = std::chrono::steady_clock::now();
    cfg.seed = verify::case_rng(req.seed, 1000003 + k)();
    const GeneratorEstimate est = generator_estimate(f, points[k], cfg);
    const double target = 0.5 * laplace_closed(f, points[k]).value;
    json c = {{"id", k},
              {"inputs",
               {{"point", k}, {"n", f.n()}, {"p", f.p()}, {"field", detail::field_label(req, f)},
                {"h", cfg.h}, {"samples", cfg.samples}, {"U", detail::matrix_json(points[k].matrix())}}},
              {"method", "generator-estimate"},
              {"value", est.estimate},
              {"target", target},
              {"abs_err", std::abs(est.estimate - target)},
              {"rel_err", relative_error(est.estimate, target)},
              {"std_error", detail::nullable(est.std_error)}};
    if (est.std_error) {
      const double bound = generator_tolerance(*est.std_error, cfg.h, target, tol.get("diffusion-sigmas"));
      const bool ok = std::abs(est.estimate - target) <= bound;
      c["tolerance"] = bound;
      c["pass"] = ok;
      passes.emplace_back(ok);
    } else {
      c["tolerance"] = nullptr;
      c["pass"] = nullptr;
      c["note"] = "std_error undefined for a single sample; no pass claim";
      passes.emplace_back(std::nullopt);
    }
    case_timings.push_back({{"id", k}, {"seconds", detail::seconds_since(tc)}});
    report["cases"].push_back(std::move(c));
  }
  detail::finish(report, passes,
                 {{"total_seconds", detail::seconds_since(t0)}, {"cases", std::move(case_timings)}});
  return report["summary"]["failed"].get<std::size_t>() ? kCheckFailure : kPass;
}

/// Runs one request; writes the report to req.out or `out`. Errors go to `err`.
inline int execute(const RunRequest& req, std::ostream& out, std::ostream& err) {
  json report = detail::base_report(req);
  int code = kPass;
  try {
    if (req.command == "eval") {
      code = cmd_eval(req, report);
    } else if (req.command == "verify") {
      code = cmd_verify(req, report);
    } else if (req.command == "diffuse") {
      code = cmd_diffuse(req, report);
    } else {
      throw InputError("unknown command '" + req.command + "'");
    }
  } catch (const DegeneracyError& e) {
    err << "error: numerical degeneracy: " << e.what() << '\n';
    return kDegeneracy;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  const std::string text = report.dump(2) + "\n";
  if (req.out.empty()) {
    out << text;
  } else {
    std::ofstream file(req.out);
    if (!file) {
      err << "error: cannot write '" << req.out << "'\n";
      return kInputError;
    }
    file << text;
  }
  return code;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Laplace-Beltrami operator on the Stiefel manifold"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  RunRequest req;

  auto common = [&req](CLI::App* sub) {
    sub->add_option("--seed", req.seed, "Master seed");
    sub->add_option("--out", req.out, "Write the JSON report here instead of stdout");
    sub->add_option("--tol-override", req.tol_overrides, "Tolerance override KEY=VAL")->take_all();
    sub->add_option("--threads", req.threads, "Worker threads (0: hardware concurrency)");
  };
  auto field_and_points = [&req](CLI::App* sub) {
    sub->add_option("--n", req.n, "Rows of U")->check(CLI::PositiveNumber);
    sub->add_option("--p", req.p, "Columns of U")->check(CLI::PositiveNumber);
    sub->add_option("--expr", req.expr, "Field as an expression in u[i,j]");
    sub->add_option("--field-file", req.field_file, "Field as a JSON family description");
    sub->add_option("--point-file", req.point_file, "Point in matrix text format");
    sub->add_option("--random-points", req.random_points, "Number of random points")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* eval = app.add_subcommand("eval", "Evaluate the operator at points");
  common(eval);
  field_and_points(eval);
  eval->add_option("--method", req.methods, "closed, frame, sphere, son or all (comma separated)")
      ->take_all();

  CLI::App* ver = app.add_subcommand("verify", "Run randomized verification suites");
  common(ver);
  ver->add_option("--suite", req.suites, "Suite name or 'all'")->take_all();
  ver->add_option("--cases", req.cases, "Instances (points per cell for grid suites)")
      ->check(CLI::PositiveNumber);

  CLI::App* diff = app.add_subcommand("diffuse", "Monte Carlo generator check");
  common(diff);
  field_and_points(diff);
  diff->add_option("--h", req.h, "Step size")->check(CLI::PositiveNumber);
  diff->add_option("--samples", req.samples, "Number of walkers M")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kPass : kInputError;
  }
  req.command = app.get_subcommands().front()->get_name();
  return execute(req, out, err);
}

}  // namespace stiefel::cli
