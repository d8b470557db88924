#pragma once

// The four tool commands and their JSON reports.
//
//   solve      Newton iteration from the spec's initial point
//   classify   first-order test and Hessian signature at the initial point
//   enumerate  Brockett census table
//   check      finite-difference and frame audits of the spec's model
//
// Exit codes: 0 success, 1 non-convergence / not critical / failed check,
// 2 input error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stiefel/brockett_census.hpp"
#include "stiefel/cli/json_io.hpp"
#include "stiefel/cli/problem_spec.hpp"
#include "stiefel/costs.hpp"
#include "stiefel/errors.hpp"
#include "stiefel/frame.hpp"
#include "stiefel/manifold.hpp"
#include "stiefel/newton.hpp"
#include "stiefel/optimality.hpp"
#include "stiefel/oracle.hpp"

namespace stiefel::cli {

inline constexpr const char* kToolName = "stiefel-newton";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr double kCensusMatchLimit = 5000;

enum class Command { Solve, Classify, Enumerate, Check };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Classify: return "classify";
    case Command::Enumerate: return "enumerate";
    case Command::Check: return "check";
  }
  return "?";
}

inline Command parse_command(const std::string& s) {
  if (s == "solve") return Command::Solve;
  if (s == "classify") return Command::Classify;
  if (s == "enumerate") return Command::Enumerate;
  if (s == "check") return Command::Check;
  throw ParseError("command", "unknown command \"" + s + "\" (expected solve, classify, enumerate or check)");
}

struct RunFlags {
  bool trace = false;
  std::optional<std::uint64_t> seed;  // replaces the random initial point seed
  std::optional<double> tol;          // grad_tol for solve/check, tol_crit for classify
  std::optional<int> max_iters;
  bool pure_newton = false;           // disables the fallback and the indefinite modification
};

struct RunOutcome {
  int exit_code = 0;
  json report;
};

/// Folds command-line overrides into the spec so the echoed spec reproduces the run.
inline void apply_flags(ProblemSpec& spec, Command cmd, const RunFlags& flags) {
  if (flags.seed) {
    if (spec.initial.kind != InitialPoint::Kind::Random) {
      throw ParseError("--seed", "the spec's initial point is not random");
    }
    spec.initial.seed = *flags.seed;
  }
  if (flags.tol) {
    if (cmd == Command::Classify) spec.options.tol_crit = *flags.tol;
    else spec.options.grad_tol = *flags.tol;
  }
  if (flags.max_iters) spec.options.max_iters = *flags.max_iters;
  if (flags.pure_newton) spec.options.fallback = false;
  spec.options.validate();
}

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::NotCritical:
    case ErrorKind::SolveFailure:
    case ErrorKind::PivotFailure:
    case ErrorKind::DegenerateFrame:
    case ErrorKind::RankDeficient:
      return 1;
    default:
      return 2;
  }
}

inline const char* remediation_hint(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse: return "fix the JSON at the reported line or field";
    case ErrorKind::Dimension: return "check that every matrix the problem needs is present with matching sizes";
    case ErrorKind::ConstraintViolation: return "the initial matrix must have orthonormal columns (U^T U = I)";
    case ErrorKind::NotSymmetric: return "A must be symmetric";
    case ErrorKind::BadWeights:
      return "N must be diagonal with 0 <= mu_1 <= ... <= mu_p, or set allow_unordered_weights";
    case ErrorKind::ValidationFailure: return "the supplied gradient or Hessian disagrees with finite differences";
    case ErrorKind::DegenerateSpectrum: return "the census needs A with distinct eigenvalues";
    case ErrorKind::NotCritical: return "classify needs a critical point; run solve first";
    case ErrorKind::SolveFailure: return "try enabling the gradient fallback or a different start";
    case ErrorKind::PivotFailure:
    case ErrorKind::DegenerateFrame:
    case ErrorKind::RankDeficient: return "the point is numerically degenerate; try a different start";
    default: return "see the message";
  }
}

namespace detail {

inline json criticality_json(const CriticalityReport& c) {
  json j;
  j["is_critical"] = c.is_critical;
  j["sym_residual"] = c.sym_residual;
  j["range_residual"] = c.range_residual;
  j["embedded_grad_norm"] = c.embedded_grad_norm;
  j["tolerance"] = c.tolerance;
  return j;
}

inline json classification_json(const Classification& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["eigenvalues"] = vector_to_json(c.eigenvalues);
  j["zero_threshold"] = c.zero_threshold;
  return j;
}

inline json trace_json(const std::vector<IterationRecord>& trace) {
  json out = json::array();
  for (const auto& r : trace) {
    json j;
    j["k"] = r.k;
    j["cost"] = r.cost;
    j["grad_norm"] = r.grad_norm;
    j["step"] = to_string(r.step);
    j["solve_residual"] = r.solve_residual;
    j["backtracks"] = r.backtracks;
    out.push_back(std::move(j));
  }
  return out;
}

inline double census_size(const BrockettData& d) {
  double count = std::pow(2.0, static_cast<double>(d.n.rows()));
  for (Eigen::Index k = 0; k < d.n.rows(); ++k) count *= static_cast<double>(d.a.rows() - k);
  return count;
}

inline std::optional<json> census_match(const ProblemSpec& spec, const StiefelPoint& u) {
  if (spec.problem != ProblemKind::Brockett) return std::nullopt;
  const BrockettData data = brockett_data(spec);
  if (census_size(data) > kCensusMatchLimit) return std::nullopt;
  std::vector<CensusPoint> census;
  try {
    census = enumerate_brockett_critical_points(data, spec.census_tol, {spec.allow_unordered_weights});
  } catch (const DegenerateSpectrum&) {
    return std::nullopt;
  }
  std::size_t best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < census.size(); ++k) {
    const double d = (census[k].point.matrix() - u.matrix()).norm();
    if (d < dist) {
      dist = d;
      best = k;
    }
  }
  json j;
  j["index"] = best;
  j["generator"] = census[best].generator();
  j["value"] = census[best].value;
  j["kind"] = to_string(census[best].classification.kind);
  j["distance"] = dist;
  return j;
}

inline json report_json(const oracle::OracleReport& r) {
  json j;
  j["quantity"] = r.quantity;
  j["formula_value"] = r.formula_value;
  j["oracle_value"] = r.oracle_value;
  j["abs_error"] = r.abs_error;
  j["rel_error"] = r.rel_error;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  return j;
}

inline json run_solve(const ProblemSpec& spec, const RunFlags& flags, json& report, int& code) {
  const CostModel model = build_model(spec);
  NewtonOptions opts = spec.options;
  opts.classify_final = spec.classify;
  const OptimizationResult res = newton_solve(model, initial_point(spec), opts);
  json r;
  r["status"] = to_string(res.status);
  r["iterations"] = res.iterations();
  r["value"] = res.value;
  r["point"] = matrix_to_json(res.point.matrix());
  r["criticality"] = criticality_json(res.criticality);
  if (spec.classify) r["classification"] = res.classification ? classification_json(*res.classification) : json();
  if (auto m = census_match(spec, res.point)) r["census_match"] = *m;
  if (flags.trace) report["trace"] = trace_json(res.trace);
  code = res.status == SolveStatus::Converged ? 0 : 1;
  return r;
}

inline json run_classify(const ProblemSpec& spec, int& code) {
  const CostModel model = build_model(spec);
  const StiefelPoint u = initial_point(spec);
  const CriticalityReport crit = is_critical(model, u, spec.options.tol_crit);
  json r;
  r["value"] = model.value(u);
  r["point"] = matrix_to_json(u.matrix());
  r["criticality"] = criticality_json(crit);
  if (crit.is_critical) {
    r["classification"] = classification_json(classify_critical_point(model, u, spec.options.tol_crit,
                                                                      spec.options.tol_eig));
    code = 0;
  } else {
    r["classification"] = json();
    code = 1;
  }
  return r;
}

inline json run_enumerate(const ProblemSpec& spec, int& code) {
  const auto census = enumerate_brockett_critical_points(brockett_data(spec), spec.census_tol,
                                                         {spec.allow_unordered_weights});
  json rows = json::array();
  json groups = json::array();
  for (std::size_t k = 0; k < census.size(); ++k) {
    const CensusPoint& c = census[k];
    json row;
    row["index"] = k;
    row["generator"] = c.generator();
    row["value"] = c.value;
    row["kind"] = to_string(c.classification.kind);
    row["eigenvalues"] = vector_to_json(c.classification.eigenvalues);
    row["point"] = matrix_to_json(c.point.matrix());
    rows.push_back(std::move(row));

    const bool same = !groups.empty() &&
                      std::abs(groups.back()["value"].get<double>() - c.value) <=
                          1e-9 * std::max(1.0, std::abs(c.value));
    if (!same) {
      json g;
      g["value"] = c.value;
      g["count"] = 0;
      g["kinds"] = json::object();
      groups.push_back(std::move(g));
    }
    json& g = groups.back();
    g["count"] = g["count"].get<int>() + 1;
    const std::string kind = to_string(c.classification.kind);
    g["kinds"][kind] = g["kinds"].contains(kind) ? g["kinds"][kind].get<int>() + 1 : 1;
  }
  json r;
  r["count"] = census.size();
  r["value_groups"] = groups;
  r["points"] = rows;
  code = 0;
  return r;
}

inline json run_check(const ProblemSpec& spec, int& code) {
  const CostModel model = build_model(spec);
  const StiefelPoint u = initial_point(spec);
  std::vector<oracle::OracleReport> reports;

  // Gradient and ambient Hessian at the initial point and three seeded probes.
  std::vector<StiefelPoint> probes{u};
  for (std::uint64_t s = 1; s <= 3; ++s) probes.push_back(random_stiefel(spec.n, spec.p, spec.initial.seed + 7919 * s));
  std::mt19937_64 rng(spec.initial.seed ^ 0x5DEECE66DULL);
  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const Matrix& x = probes[k].matrix();
    const Matrix g = model.gradient(x);
    const Matrix gfd = oracle::fd_gradient(model, x);
    oracle::OracleReport gr = oracle::compare("gradient probe " + std::to_string(k), g.norm(), gfd.norm(),
                                              oracle::kGradientTolerance);
    gr.abs_error = max_abs(g - gfd);
    gr.rel_error = fd::relative_error(g, gfd);
    gr.pass = gr.rel_error <= oracle::kGradientTolerance;
    reports.push_back(gr);

    Matrix v(spec.n, spec.p);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
    reports.push_back(oracle::compare("ambient Hessian quadratic form probe " + std::to_string(k),
                                      model.hess_bilinear(x, v, v), oracle::fd_hessian_quadform(model, x, v),
                                      oracle::kAmbientHessianTolerance));
  }

  // Frame structure and Sigma closed forms at the initial point.
  const LocalFrame frame = build_frame(u);
  for (auto& r : oracle::audit_frame(frame)) reports.push_back(std::move(r));
  const SigmaMatrix sigma = sigma_matrix(model, u);
  const Matrix z = u.complement_projector();
  double sigma_gap = 0.0;
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    for (Eigen::Index j = 0; j < frame.size(); ++j) {
      const double general = sigma_kron_bilinear(sigma, z, frame.tangent(i), frame.tangent(j));
      const double closed = sigma_kron_closed_form(sigma, z, frame.labels[static_cast<std::size_t>(i)],
                                                   frame.labels[static_cast<std::size_t>(j)]);
      sigma_gap = std::max(sigma_gap, std::abs(general - closed));
    }
  }
  reports.push_back(oracle::bounded("Sigma (x) I closed forms vs trace formula", sigma_gap, oracle::kFrameTolerance));

  // Riemannian Hessian along frame directions, only meaningful at critical points.
  const CriticalityReport crit = is_critical(model, u, spec.options.tol_crit);
  if (crit.is_critical) {
    const FrameHessian fh = assemble_frame_hessian(model, u, frame);
    for (Eigen::Index k = 0; k < frame.size(); ++k) {
      reports.push_back(oracle::compare("Riemannian Hessian frame direction " + std::to_string(k), fh.h(k, k),
                                        oracle::fd_riemannian_quadform(model, u, frame.tangent(k)),
                                        oracle::kRiemannianHessianTolerance));
    }
  }

  json list = json::array();
  bool all = true;
  for (const auto& r : reports) {
    all = all && r.pass;
    list.push_back(report_json(r));
  }
  json r;
  r["all_pass"] = all;
  r["initial_point_critical"] = crit.is_critical;
  r["checks"] = list;
  code = all ? 0 : 1;
  return r;
}

}  // namespace detail

/// Runs `cmd` on an already parsed spec. Library errors propagate.
inline RunOutcome run_spec(Command cmd, ProblemSpec spec, const RunFlags& flags) {
  const auto t0 = std::chrono::steady_clock::now();
  apply_flags(spec, cmd, flags);
  RunOutcome out;
  json& report = out.report;
  report["tool"] = kToolName;
  report["version"] = kToolVersion;
  report["command"] = to_string(cmd);
  report["spec"] = spec_to_json(spec);
  json result;
  switch (cmd) {
    case Command::Solve: result = detail::run_solve(spec, flags, report, out.exit_code); break;
    case Command::Classify: result = detail::run_classify(spec, out.exit_code); break;
    case Command::Enumerate: result = detail::run_enumerate(spec, out.exit_code); break;
    case Command::Check: result = detail::run_check(spec, out.exit_code); break;
  }
  // Keep "trace" (if any) after "result" in the output.
  json ordered;
  for (auto it = report.begin(); it != report.end(); ++it)
    if (it.key() != "trace") ordered[it.key()] = it.value();
  ordered["result"] = std::move(result);
  if (report.contains("trace")) ordered["trace"] = report["trace"];
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ordered["timing"] = json{{"wall_seconds", secs}};
  report = std::move(ordered);
  return out;
}

inline json error_report(const std::string& command, const Error& e) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["command"] = command;
  j["error"] = json{{"kind", to_string(e.kind())}, {"message", e.what()}, {"hint", remediation_hint(e.kind())}};
  return j;
}

/// Parses the spec file and runs; every library error becomes an error report.
inline RunOutcome run(const std::string& command, const std::string& spec_path, const RunFlags& flags) {
  try {
    const Command cmd = parse_command(command);
    return run_spec(cmd, parse_problem_spec(spec_path), flags);
  } catch (const Error& e) {
    return {exit_code_for(e.kind()), error_report(command, e)};
  }
}

/// Human-readable rendering of a report.
inline std::string render_pretty(const json& report) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << report.value("tool", "") << " " << report.value("command", "") << "\n";
  if (report.contains("error")) {
    const json& e = report["error"];
    os << "error: " << e["message"].get<std::string>() << "\n";
    os << "hint:  " << e["hint"].get<std::string>() << "\n";
    return os.str();
  }
  const json& spec = report["spec"];
  os << "problem: " << spec["problem"].get<std::string>() << "\n";
  const json& r = report["result"];
  const std::string cmd = report["command"];
  auto crit_line = [&](const json& c) {
    os << "criticality: " << (c["is_critical"].get<bool>() ? "critical" : "not critical")
       << " (sym " << c["sym_residual"].get<double>() << ", range " << c["range_residual"].get<double>()
       << ", |dG| " << c["embedded_grad_norm"].get<double>() << ")\n";
  };
  if (cmd == "solve") {
    os << "status: " << r["status"].get<std::string>() << " after " << r["iterations"].get<int>()
       << " iterations\n";
    os << "value: " << r["value"].get<double>() << "\n";
    crit_line(r["criticality"]);
    if (r.contains("classification") && !r["classification"].is_null()) {
      os << "classification: " << r["classification"]["kind"].get<std::string>() << "\n";
    }
    if (r.contains("census_match")) {
      const json& m = r["census_match"];
      os << "nearest census point: #" << m["index"].get<std::size_t>() << " " << m["generator"].get<std::string>()
         << " at distance " << m["distance"].get<double>() << "\n";
    }
  } else if (cmd == "classify") {
    os << "value: " << r["value"].get<double>() << "\n";
    crit_line(r["criticality"]);
    if (!r["classification"].is_null()) os << "classification: " << r["classification"]["kind"].get<std::string>() << "\n";
  } else if (cmd == "enumerate") {
    os << r["count"].get<std::size_t>() << " critical points\n";
    for (const auto& g : r["value_groups"]) {
      os << "  value " << g["value"].get<double>() << " x" << g["count"].get<int>() << ":";
      for (auto it = g["kinds"].begin(); it != g["kinds"].end(); ++it) os << " " << it.key() << "=" << it.value();
      os << "\n";
    }
    os << std::left;
    for (const auto& row : r["points"]) {
      os << "  " << std::setw(4) << row["index"].get<std::size_t>() << std::setw(12)
         << row["generator"].get<std::string>() << std::setw(20) << row["value"].get<double>()
         << row["kind"].get<std::string>() << "\n";
    }
  } else if (cmd == "check") {
    for (const auto& c : r["checks"]) {
      os << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << c["quantity"].get<std::string>() << " (error "
         << c["rel_error"].get<double>() << ", tol " << c["tolerance"].get<double>() << ")\n";
    }
    os << (r["all_pass"].get<bool>() ? "all checks passed\n" : "some checks failed\n");
  }
  if (report.contains("trace")) {
    os << "trace:\n";
    for (const auto& t : report["trace"]) {
      os << "  k=" << t["k"].get<int>() << " cost=" << t["cost"].get<double>()
         << " |dG|=" << t["grad_norm"].get<double>() << " step=" << t["step"].get<std::string>() << "\n";
    }
  }
  os << "wall time: " << report["timing"]["wall_seconds"].get<double>() << " s\n";
  return os.str();
}

}  // namespace stiefel::cli
