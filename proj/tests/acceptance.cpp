// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "stiefel/cli/run.hpp"
#include "test_support.hpp"

using namespace stiefel;
using testsupport::random_matrix;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// One Procrustes, Penrose or Brockett instance by index, with a critical point
/// when `critical` is set.
std::pair<CostModel, StiefelPoint> model_and_point(int k, bool critical) {
  const auto seed = static_cast<std::uint64_t>(1000 + 31 * k);
  const Eigen::Index n = 4 + k % 4;
  const Eigen::Index p = 1 + k % 3;
  switch (k % 3) {
    case 0: {
      const Matrix a = random_matrix(n + 2, n, seed);
      const StiefelPoint u = random_stiefel(n, p, seed + 1);
      const Matrix b = critical ? Matrix(a * u.matrix()) : random_matrix(n + 2, p, seed + 2);
      return {procrustes_model({a, b}), critical ? u : random_stiefel(n, p, seed + 3)};
    }
    case 1: {
      const Matrix a = random_matrix(n + 1, n, seed);
      const Matrix c = random_matrix(p, p + 1, seed + 1);
      const StiefelPoint u = random_stiefel(n, p, seed + 2);
      const Matrix b = critical ? Matrix(a * u.matrix() * c) : random_matrix(n + 1, p + 1, seed + 3);
      return {penrose_model({a, b, c}), critical ? u : random_stiefel(n, p, seed + 4)};
    }
    default: {
      const Matrix a = testsupport::random_symmetric(n, seed);
      const Matrix nw = Vector::LinSpaced(p, 1, static_cast<double>(p)).asDiagonal();
      if (!critical) return {brockett_model({a, nw}), random_stiefel(n, p, seed + 1)};
      // Signed eigenvectors of A in a seeded order.
      const Matrix vecs = canonical_eigenvectors(a);
      Matrix u(n, p);
      for (Eigen::Index c = 0; c < p; ++c) u.col(c) = ((c + k) % 2 ? -1.0 : 1.0) * vecs.col((c + k) % n);
      return {brockett_model({a, nw}), make_stiefel_point(u)};
    }
  }
}

std::vector<CostModel> models_for_probes(std::uint64_t seed) {
  return {procrustes_model({random_matrix(7, 5, seed), random_matrix(7, 3, seed + 1)}),
          penrose_model({random_matrix(6, 5, seed + 2), random_matrix(6, 4, seed + 3), random_matrix(3, 4, seed + 4)}),
          brockett_model({testsupport::random_symmetric(5, seed + 5), Vector::LinSpaced(3, 0.5, 2.5).asDiagonal()})};
}

Outcome c1_census() {
  const auto t0 = std::chrono::steady_clock::now();
  const cli::RunOutcome out =
      cli::run_spec(cli::Command::Enumerate, cli::parse_problem_spec(std::string(STIEFEL_SPEC_DIR) + "/brockett_st42.json"), {});
  const double secs = seconds_since(t0);
  const auto& rows = out.report["result"]["points"];
  std::map<long, int> counts;
  bool values_ok = true, kinds_ok = true;
  for (const auto& row : rows) {
    const double v = row["value"].get<double>();
    const long r = std::lround(v);
    values_ok = values_ok && std::abs(v - static_cast<double>(r)) <= 1e-8;
    ++counts[r];
    const std::string kind = row["kind"];
    const std::string want = r == 4 ? "LocalMinimum" : r == 11 ? "LocalMaximum" : "Saddle";
    kinds_ok = kinds_ok && kind == want;
  }
  const std::map<long, int> expected = {{4, 4}, {5, 8}, {6, 4}, {7, 8}, {8, 8}, {9, 4}, {10, 8}, {11, 4}};
  const bool pass = out.exit_code == 0 && rows.size() == 48 && values_ok && counts == expected && kinds_ok && secs < 1.0;
  return {pass, std::to_string(rows.size()) + " points, multiset " + (counts == expected ? "ok" : "WRONG") +
                    ", kinds " + (kinds_ok ? "ok" : "WRONG") + ", " + fmt("%.3f s", secs)};
}

Outcome c2_criticality_equivalence() {
  int disagreements = 0, critical = 0;
  for (int k = 0; k < 200; ++k) {
    const auto [model, point] = model_and_point(k, k % 2 == 0);
    const CriticalityReport rep = is_critical(model, point, 1e-8);
    const bool by_norm = embedded_gradient(model, point).matrix().norm() <= 1e-8;
    if (rep.is_critical != by_norm) ++disagreements;
    if (rep.is_critical) ++critical;
  }
  return {disagreements == 0 && critical > 0 && critical < 200,
          std::to_string(disagreements) + " disagreements over 200 pairs (" + std::to_string(critical) + " critical)"};
}

Outcome c3_gradients() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (const CostModel& m : models_for_probes(50 * s)) {
      const Matrix u = random_stiefel(m.n(), m.p(), 7 + s).matrix();
      worst = std::max(worst, fd::relative_error(m.gradient(u), oracle::fd_gradient(m, u, 1e-5)));
    }
  }
  return {worst <= 1e-6, "max relative error " + fmt("%.2e", worst) + " (tol 1e-6)"};
}

Outcome c4_ambient_hessian() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    for (const CostModel& m : models_for_probes(50 * s)) {
      const Matrix u = random_stiefel(m.n(), m.p(), 9 + s).matrix();
      const Matrix v = random_matrix(m.n(), m.p(), 11 + s);
      worst = std::max(worst, fd::relative_error(m.hess_bilinear(u, v, v), oracle::fd_hessian_quadform(m, u, v)));
    }
  }
  return {worst <= 1e-7, "max relative error " + fmt("%.2e", worst) + " (tol 1e-7)"};
}

Outcome c5_riemannian_hessian() {
  const auto d = testsupport::brockett_st42();
  const CostModel m = brockett_model(d);
  const auto census = enumerate_brockett_critical_points(d);
  double worst = 0.0;
  int checked = 0;
  for (std::size_t idx : {0u, 9u, 18u, 27u, 36u, 47u}) {
    const StiefelPoint& u = census[idx].point;
    const LocalFrame f = build_frame(u);
    const FrameHessian fh = assemble_frame_hessian(m, u, f);
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      worst = std::max(worst, fd::relative_error(fh.h(k, k), oracle::fd_riemannian_quadform(m, u, f.tangent(k))));
      ++checked;
    }
  }
  return {worst <= 1e-4 && checked == 30,
          std::to_string(checked) + " directions, max relative error " + fmt("%.2e", worst) + " (tol 1e-4)"};
}

Outcome c6_frame_properties() {
  const std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes = {{4, 2}, {5, 3}, {8, 2}};
  int failures = 0;
  std::string first;
  for (int k = 0; k < 50; ++k) {
    const auto [n, p] = shapes[static_cast<std::size_t>(k % 3)];
    const LocalFrame f = build_frame(random_stiefel(n, p, 300 + static_cast<std::uint64_t>(k)));
    for (const auto& r : oracle::audit_frame(f, 1e-12)) {
      if (!r.pass) {
        ++failures;
        if (first.empty()) first = r.quantity;
      }
    }
  }
  return {failures == 0, "50 points, " + std::to_string(failures) + " failed audits" + (first.empty() ? "" : " (" + first + ")")};
}

Outcome c7_sigma_closed_forms() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const StiefelPoint u = random_stiefel(5, 3, 400 + s);
    const CostModel pen = penrose_model({random_matrix(6, 5, 600 + s), random_matrix(6, 2, 601 + s), random_matrix(3, 2, 602 + s)});
    const SigmaMatrix sigma = sigma_matrix(pen, u);
    const Matrix z = u.complement_projector();
    const LocalFrame f = build_frame(u);
    for (Eigen::Index i = 0; i < f.size(); ++i)
      for (Eigen::Index j = 0; j < f.size(); ++j)
        worst = std::max(worst, std::abs(sigma_kron_bilinear(sigma, z, f.tangent(i), f.tangent(j)) -
                                         sigma_kron_closed_form(sigma, z, f.labels[static_cast<std::size_t>(i)],
                                                                f.labels[static_cast<std::size_t>(j)])));
  }
  return {worst <= 1e-12, "max |general - closed form| " + fmt("%.2e", worst) + " (tol 1e-12)"};
}

Outcome c8_constraint_hessian_tables() {
  int bad_values = 0, bad_mixed = 0;
  double worst_pairing = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(s % 3), p = 3 + static_cast<Eigen::Index>(s % 2);
    const StiefelPoint u = random_stiefel(n, p, 700 + s);
    const LocalFrame f = build_frame(u);
    const Matrix z = u.complement_projector();
    for (Eigen::Index i = 0; i < f.size(); ++i)
      for (Eigen::Index j = 0; j < f.size(); ++j) {
        const FrameLabel& l1 = f.labels[static_cast<std::size_t>(i)];
        const FrameLabel& l2 = f.labels[static_cast<std::size_t>(j)];
        std::vector<std::pair<double, double>> vals;  // closed form, direct column pairing
        for (Eigen::Index a = 0; a < p; ++a)
          vals.push_back({constraint_hessian_diag(a, z, l1, l2), f.vector(i).col(a).dot(f.vector(j).col(a))});
        for (Eigen::Index b = 0; b < p; ++b)
          for (Eigen::Index c = b + 1; c < p; ++c)
            vals.push_back({constraint_hessian_offdiag(b, c, z, l1, l2),
                            f.vector(i).col(b).dot(f.vector(j).col(c)) + f.vector(i).col(c).dot(f.vector(j).col(b))});
        for (const auto& [closed, direct] : vals) {
          worst_pairing = std::max(worst_pairing, std::abs(closed - direct));
          if (l1.block == FrameBlock::Prime && l2.block == FrameBlock::Prime &&
              !(closed == 0.0 || closed == 1.0 || closed == -1.0))
            ++bad_values;
          if (l1.block != l2.block && closed != 0.0) ++bad_mixed;
        }
      }
  }
  return {bad_values == 0 && bad_mixed == 0 && worst_pairing <= 1e-12,
          std::to_string(bad_values) + " prime values outside {0,+-1}, " + std::to_string(bad_mixed) +
              " nonzero mixed, max table-vs-pairing gap " + fmt("%.2e", worst_pairing)};
}

Outcome c9_newton_procrustes() {
  const auto inst = testsupport::procrustes_instance(10, 8, 3, 2024);
  const CostModel m = procrustes_model(inst.data);
  int failures = 0, max_iters = 0;
  double max_secs = 0.0, worst_rate = 0.0;
  std::string why;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    const OptimizationResult r = newton_solve(m, random_stiefel(8, 3, 5000 + s));
    const double secs = seconds_since(t0);
    max_secs = std::max(max_secs, secs);
    max_iters = std::max(max_iters, r.iterations());
    const Matrix btau = inst.data.b.transpose() * inst.data.a * r.point.matrix();
    bool ok = r.status == SolveStatus::Converged && r.iterations() <= 20 && r.trace.back().grad_norm <= 1e-10 &&
              max_abs(btau - btau.transpose()) <= 1e-8 && secs < 1.0;
    // Quadratic decrease on the last three gradient norms: fit C from the
    // first pair, require the second pair to obey it (down to roundoff).
    if (ok && r.trace.size() >= 3) {
      const std::size_t t = r.trace.size();
      const double ea = r.trace[t - 3].grad_norm, eb = r.trace[t - 2].grad_norm, ec = r.trace[t - 1].grad_norm;
      const double c = eb / (ea * ea);
      worst_rate = std::max(worst_rate, c * eb);
      ok = c * eb < 1.0 && ec <= std::max(10.0 * c * eb * eb, 1e-13);
    } else if (ok) {
      ok = false;
    }
    if (!ok) {
      ++failures;
      if (why.empty()) why = " (start " + std::to_string(s) + ": " + to_string(r.status) + ")";
    }
  }
  return {failures == 0, std::to_string(10 - failures) + "/10 starts ok, max " + std::to_string(max_iters) +
                             " iterations, max C*e_k " + fmt("%.2e", worst_rate) + ", max " + fmt("%.3f s", max_secs) +
                             why};
}

Outcome c10_newton_census() {
  const auto d = testsupport::brockett_st42();
  const CostModel m = brockett_model(d);
  const auto census = enumerate_brockett_critical_points(d);
  int misses = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const OptimizationResult r = newton_solve(m, random_stiefel(4, 2, 8000 + s));
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : census) best = std::min(best, (c.point.matrix() - r.point.matrix()).norm());
    worst = std::max(worst, best);
    if (r.status != SolveStatus::Converged || best > 1e-6) ++misses;
  }
  return {misses == 0, std::to_string(100 - misses) + "/100 solves end at a census point, max distance " + fmt("%.2e", worst)};
}

Outcome c11_sphere() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const StiefelPoint x = random_stiefel(5, 1, 900 + s);
    const LocalFrame f = build_frame(x);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < 5; ++i) {
      if (f.pivots.contains(i)) continue;
      Vector e = Vector::Zero(5);
      e(i) = 1.0;
      const Vector expected = e - x.matrix()(i, 0) * x.matrix().col(0);
      worst = std::max(worst, (f.vector(k).col(0) - expected).cwiseAbs().maxCoeff());
      ++k;
    }
    if (k != 4 || f.size() != 4) worst = std::numeric_limits<double>::infinity();
  }
  return {worst <= 1e-15, "max entry deviation " + fmt("%.2e", worst) + " (tol 1e-15)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1  Brockett St(4,2) census", c1_census},
      {"2  criticality conditions vs |dG| <= tol", c2_criticality_equivalence},
      {"3  gradient formulas vs finite differences", c3_gradients},
      {"4  ambient Hessian vs second differences", c4_ambient_hessian},
      {"5  frame Hessian vs retraction-curve differences", c5_riemannian_hessian},
      {"6  local frame properties", c6_frame_properties},
      {"7  Sigma (x) I closed forms", c7_sigma_closed_forms},
      {"8  constraint Hessian tables", c8_constraint_hessian_tables},
      {"9  Newton convergence on Procrustes n=8 p=3", c9_newton_procrustes},
      {"10 Newton endpoints match the census", c10_newton_census},
      {"11 sphere frame e_i - x_i x", c11_sphere},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %-50s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
