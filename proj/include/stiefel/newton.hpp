#pragma once

// Newton iteration on St(n,p) in explicit frame coordinates. Each iteration
// rebuilds the pivot set and frame at the current point, solves
//   H v = -g
// with H the frame Hessian and g the frame gradient coordinates, forms the
// tangent step sum_k v_k Delta_k and retracts with qf. When the fallback is
// enabled, a gradient step with Armijo backtracking replaces Newton steps that
// are not descent directions or whose linear solve fails, and at points where
// H is indefinite the step solves with |H| instead (eigenvalues of (H, gram)
// replaced by their absolute values), so saddles repel the iteration.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "stiefel/costs.hpp"
#include "stiefel/errors.hpp"
#include "stiefel/frame.hpp"
#include "stiefel/manifold.hpp"
#include "stiefel/optimality.hpp"

namespace stiefel {

struct NewtonOptions {
  int max_iters = 100;
  double grad_tol = 1e-10;         // on |dG|_F
  bool fallback = true;            // false reproduces the plain Newton iteration
  double armijo_c = 1e-4;
  double armijo_shrink = 0.5;
  int max_backtracks = 30;
  bool modify_indefinite = true;  // only with fallback
  double regularization_start = 1e-10;  // times |H|_F
  int max_regularization_attempts = 40;
  double solve_residual_tol = 1e-8;
  double descent_tol = 1e-12;
  std::uint64_t seed = 0;
  bool classify_final = false;
  double tol_crit = kDefaultCriticalTolerance;
  double tol_eig = kDefaultEigenTolerance;

  void validate() const {
    if (max_iters < 0) throw DimensionError("max_iters must be >= 0");
    if (!(grad_tol > 0 && armijo_c > 0 && armijo_shrink > 0 && armijo_shrink < 1 &&
          regularization_start > 0 && solve_residual_tol > 0 && tol_crit > 0 && tol_eig > 0)) {
      throw DimensionError("Newton tolerances must be positive (and armijo_shrink in (0,1))");
    }
  }
};

struct NewtonDiagnostics {
  Eigen::Index frame_dimension = 0;
  double solve_residual = 0.0;    // |H' v + g| / |g| for the system actually solved
  double regularization = 0.0;    // mu in H + mu * gram (0 if unregularized)
  int regularization_attempts = 0;
  double directional_derivative = 0.0;  // <dG, v>
};

struct NewtonStep {
  TangentVector direction;
  NewtonDiagnostics diagnostics;
};

/// One Newton direction at `point`. Throws SolveFailure when neither H nor any
/// gram-shifted H + mu gram (mu doubling from regularization_start * |H|)
/// yields an accurate solution.
inline NewtonStep newton_step(const CostModel& model, const StiefelPoint& point,
                              const NewtonOptions& opts = {}) {
  const LocalFrame frame = build_frame(point);
  const Vector g = frame_gradient_coords(model, point, frame);
  NewtonDiagnostics diag;
  diag.frame_dimension = frame.size();
  if (g.isZero(0.0)) {
    return {zero_tangent(point), diag};
  }
  const FrameHessian fh = assemble_frame_hessian(model, point, frame);
  const double gnorm = g.norm();

  auto try_solve = [&](const Matrix& h) -> std::optional<Vector> {
    Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    Vector v = ldlt.solve(-g);
    if (!v.allFinite()) return std::nullopt;
    const double res = (h * v + g).norm() / gnorm;
    if (!(res <= opts.solve_residual_tol)) return std::nullopt;
    diag.solve_residual = res;
    return v;
  };

  std::optional<Vector> coeffs = try_solve(fh.h);
  if (!coeffs) {
    double mu = opts.regularization_start * std::max(fh.h.norm(), 1.0);
    for (int attempt = 1; attempt <= opts.max_regularization_attempts && !coeffs; ++attempt) {
      coeffs = try_solve(fh.h + mu * fh.gram);
      diag.regularization_attempts = attempt;
      if (coeffs) diag.regularization = mu;
      mu *= 2.0;
    }
    if (!coeffs) {
      throw SolveFailure("Newton system could not be solved after " +
                         std::to_string(opts.max_regularization_attempts) + " regularization attempts");
    }
  }
  TangentVector v = make_tangent_vector(point, frame.combine(*coeffs));
  diag.directional_derivative = coeffs->dot(g);
  return {std::move(v), diag};
}

enum class StepType { Newton, ModifiedNewton, FallbackGradient, None };

inline const char* to_string(StepType s) {
  switch (s) {
    case StepType::Newton: return "newton";
    case StepType::ModifiedNewton: return "modified-newton";
    case StepType::FallbackGradient: return "fallback-gradient";
    case StepType::None: return "none";
  }
  return "?";
}

/// Direction -|H|^{-1} g when the frame Hessian at `point` has an eigenvalue
/// below -tol_eig * max(1, |H|_F); nullopt when it does not. Eigenvalues are
/// those of the pencil (H, gram) and are floored at the same threshold.
inline std::optional<TangentVector> modified_newton_direction(const CostModel& model, const StiefelPoint& point,
                                                              const NewtonOptions& opts = {}) {
  const LocalFrame frame = build_frame(point);
  const FrameHessian fh = assemble_frame_hessian(model, point, frame);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(fh.h, fh.gram);
  if (es.info() != Eigen::Success) return std::nullopt;
  const double floor = opts.tol_eig * std::max(1.0, fh.h.norm());
  const Vector& lambda = es.eigenvalues();
  if (!(lambda(0) < -floor)) return std::nullopt;
  const Matrix& q = es.eigenvectors();  // q^T gram q = I
  Vector c = q.transpose() * frame_gradient_coords(model, point, frame);
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) /= -std::max(std::abs(lambda(i)), floor);
  return project_tangent(point, frame.combine(q * c));
}

/// State at iterate k and the step taken from it (None for the last record).
struct IterationRecord {
  int k = 0;
  double cost = 0.0;
  double grad_norm = 0.0;
  StepType step = StepType::None;
  double solve_residual = 0.0;
  int backtracks = 0;
};

enum class SolveStatus { Converged, MaxIters, SolveFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIters: return "MaxIters";
    case SolveStatus::SolveFailure: return "SolveFailure";
  }
  return "?";
}

struct OptimizationResult {
  StiefelPoint point;
  double value = 0.0;
  std::vector<IterationRecord> trace;
  SolveStatus status = SolveStatus::MaxIters;
  CriticalityReport criticality;
  std::optional<Classification> classification;

  int iterations() const { return trace.empty() ? 0 : static_cast<int>(trace.size()) - 1; }
};

namespace detail {

struct LineSearchResult {
  StiefelPoint point;
  int backtracks = 0;
};

// Armijo backtracking on t -> G(qf(U + t d)) with slope <dG, d> < 0.
inline std::optional<LineSearchResult> armijo_search(const CostModel& model, const StiefelPoint& u,
                                                     const Matrix& d, double cost, double slope,
                                                     const NewtonOptions& opts) {
  double t = 1.0;
  for (int b = 0; b <= opts.max_backtracks; ++b) {
    StiefelPoint trial = retract_qf(u, project_tangent(u, t * d));
    if (model.value(trial) <= cost + opts.armijo_c * t * slope) return LineSearchResult{std::move(trial), b};
    t *= opts.armijo_shrink;
  }
  return std::nullopt;
}

}  // namespace detail

inline OptimizationResult newton_solve(const CostModel& model, const StiefelPoint& start,
                                       const NewtonOptions& opts = {}) {
  opts.validate();
  StiefelPoint u = start;
  std::vector<IterationRecord> trace;
  SolveStatus status = SolveStatus::MaxIters;

  for (int k = 0;; ++k) {
    const TangentVector egrad = embedded_gradient(model, u);
    IterationRecord rec;
    rec.k = k;
    rec.cost = model.value(u);
    rec.grad_norm = egrad.matrix().norm();
    if (rec.grad_norm <= opts.grad_tol) {
      status = SolveStatus::Converged;
      trace.push_back(rec);
      break;
    }
    if (k >= opts.max_iters) {
      status = SolveStatus::MaxIters;
      trace.push_back(rec);
      break;
    }

    if (opts.fallback && opts.modify_indefinite) {
      if (const auto d = modified_newton_direction(model, u, opts)) {
        const double slope = frobenius_inner(egrad.matrix(), d->matrix());
        if (slope < 0) {
          if (auto ls = detail::armijo_search(model, u, d->matrix(), rec.cost, slope, opts)) {
            rec.step = StepType::ModifiedNewton;
            rec.backtracks = ls->backtracks;
            u = std::move(ls->point);
            trace.push_back(rec);
            continue;
          }
        }
      }
    }

    std::optional<NewtonStep> step;
    try {
      step = newton_step(model, u, opts);
    } catch (const SolveFailure&) {
      if (!opts.fallback) {
        status = SolveStatus::SolveFailure;
        trace.push_back(rec);
        break;
      }
    }

    bool take_newton = step.has_value();
    if (take_newton && opts.fallback) {
      const double slope = frobenius_inner(egrad.matrix(), step->direction.matrix());
      const double vnorm = step->direction.matrix().norm();
      take_newton = slope < -opts.descent_tol * rec.grad_norm * vnorm;
    }
    if (take_newton) {
      rec.step = StepType::Newton;
      rec.solve_residual = step->diagnostics.solve_residual;
      u = retract_qf(u, step->direction);
      trace.push_back(rec);
      continue;
    }

    // Gradient step along -dG.
    auto ls = detail::armijo_search(model, u, -egrad.matrix(), rec.cost, -rec.grad_norm * rec.grad_norm, opts);
    if (!ls) {
      // The point did not move; the record stays the final one.
      rec.backtracks = opts.max_backtracks + 1;
      status = SolveStatus::SolveFailure;
      trace.push_back(rec);
      break;
    }
    rec.step = StepType::FallbackGradient;
    rec.backtracks = ls->backtracks;
    u = std::move(ls->point);
    trace.push_back(rec);
  }

  OptimizationResult out{u, model.value(u), std::move(trace), status, is_critical(model, u, opts.tol_crit),
                         std::nullopt};
  if (opts.classify_final && out.criticality.is_critical) {
    out.classification = classify_critical_point(model, u, opts.tol_crit, opts.tol_eig);
  }
  return out;
}

}  // namespace stiefel
