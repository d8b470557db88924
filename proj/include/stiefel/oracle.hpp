#pragma once

// Independent checks of the formula paths. The finite-difference oracles only
// call CostModel::value (and CostModel::gradient for the gradient-difference
// Hessian variant); audit_frame uses raw matrix arithmetic on the frame vectors.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "stiefel/costs.hpp"
#include "stiefel/errors.hpp"
#include "stiefel/finite_difference.hpp"
#include "stiefel/frame.hpp"
#include "stiefel/manifold.hpp"
#include "stiefel/optimality.hpp"

namespace stiefel::oracle {

inline constexpr double kFirstDifferenceStep = 1e-5;
inline constexpr double kSecondDifferenceStep = 1e-4;

// Default tolerances for the reports (match the acceptance thresholds).
inline constexpr double kGradientTolerance = 1e-6;
inline constexpr double kAmbientHessianTolerance = 1e-7;
inline constexpr double kRiemannianHessianTolerance = 1e-4;
inline constexpr double kFrameTolerance = 1e-12;
inline constexpr double kGramEigenvalueFloor = 1e-8;

struct OracleReport {
  std::string quantity;
  double formula_value = 0.0;
  double oracle_value = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;  // |a - b| / max(1, |b|)
  double tolerance = 0.0;
  bool pass = false;
};

/// Builds a report comparing `formula` against `oracle`; passes on rel_error <= tol.
inline OracleReport compare(std::string quantity, double formula, double oracle, double tol) {
  OracleReport r;
  r.quantity = std::move(quantity);
  r.formula_value = formula;
  r.oracle_value = oracle;
  r.abs_error = std::abs(formula - oracle);
  r.rel_error = r.abs_error / std::max(1.0, std::abs(oracle));
  r.tolerance = tol;
  r.pass = r.rel_error <= tol;
  return r;
}

/// Report on a quantity that must not exceed `bound` (oracle_value holds the bound).
inline OracleReport bounded(std::string quantity, double value, double bound) {
  OracleReport r;
  r.quantity = std::move(quantity);
  r.formula_value = value;
  r.oracle_value = 0.0;
  r.abs_error = std::abs(value);
  r.rel_error = std::abs(value);
  r.tolerance = bound;
  r.pass = std::abs(value) <= bound;
  return r;
}

inline Matrix fd_gradient(const CostModel& model, const Matrix& u, double h = kFirstDifferenceStep) {
  if (!(h > 0)) throw DimensionError("fd step must be positive");
  return fd::central_gradient([&model](const Matrix& x) { return model.value(x); }, u, h);
}

inline double fd_hessian_quadform(const CostModel& model, const Matrix& u, const Matrix& v,
                                  double h = kSecondDifferenceStep) {
  if (!(h > 0)) throw DimensionError("fd step must be positive");
  return fd::second_difference([&model](const Matrix& x) { return model.value(x); }, u, v, h);
}

/// <V1, (grad(U + h V2) - grad(U - h V2)) / 2h>.
inline double fd_hessian_bilinear_from_gradient(const CostModel& model, const Matrix& u, const Matrix& v1,
                                                const Matrix& v2, double h = kFirstDifferenceStep) {
  return frobenius_inner(
      v1, fd::gradient_derivative([&model](const Matrix& x) { return model.gradient(x); }, u, v2, h));
}

/// Second difference of G along the retraction curve t -> qf(U + tV). Equals
/// Hess G~(V, V) only where dG~ = 0, hence the criticality precondition.
inline double fd_riemannian_quadform(const CostModel& model, const StiefelPoint& point,
                                     const TangentVector& v, double h = kSecondDifferenceStep,
                                     double crit_tol = kDefaultCriticalTolerance) {
  if (!(h > 0)) throw DimensionError("fd step must be positive");
  const CriticalityReport crit = is_critical(model, point, crit_tol);
  if (!crit.is_critical) {
    throw NotCritical("fd_riemannian_quadform requires a critical point (residuals " +
                      std::to_string(crit.sym_residual) + ", " + std::to_string(crit.range_residual) + ")");
  }
  const StiefelPoint plus = retract_qf(point, make_tangent_vector(point, h * v.matrix()));
  const StiefelPoint minus = retract_qf(point, make_tangent_vector(point, -h * v.matrix()));
  return (model.value(plus) - 2.0 * model.value(point) + model.value(minus)) / (h * h);
}

/// Checks the structural properties of a local frame:
/// vector count, tangency, the three orthogonality families, Gram
/// nonsingularity and (for raw frames) <Delta''_k1c, Delta''_k2c> = z_k1k2.
inline std::vector<OracleReport> audit_frame(const LocalFrame& frame, double tol = kFrameTolerance) {
  std::vector<OracleReport> out;
  const Matrix& u = frame.base.matrix();
  const Eigen::Index n = u.rows();
  const Eigen::Index p = u.cols();
  const Eigen::Index d = static_cast<Eigen::Index>(frame.prime.size() + frame.second.size());

  out.push_back(compare("vector count = np - p(p+1)/2", static_cast<double>(d),
                        static_cast<double>(n * p - p * (p + 1) / 2), 0.0));
  out.push_back(compare("prime count = p(p-1)/2", static_cast<double>(frame.prime.size()),
                        static_cast<double>(p * (p - 1) / 2), 0.0));

  const auto vec_at = [&](Eigen::Index k) -> const Matrix& {
    const auto np = static_cast<Eigen::Index>(frame.prime.size());
    return k < np ? frame.prime[static_cast<std::size_t>(k)] : frame.second[static_cast<std::size_t>(k - np)];
  };

  double tangency = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const Matrix s = u.transpose() * vec_at(k);
    tangency = std::max(tangency, (s + s.transpose()).cwiseAbs().maxCoeff());
  }
  out.push_back(bounded("tangency max |U^T D + D^T U|", tangency, tol));

  Matrix gram(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) gram(i, j) = (vec_at(i).array() * vec_at(j).array()).sum();

  const auto np = static_cast<Eigen::Index>(frame.prime.size());
  double prime_prime = 0.0, prime_second = 0.0, cross_group = 0.0, z_identity = 0.0;
  const Matrix z = Matrix::Identity(n, n) - u * u.transpose();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i == j) continue;
      const bool pi = i < np, pj = j < np;
      if (pi && pj) {
        prime_prime = std::max(prime_prime, std::abs(gram(i, j)));
      } else if (pi != pj) {
        prime_second = std::max(prime_second, std::abs(gram(i, j)));
      } else {
        const FrameLabel& li = frame.labels[static_cast<std::size_t>(i)];
        const FrameLabel& lj = frame.labels[static_cast<std::size_t>(j)];
        if (li.second != lj.second) cross_group = std::max(cross_group, std::abs(gram(i, j)));
      }
    }
  }
  if (!frame.orthonormalized) {
    for (Eigen::Index i = np; i < d; ++i) {
      for (Eigen::Index j = np; j < d; ++j) {
        const FrameLabel& li = frame.labels[static_cast<std::size_t>(i)];
        const FrameLabel& lj = frame.labels[static_cast<std::size_t>(j)];
        if (li.second == lj.second) {
          z_identity = std::max(z_identity, std::abs(gram(i, j) - z(li.first, lj.first)));
        }
      }
    }
  }
  out.push_back(bounded("prime vectors pairwise orthogonal", prime_prime, tol));
  out.push_back(bounded("prime orthogonal to second", prime_second, tol));
  out.push_back(bounded("second groups c1 != c2 orthogonal", cross_group, tol));
  if (!frame.orthonormalized) out.push_back(bounded("second Gram entries equal z_k1k2", z_identity, tol));

  double min_eig = 0.0;
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    min_eig = es.eigenvalues().minCoeff();
  }
  OracleReport g;
  g.quantity = "Gram matrix min eigenvalue";
  g.formula_value = min_eig;
  g.oracle_value = kGramEigenvalueFloor;
  g.abs_error = 0.0;
  g.rel_error = 0.0;
  g.tolerance = kGramEigenvalueFloor;
  g.pass = d == 0 || min_eig > kGramEigenvalueFloor;
  out.push_back(g);
  return out;
}

}  // namespace stiefel::oracle
