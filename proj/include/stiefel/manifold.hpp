#pragma once

// Points and tangent vectors of the orthogonal Stiefel manifold
// St(n,p) = { U in R^{n x p} : U^T U = I_p }, viewed as a constraint set in
// the Euclidean space of n x p matrices with the Frobenius inner product.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "stiefel/errors.hpp"

namespace stiefel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kDefaultPointTolerance = 1e-10;
inline constexpr double kDefaultTangentTolerance = 1e-10;
inline constexpr double kRetractionRankTolerance = 1e-14;

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Matrix sym_part(const Matrix& m) { return 0.5 * (m + m.transpose()); }
inline Matrix skew_part(const Matrix& m) { return 0.5 * (m - m.transpose()); }

/// Frobenius inner product tr(X^T Y).
inline double frobenius_inner(const Matrix& x, const Matrix& y) {
  return (x.array() * y.array()).sum();
}

/// A validated point of St(n,p). Immutable; copies share the underlying
/// storage, so passing points by value is cheap.
class StiefelPoint {
 public:
  const Matrix& matrix() const { return *u_; }
  Eigen::Index n() const { return u_->rows(); }
  Eigen::Index p() const { return u_->cols(); }
  auto column(Eigen::Index a) const { return u_->col(a); }

  /// True when both points refer to the same n x p matrix (entrywise equal).
  bool same_point(const StiefelPoint& other) const {
    return u_ == other.u_ || (n() == other.n() && p() == other.p() && *u_ == *other.u_);
  }

  /// Z = I_n - U U^T, the orthogonal projector onto the complement of span(U).
  Matrix complement_projector() const {
    return Matrix::Identity(n(), n()) - (*u_) * u_->transpose();
  }

 private:
  explicit StiefelPoint(Matrix u) : u_(std::make_shared<const Matrix>(std::move(u))) {}
  friend StiefelPoint make_stiefel_point(const Matrix& m, double tol);

  std::shared_ptr<const Matrix> u_;
};

/// Largest entry of |M^T M - I_p|.
inline double orthonormality_deviation(const Matrix& m) {
  return max_abs(m.transpose() * m - Matrix::Identity(m.cols(), m.cols()));
}

/// Validates `m` and wraps it as a point. The entries are copied as given;
/// nothing is re-orthonormalized.
inline StiefelPoint make_stiefel_point(const Matrix& m, double tol = kDefaultPointTolerance) {
  if (m.cols() < 1 || m.rows() < 1) {
    throw DimensionError("Stiefel point needs n >= p >= 1, got " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()));
  }
  if (m.cols() > m.rows()) {
    throw DimensionError("Stiefel point needs p <= n, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  const double dev = orthonormality_deviation(m);
  if (!(dev <= tol)) {
    std::ostringstream os;
    os << "max |U^T U - I| = " << dev << " exceeds tolerance " << tol;
    throw ConstraintViolation(dev, os.str());
  }
  return StiefelPoint(m);
}

/// Thin QR factors with the sign convention diag(R) > 0.
struct QrFactors {
  Matrix q;  // n x p, orthonormal columns
  Matrix r;  // p x p, upper triangular
};

/// Thin Householder QR of an n x p matrix, normalized so that R has a positive
/// diagonal. Throws RankDeficient when some |R_ii| falls below `rank_tol`.
inline QrFactors qr_positive(const Matrix& m, double rank_tol = kRetractionRankTolerance) {
  const Eigen::Index n = m.rows();
  const Eigen::Index p = m.cols();
  if (p > n) throw DimensionError("thin QR needs rows >= cols");
  Eigen::HouseholderQR<Matrix> qr(m);
  QrFactors out;
  out.q = qr.householderQ() * Matrix::Identity(n, p);
  out.r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < p; ++k) {
    const double d = out.r(k, k);
    if (!(std::abs(d) >= rank_tol)) {
      std::ostringstream os;
      os << "R(" << k << "," << k << ") = " << d << " below " << rank_tol;
      throw RankDeficient(os.str());
    }
    if (d < 0) {
      out.q.col(k) *= -1.0;
      out.r.row(k) *= -1.0;
    }
  }
  return out;
}

/// Orthonormal factor of a seeded Gaussian n x p matrix.
inline StiefelPoint random_stiefel(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  if (p < 1 || n < p) {
    throw DimensionError("random_stiefel needs n >= p >= 1, got n=" + std::to_string(n) +
                         " p=" + std::to_string(p));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = gauss(rng);
  // A Gaussian matrix is full rank with probability one; retry on the
  // measure-zero failure so the function stays total.
  for (int attempt = 0;; ++attempt) {
    try {
      return make_stiefel_point(qr_positive(g, 1e-12).q);
    } catch (const RankDeficient&) {
      if (attempt > 8) throw;
      for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) g(i, j) += gauss(rng);
    }
  }
}

/// Values of the constraint functions F_aa = |u_a|^2 / 2 and F_bc = <u_b, u_c>.
struct ConstraintVector {
  Vector diag;     // p entries
  Vector offdiag;  // p(p-1)/2 entries, (b,c) with b < c in lexicographic order
};

inline ConstraintVector constraint_values(const Matrix& m) {
  const Eigen::Index p = m.cols();
  ConstraintVector out;
  out.diag.resize(p);
  out.offdiag.resize(p * (p - 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index a = 0; a < p; ++a) out.diag(a) = 0.5 * m.col(a).squaredNorm();
  for (Eigen::Index b = 0; b < p; ++b)
    for (Eigen::Index c = b + 1; c < p; ++c) out.offdiag(k++) = m.col(b).dot(m.col(c));
  return out;
}

inline ConstraintVector constraint_values(const StiefelPoint& point) {
  return constraint_values(point.matrix());
}

/// An n x p matrix Delta attached to a base point U with U^T Delta skew.
class TangentVector {
 public:
  const StiefelPoint& base() const { return base_; }
  const Matrix& matrix() const { return delta_; }

 private:
  TangentVector(StiefelPoint base, Matrix delta) : base_(std::move(base)), delta_(std::move(delta)) {}
  friend TangentVector make_tangent_vector(const StiefelPoint&, const Matrix&, double);

  StiefelPoint base_;
  Matrix delta_;
};

/// max |U^T Delta + Delta^T U|.
inline double tangency_residual(const Matrix& u, const Matrix& delta) {
  const Matrix s = u.transpose() * delta;
  return max_abs(s + s.transpose());
}

/// The tolerance is applied relative to max(1, |Delta|_max) so that long
/// steps assembled from many frame vectors are not rejected for roundoff.
inline TangentVector make_tangent_vector(const StiefelPoint& base, const Matrix& delta,
                                         double tol = kDefaultTangentTolerance) {
  if (delta.rows() != base.n() || delta.cols() != base.p()) {
    throw DimensionError("tangent vector shape mismatch with base point");
  }
  const double res = tangency_residual(base.matrix(), delta);
  if (!(res <= tol * std::max(1.0, max_abs(delta)))) {
    std::ostringstream os;
    os << "max |U^T D + D^T U| = " << res << " exceeds " << tol;
    throw TangencyViolation(os.str());
  }
  return TangentVector(base, delta);
}

inline TangentVector zero_tangent(const StiefelPoint& base) {
  return make_tangent_vector(base, Matrix::Zero(base.n(), base.p()));
}

/// Split of a tangent vector as Delta = U A + C_perp.
struct TangentComponents {
  Matrix a;       // p x p skew, A = U^T Delta
  Matrix c_perp;  // n x p, (I - U U^T) Delta
};

inline TangentComponents tangent_components(const TangentVector& v,
                                            double tol = kDefaultTangentTolerance) {
  const Matrix& u = v.base().matrix();
  const Matrix& delta = v.matrix();
  const double res = tangency_residual(u, delta);
  if (!(res <= tol * std::max(1.0, max_abs(delta)))) {
    throw TangencyViolation("tangent_components: input is not tangent");
  }
  TangentComponents out;
  out.a = u.transpose() * delta;
  out.c_perp = delta - u * out.a;
  return out;
}

/// Orthogonal projection of an arbitrary n x p matrix onto T_U St(n,p):
/// U skew(U^T W) + (I - U U^T) W.
inline TangentVector project_tangent(const StiefelPoint& point, const Matrix& w) {
  if (w.rows() != point.n() || w.cols() != point.p()) {
    throw DimensionError("project_tangent: shape mismatch");
  }
  const Matrix& u = point.matrix();
  const Matrix utw = u.transpose() * w;
  Matrix out = w - u * utw + u * skew_part(utw);
  // Remove the O(eps) symmetric part left by roundoff.
  const Matrix s = u.transpose() * out;
  out -= u * sym_part(s);
  return make_tangent_vector(point, out);
}

/// qf retraction: Q factor of U + Delta with positive-diagonal R.
inline StiefelPoint retract_qf(const StiefelPoint& point, const TangentVector& v) {
  if (!v.base().same_point(point)) {
    throw BaseMismatch("retract_qf: tangent vector is attached to a different point");
  }
  if (v.matrix().isZero(0.0)) return point;
  return make_stiefel_point(qr_positive(point.matrix() + v.matrix()).q);
}

/// Dimension of St(n,p): np - p(p+1)/2.
inline Eigen::Index stiefel_dimension(Eigen::Index n, Eigen::Index p) {
  if (p < 1 || n < p) {
    throw DimensionError("dimension needs n >= p >= 1, got n=" + std::to_string(n) +
                         " p=" + std::to_string(p));
  }
  return n * p - p * (p + 1) / 2;
}

}  // namespace stiefel
