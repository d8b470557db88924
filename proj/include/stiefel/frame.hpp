#pragma once

// Explicit local frame of T_U St(n,p). The frame is split into
//   prime:  Delta'_ab  = U A_ab,            A_ab = (-1)^(a+b) (f_a f_b^T - f_b f_a^T), a < b
//   second: Delta''_ic = (I - U U^T) e_i f_c^T,  i outside the pivot rows, c = 1..p
// The second family depends on a choice of p rows of U forming an invertible
// p x p submatrix (the pivot set). Indices are 0-based throughout.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stiefel/errors.hpp"
#include "stiefel/manifold.hpp"

namespace stiefel {

inline constexpr double kPivotTolerance = 1e-10;
inline constexpr double kGramSchmidtTolerance = 1e-12;

/// Sorted row indices of an invertible p x p submatrix of U.
struct PivotSet {
  std::vector<Eigen::Index> indices;

  bool contains(Eigen::Index i) const {
    return std::binary_search(indices.begin(), indices.end(), i);
  }

  /// Rows not in the set, ascending.
  std::vector<Eigen::Index> complement(Eigen::Index n) const {
    std::vector<Eigen::Index> out;
    out.reserve(static_cast<std::size_t>(n) - indices.size());
    for (Eigen::Index i = 0; i < n; ++i)
      if (!contains(i)) out.push_back(i);
    return out;
  }
};

enum class FrameBlock { Prime, Second };

/// (a,b) for a prime vector, (i,c) for a second vector.
struct FrameLabel {
  FrameBlock block;
  Eigen::Index first;
  Eigen::Index second;

  bool operator==(const FrameLabel&) const = default;
};

/// sign (-1)^(a+b); 0- and 1-based indices give the same parity.
inline double alternating_sign(Eigen::Index a, Eigen::Index b) {
  return ((a + b) % 2 == 0) ? 1.0 : -1.0;
}

/// Skew generator A_ab = (-1)^(a+b) (f_a f_b^T - f_b f_a^T).
inline Matrix skew_generator(Eigen::Index p, Eigen::Index a, Eigen::Index b) {
  Matrix out = Matrix::Zero(p, p);
  const double s = alternating_sign(a, b);
  out(a, b) = s;
  out(b, a) = -s;
  return out;
}

struct LocalFrame {
  StiefelPoint base;
  PivotSet pivots;
  std::vector<Matrix> prime;
  std::vector<Matrix> second;
  std::vector<FrameLabel> labels;  // prime labels first, then second labels
  bool orthonormalized = false;

  Eigen::Index size() const { return static_cast<Eigen::Index>(prime.size() + second.size()); }
  Eigen::Index prime_count() const { return static_cast<Eigen::Index>(prime.size()); }

  const Matrix& vector(Eigen::Index k) const {
    return k < prime_count() ? prime[static_cast<std::size_t>(k)]
                             : second[static_cast<std::size_t>(k - prime_count())];
  }

  TangentVector tangent(Eigen::Index k) const { return make_tangent_vector(base, vector(k)); }

  /// Frobenius Gram matrix of the frame.
  Matrix gram() const {
    const Eigen::Index d = size();
    Matrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i; j < d; ++j) g(i, j) = g(j, i) = frobenius_inner(vector(i), vector(j));
    return g;
  }

  /// sum_k coeffs(k) * vector(k).
  Matrix combine(const Vector& coeffs) const {
    Matrix out = Matrix::Zero(base.n(), base.p());
    for (Eigen::Index k = 0; k < size(); ++k) out += coeffs(k) * vector(k);
    return out;
  }
};

inline Eigen::Index frame_dimension(Eigen::Index n, Eigen::Index p) { return stiefel_dimension(n, p); }

/// Row-pivoted elimination on U: at each column take the remaining row with the
/// largest magnitude (smallest index on ties). Returned indices are sorted.
inline PivotSet select_pivot_rows(const StiefelPoint& point) {
  const Eigen::Index n = point.n();
  const Eigen::Index p = point.p();
  Matrix work = point.matrix();
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  PivotSet out;
  for (Eigen::Index k = 0; k < p; ++k) {
    Eigen::Index best = -1;
    double best_val = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const double v = std::abs(work(i, k));
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    if (best < 0 || best_val < kPivotTolerance) {
      throw PivotFailure("no pivot above " + std::to_string(kPivotTolerance) + " in column " +
                         std::to_string(k));
    }
    used[static_cast<std::size_t>(best)] = true;
    out.indices.push_back(best);
    const Eigen::Index rest = p - k - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      const double factor = work(i, k) / work(best, k);
      work(i, k) = 0.0;
      if (rest > 0) work.row(i).tail(rest) -= factor * work.row(best).tail(rest);
    }
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

/// The p x p submatrix of U on the pivot rows.
inline Matrix pivot_submatrix(const StiefelPoint& point, const PivotSet& pivots) {
  Matrix up(point.p(), point.p());
  for (std::size_t r = 0; r < pivots.indices.size(); ++r)
    up.row(static_cast<Eigen::Index>(r)) = point.matrix().row(pivots.indices[r]);
  return up;
}

inline void validate_pivots(const StiefelPoint& point, const PivotSet& pivots) {
  const auto& idx = pivots.indices;
  if (static_cast<Eigen::Index>(idx.size()) != point.p()) {
    throw PivotFailure("pivot set must contain exactly p indices");
  }
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= point.n()) throw PivotFailure("pivot index out of range");
    if (k > 0 && idx[k] <= idx[k - 1]) throw PivotFailure("pivot indices must be strictly increasing");
  }
  const double det = pivot_submatrix(point, pivots).fullPivLu().determinant();
  if (!(std::abs(det) > 1e-12)) {
    throw PivotFailure("pivot submatrix is singular (|det| = " + std::to_string(std::abs(det)) + ")");
  }
}

inline LocalFrame build_frame(const StiefelPoint& point, const PivotSet& pivots) {
  validate_pivots(point, pivots);
  const Eigen::Index n = point.n();
  const Eigen::Index p = point.p();
  const Matrix& u = point.matrix();
  LocalFrame frame{point, pivots, {}, {}, {}, false};

  // U A_ab has column b equal to s u_a and column a equal to -s u_b.
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = a + 1; b < p; ++b) {
      const double s = alternating_sign(a, b);
      Matrix v = Matrix::Zero(n, p);
      v.col(b) = s * u.col(a);
      v.col(a) = -s * u.col(b);
      frame.prime.push_back(std::move(v));
      frame.labels.push_back({FrameBlock::Prime, a, b});
    }
  }

  // (I - U U^T) e_i f_c^T has z_i = e_i - U U^T e_i in column c.
  const auto free_rows = pivots.complement(n);
  std::vector<Vector> z_cols;
  z_cols.reserve(free_rows.size());
  for (Eigen::Index i : free_rows) {
    Vector z = -(u * u.row(i).transpose());
    z(i) += 1.0;
    z_cols.push_back(std::move(z));
  }
  for (Eigen::Index c = 0; c < p; ++c) {
    for (std::size_t r = 0; r < free_rows.size(); ++r) {
      Matrix v = Matrix::Zero(n, p);
      v.col(c) = z_cols[r];
      frame.second.push_back(std::move(v));
      frame.labels.push_back({FrameBlock::Second, free_rows[r], c});
    }
  }
  return frame;
}

inline LocalFrame build_frame(const StiefelPoint& point) {
  return build_frame(point, select_pivot_rows(point));
}

/// Unit-normalizes the prime vectors and runs modified Gram-Schmidt inside each
/// column group of the second family. Groups stay mutually orthogonal, so the
/// result is an orthonormal basis spanning the same space.
inline LocalFrame orthonormalize_frame(const LocalFrame& frame) {
  LocalFrame out = frame;
  for (auto& v : out.prime) {
    const double nrm = v.norm();
    if (nrm < kGramSchmidtTolerance) throw DegenerateFrame("zero prime vector");
    v /= nrm;
  }
  const Eigen::Index p = frame.base.p();
  const std::size_t per_group = frame.second.size() / static_cast<std::size_t>(p);
  for (Eigen::Index c = 0; c < p; ++c) {
    const std::size_t start = static_cast<std::size_t>(c) * per_group;
    for (std::size_t k = start; k < start + per_group; ++k) {
      Matrix& v = out.second[k];
      for (std::size_t j = start; j < k; ++j) v -= frobenius_inner(out.second[j], v) * out.second[j];
      const double nrm = v.norm();
      if (nrm < kGramSchmidtTolerance) {
        throw DegenerateFrame("Gram-Schmidt pivot norm " + std::to_string(nrm) + " in group c=" +
                              std::to_string(c));
      }
      v /= nrm;
    }
  }
  out.orthonormalized = true;
  return out;
}

}  // namespace stiefel
