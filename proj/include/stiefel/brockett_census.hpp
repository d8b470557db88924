#pragma once

// Enumeration of the critical set of a Brockett cost tr(U^T A U N) when A has a
// simple spectrum: U is critical iff every column is an eigenvector of A, so
// the critical points are the ordered selections of p distinct unit
// eigenvectors with all 2^p sign patterns.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "stiefel/costs.hpp"
#include "stiefel/errors.hpp"
#include "stiefel/manifold.hpp"
#include "stiefel/optimality.hpp"

namespace stiefel {

inline constexpr double kMaxCensusSize = 1e6;

struct CensusPoint {
  StiefelPoint point;
  std::vector<Eigen::Index> eigen_indices;  // column a is sign[a] * v_{eigen_indices[a]}
  std::vector<int> signs;                   // +1 / -1
  double value = 0.0;
  CriticalityReport criticality;
  Classification classification;

  /// e.g. "[-v2,+v1]" with 1-based eigenvector numbers (ascending eigenvalues).
  std::string generator() const {
    std::string s = "[";
    for (std::size_t a = 0; a < eigen_indices.size(); ++a) {
      if (a) s += ",";
      s += signs[a] > 0 ? "+v" : "-v";
      s += std::to_string(eigen_indices[a] + 1);
    }
    return s + "]";
  }
};

/// Unit eigenvectors of symmetric A in ascending eigenvalue order, each with
/// its largest-magnitude entry (first on ties) made positive.
inline Matrix canonical_eigenvectors(const Matrix& a, Vector* eigenvalues = nullptr) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  Matrix v = es.eigenvectors();
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      if (std::abs(v(i, j)) > best + 1e-12) {
        best = std::abs(v(i, j));
        imax = i;
      }
    }
    if (v(imax, j) < 0) v.col(j) *= -1.0;
  }
  if (eigenvalues) *eigenvalues = es.eigenvalues();
  return v;
}

/// Every critical point of the Brockett cost, with value and classification.
/// Sorted by value (values within 1e-9 relative are treated as equal), then by
/// eigenvector indices, then by signs with '+' first.
inline std::vector<CensusPoint> enumerate_brockett_critical_points(const BrockettData& data,
                                                                   double tol = 1e-10,
                                                                   const BrockettOptions& opts = {}) {
  const CostModel model = brockett_model(data, opts);
  const Eigen::Index n = data.a.rows();
  const Eigen::Index p = data.n.rows();

  double count = std::pow(2.0, static_cast<double>(p));
  for (Eigen::Index k = 0; k < p; ++k) count *= static_cast<double>(n - k);
  if (count > kMaxCensusSize) {
    throw DimensionError("census would contain " + std::to_string(count) + " points (limit 1e6)");
  }

  Vector lambda;
  const Matrix vecs = canonical_eigenvectors(data.a, &lambda);
  for (Eigen::Index k = 1; k < n; ++k) {
    if (!(lambda(k) - lambda(k - 1) > tol)) {
      throw DegenerateSpectrum("eigenvalues " + std::to_string(lambda(k - 1)) + " and " +
                               std::to_string(lambda(k)) +
                               " are not separated; the critical set is not a finite census");
    }
  }

  std::vector<CensusPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<Eigen::Index> chosen;
  std::vector<bool> used(static_cast<std::size_t>(n), false);

  auto emit = [&]() {
    for (unsigned mask = 0; mask < (1u << p); ++mask) {
      Matrix u(n, p);
      std::vector<int> signs(static_cast<std::size_t>(p));
      for (Eigen::Index a = 0; a < p; ++a) {
        signs[static_cast<std::size_t>(a)] = (mask >> (p - 1 - a)) & 1u ? -1 : 1;
        u.col(a) = signs[static_cast<std::size_t>(a)] * vecs.col(chosen[static_cast<std::size_t>(a)]);
      }
      const StiefelPoint pt = make_stiefel_point(u);
      CriticalityReport crit = is_critical(model, pt, tol * std::max(1.0, max_abs(data.a)));
      if (!crit.is_critical) {
        throw ValidationFailure("eigenvector selection " + std::to_string(out.size()) +
                                " failed the criticality check");
      }
      Classification cls = classify_critical_point(model, pt, crit.tolerance);
      out.push_back({pt, chosen, std::move(signs), model.value(pt), crit, std::move(cls)});
    }
  };

  // Ordered selections of p distinct eigenvectors, lexicographic.
  auto recurse = [&](auto&& self, Eigen::Index depth) -> void {
    if (depth == p) {
      emit();
      return;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      used[static_cast<std::size_t>(i)] = true;
      chosen.push_back(i);
      self(self, depth + 1);
      chosen.pop_back();
      used[static_cast<std::size_t>(i)] = false;
    }
  };
  recurse(recurse, 0);

  // Bucket values so that roundoff-level differences do not reorder ties.
  std::vector<double> distinct;
  for (const auto& c : out) distinct.push_back(c.value);
  std::sort(distinct.begin(), distinct.end());
  std::vector<double> reps;
  for (double v : distinct) {
    if (reps.empty() || v - reps.back() > 1e-9 * std::max(1.0, std::abs(v))) reps.push_back(v);
  }
  std::vector<std::size_t> bucket(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto it = std::upper_bound(reps.begin(), reps.end(), out[k].value);
    std::size_t b = it == reps.begin() ? 0 : static_cast<std::size_t>(it - reps.begin()) - 1;
    if (b + 1 < reps.size() && std::abs(reps[b + 1] - out[k].value) < std::abs(reps[b] - out[k].value)) ++b;
    bucket[k] = b;
  }
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const CensusPoint& x = out[i];
    const CensusPoint& y = out[j];
    if (bucket[i] != bucket[j]) return bucket[i] < bucket[j];
    if (x.eigen_indices != y.eigen_indices) return x.eigen_indices < y.eigen_indices;
    // '+' before '-'
    return std::lexicographical_compare(x.signs.begin(), x.signs.end(), y.signs.begin(), y.signs.end(),
                                        [](int s, int t) { return s > t; });
  });
  std::vector<CensusPoint> sorted;
  sorted.reserve(out.size());
  for (std::size_t k : order) sorted.push_back(std::move(out[k]));
  return sorted;
}

}  // namespace stiefel
