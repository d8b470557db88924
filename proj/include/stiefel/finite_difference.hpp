#pragma once

// Central finite-difference primitives shared by cost-model self validation
// and the oracle module. They only ever evaluate the callables handed to them.

#include <functional>

#include "stiefel/manifold.hpp"

namespace stiefel::fd {

using ValueFn = std::function<double(const Matrix&)>;
using GradientFn = std::function<Matrix(const Matrix&)>;

/// Entrywise (f(U + h E_ij) - f(U - h E_ij)) / 2h.
inline Matrix central_gradient(const ValueFn& f, const Matrix& u, double h) {
  Matrix out(u.rows(), u.cols());
  Matrix probe = u;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double fp = f(probe);
      probe(i, j) = orig - h;
      const double fm = f(probe);
      probe(i, j) = orig;
      out(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return out;
}

/// (grad(U + h V) - grad(U - h V)) / 2h, the directional derivative of the gradient.
inline Matrix gradient_derivative(const GradientFn& grad, const Matrix& u, const Matrix& v, double h) {
  return (grad(u + h * v) - grad(u - h * v)) / (2.0 * h);
}

/// (f(U + h V) - 2 f(U) + f(U - h V)) / h^2.
inline double second_difference(const ValueFn& f, const Matrix& u, const Matrix& v, double h) {
  return (f(u + h * v) - 2.0 * f(u) + f(u - h * v)) / (h * h);
}

/// |a - b|_max / max(1, |b|_max).
inline double relative_error(const Matrix& a, const Matrix& b) {
  return max_abs(a - b) / std::max(1.0, max_abs(b));
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

}  // namespace stiefel::fd
