#pragma once

// Cost models: a smooth extension G of the cost to all n x p matrices, given by
// its value, ambient gradient and ambient Hessian. All built-in models have a
// Kronecker-structured Hessian M (x) S, which is evaluated as
// tr(V1^T S V2 M^T) instead of being stored as an np x np matrix.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "stiefel/errors.hpp"
#include "stiefel/finite_difference.hpp"
#include "stiefel/manifold.hpp"

namespace stiefel {

inline constexpr double kModelFdStep = 1e-5;
inline constexpr double kCustomValidationTolerance = 1e-4;

class CostModel {
 public:
  using ValueFn = std::function<double(const Matrix&)>;
  using GradientFn = std::function<Matrix(const Matrix&)>;
  using HessBilinearFn = std::function<double(const Matrix&, const Matrix&, const Matrix&)>;
  /// Hessian-vector product: returns S with hess_bilinear(U, V1, V) = <V1, S>.
  using HessApplyFn = std::function<Matrix(const Matrix&, const Matrix&)>;

  CostModel(std::string descriptor, Eigen::Index n, Eigen::Index p, ValueFn value,
            GradientFn gradient, HessBilinearFn hess_bilinear, HessApplyFn hess_apply = {})
      : descriptor_(std::move(descriptor)),
        n_(n),
        p_(p),
        value_(std::move(value)),
        gradient_(std::move(gradient)),
        hess_bilinear_(std::move(hess_bilinear)),
        hess_apply_(std::move(hess_apply)) {}

  const std::string& descriptor() const { return descriptor_; }
  Eigen::Index n() const { return n_; }
  Eigen::Index p() const { return p_; }

  double value(const Matrix& u) const {
    check_shape(u);
    return value_(u);
  }

  Matrix gradient(const Matrix& u) const {
    check_shape(u);
    return gradient_(u);
  }

  double hess_bilinear(const Matrix& u, const Matrix& v1, const Matrix& v2) const {
    check_shape(u);
    check_shape(v1);
    check_shape(v2);
    return hess_bilinear_(u, v1, v2);
  }

  bool has_hess_apply() const { return static_cast<bool>(hess_apply_); }

  /// Falls back to np bilinear evaluations when no product was supplied.
  Matrix hess_apply(const Matrix& u, const Matrix& v) const {
    check_shape(u);
    check_shape(v);
    if (hess_apply_) return hess_apply_(u, v);
    Matrix out(n_, p_);
    Matrix e = Matrix::Zero(n_, p_);
    for (Eigen::Index j = 0; j < p_; ++j)
      for (Eigen::Index i = 0; i < n_; ++i) {
        e(i, j) = 1.0;
        out(i, j) = hess_bilinear_(u, e, v);
        e(i, j) = 0.0;
      }
    return out;
  }

  double value(const StiefelPoint& pt) const { return value(pt.matrix()); }
  Matrix gradient(const StiefelPoint& pt) const { return gradient(pt.matrix()); }

 private:
  void check_shape(const Matrix& m) const {
    if (m.rows() != n_ || m.cols() != p_) {
      std::ostringstream os;
      os << descriptor_ << ": expected " << n_ << "x" << p_ << " argument, got " << m.rows() << "x"
         << m.cols();
      throw DimensionError(os.str());
    }
  }

  std::string descriptor_;
  Eigen::Index n_;
  Eigen::Index p_;
  ValueFn value_;
  GradientFn gradient_;
  HessBilinearFn hess_bilinear_;
  HessApplyFn hess_apply_;
};

/// Minimize |A U - B|^2 over St(n,p); A is m x n, B is m x p.
struct ProcrustesData {
  Matrix a;
  Matrix b;
};

/// Minimize |A U C - B|^2 over St(n,p); A is m x n, B is m x q, C is p x q.
struct PenroseData {
  Matrix a;
  Matrix b;
  Matrix c;
};

/// Minimize tr(U^T A U N); A symmetric n x n, N = diag(mu_1..mu_p) with
/// 0 <= mu_1 <= ... <= mu_p.
struct BrockettData {
  Matrix a;
  Matrix n;
};

struct BrockettOptions {
  /// Skip the nondecreasing check on the weights (nonnegativity is still enforced).
  bool allow_unordered_weights = false;
};

namespace detail {

inline std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace detail

/// G(U) = 1/2 |A U - B|^2, grad = A^T A U - A^T B, Hess = I_p (x) A^T A.
inline CostModel procrustes_model(const ProcrustesData& data) {
  if (data.a.rows() != data.b.rows()) {
    throw DimensionError("procrustes: A is " + detail::shape(data.a) + " but B is " +
                         detail::shape(data.b) + " (row counts must agree)");
  }
  if (data.b.cols() < 1 || data.b.cols() > data.a.cols()) {
    throw DimensionError("procrustes: need 1 <= p <= n, got n=" + std::to_string(data.a.cols()) +
                         " p=" + std::to_string(data.b.cols()));
  }
  auto a = std::make_shared<const Matrix>(data.a);
  auto b = std::make_shared<const Matrix>(data.b);
  auto ata = std::make_shared<const Matrix>(data.a.transpose() * data.a);
  auto atb = std::make_shared<const Matrix>(data.a.transpose() * data.b);
  const Eigen::Index n = data.a.cols();
  const Eigen::Index p = data.b.cols();
  std::ostringstream name;
  name << "procrustes(m=" << data.a.rows() << ", n=" << n << ", p=" << p << ")";
  return CostModel(
      name.str(), n, p,
      [a, b](const Matrix& u) { return 0.5 * ((*a) * u - *b).squaredNorm(); },
      [ata, atb](const Matrix& u) -> Matrix { return (*ata) * u - *atb; },
      [ata](const Matrix&, const Matrix& v1, const Matrix& v2) {
        return frobenius_inner(v1, (*ata) * v2);
      },
      [ata](const Matrix&, const Matrix& v) -> Matrix { return (*ata) * v; });
}

/// G(U) = 1/2 |A U C - B|^2, grad = A^T (A U C - B) C^T, Hess = (C C^T) (x) (A^T A).
inline CostModel penrose_model(const PenroseData& data) {
  if (data.a.rows() != data.b.rows()) {
    throw DimensionError("penrose: A is " + detail::shape(data.a) + " but B is " +
                         detail::shape(data.b) + " (row counts must agree)");
  }
  if (data.c.cols() != data.b.cols()) {
    throw DimensionError("penrose: C is " + detail::shape(data.c) + " but B is " +
                         detail::shape(data.b) + " (column counts must agree)");
  }
  if (data.c.rows() < 1 || data.c.rows() > data.a.cols()) {
    throw DimensionError("penrose: need 1 <= p <= n, got n=" + std::to_string(data.a.cols()) +
                         " p=" + std::to_string(data.c.rows()));
  }
  auto a = std::make_shared<const Matrix>(data.a);
  auto b = std::make_shared<const Matrix>(data.b);
  auto c = std::make_shared<const Matrix>(data.c);
  auto ata = std::make_shared<const Matrix>(data.a.transpose() * data.a);
  auto cct = std::make_shared<const Matrix>(data.c * data.c.transpose());
  const Eigen::Index n = data.a.cols();
  const Eigen::Index p = data.c.rows();
  std::ostringstream name;
  name << "penrose(m=" << data.a.rows() << ", n=" << n << ", p=" << p << ", q=" << data.c.cols()
       << ")";
  return CostModel(
      name.str(), n, p,
      [a, b, c](const Matrix& u) { return 0.5 * ((*a) * u * (*c) - *b).squaredNorm(); },
      [a, b, c](const Matrix& u) -> Matrix {
        return a->transpose() * ((*a) * u * (*c) - *b) * c->transpose();
      },
      [ata, cct](const Matrix&, const Matrix& v1, const Matrix& v2) {
        return frobenius_inner(v1, (*ata) * v2 * (*cct));
      },
      [ata, cct](const Matrix&, const Matrix& v) -> Matrix { return (*ata) * v * (*cct); });
}

inline void validate_brockett(const BrockettData& data, const BrockettOptions& opts = {}) {
  const Matrix& a = data.a;
  const Matrix& nw = data.n;
  if (a.rows() != a.cols()) throw DimensionError("brockett: A must be square, got " + detail::shape(a));
  if (nw.rows() != nw.cols()) throw DimensionError("brockett: N must be square, got " + detail::shape(nw));
  if (nw.rows() < 1 || nw.rows() > a.rows()) {
    throw DimensionError("brockett: need 1 <= p <= n, got n=" + std::to_string(a.rows()) +
                         " p=" + std::to_string(nw.rows()));
  }
  const double asym = max_abs(a - a.transpose());
  if (asym > 1e-12) {
    std::ostringstream os;
    os << "brockett: A is not symmetric (max |A - A^T| = " << asym << ")";
    throw NotSymmetric(os.str());
  }
  const Eigen::Index p = nw.rows();
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      if (i != j && nw(i, j) != 0.0) throw BadWeights("brockett: N must be diagonal");
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(nw(i, i) >= 0.0)) throw BadWeights("brockett: weights must satisfy 0 <= mu_1");
    if (!opts.allow_unordered_weights && i > 0 && nw(i, i) < nw(i - 1, i - 1)) {
      std::ostringstream os;
      os << "brockett: weights must satisfy 0 <= mu_1 <= ... <= mu_p, but mu_" << i << " = "
         << nw(i - 1, i - 1) << " > mu_" << i + 1 << " = " << nw(i, i);
      throw BadWeights(os.str());
    }
  }
}

/// G(U) = tr(U^T A U N), grad = 2 A U N, Hess = 2 N (x) A.
inline CostModel brockett_model(const BrockettData& data, const BrockettOptions& opts = {}) {
  validate_brockett(data, opts);
  auto a = std::make_shared<const Matrix>(data.a);
  auto mu = std::make_shared<const Vector>(data.n.diagonal());
  const Eigen::Index n = data.a.rows();
  const Eigen::Index p = data.n.rows();
  std::ostringstream name;
  name << "brockett(n=" << n << ", p=" << p << ")";
  return CostModel(
      name.str(), n, p,
      [a, mu](const Matrix& u) {
        const Matrix au = (*a) * u;
        double s = 0.0;
        for (Eigen::Index k = 0; k < u.cols(); ++k) s += (*mu)(k) * u.col(k).dot(au.col(k));
        return s;
      },
      [a, mu](const Matrix& u) -> Matrix { return 2.0 * (*a) * u * mu->asDiagonal(); },
      [a, mu](const Matrix&, const Matrix& v1, const Matrix& v2) {
        return 2.0 * frobenius_inner(v1, (*a) * v2 * mu->asDiagonal());
      },
      [a, mu](const Matrix&, const Matrix& v) -> Matrix { return 2.0 * (*a) * v * mu->asDiagonal(); });
}

struct CustomModelOptions {
  std::string name = "custom";
  /// Seed for the three random validation probes.
  std::uint64_t seed = 0;
  double fd_step = kModelFdStep;
  double tolerance = kCustomValidationTolerance;
};

/// Wraps user callables. Without a Hessian, the bilinear form is the
/// symmetrized central difference of the gradient. The gradient (and the
/// Hessian, if given) is checked against finite differences on three random
/// points of St(n,p); disagreement beyond the tolerance throws ValidationFailure.
/// The callables must be reentrant if the model is shared across threads.
inline CostModel custom_model(Eigen::Index n, Eigen::Index p, CostModel::ValueFn value,
                              CostModel::GradientFn gradient,
                              std::optional<CostModel::HessBilinearFn> hess = std::nullopt,
                              const CustomModelOptions& opts = {}) {
  if (!value || !gradient) throw ValidationFailure("custom model needs value and gradient callables");
  const double h = opts.fd_step;
  CostModel::HessBilinearFn hb;
  CostModel::HessApplyFn ha;
  if (hess && *hess) {
    hb = *hess;
  } else {
    hb = [gradient, h](const Matrix& u, const Matrix& v1, const Matrix& v2) {
      return 0.5 * (frobenius_inner(v1, fd::gradient_derivative(gradient, u, v2, h)) +
                    frobenius_inner(v2, fd::gradient_derivative(gradient, u, v1, h)));
    };
    ha = [gradient, h](const Matrix& u, const Matrix& v) -> Matrix {
      return fd::gradient_derivative(gradient, u, v, h);
    };
  }
  CostModel model(opts.name, n, p, value, gradient, hb, ha);

  const bool check_hessian = hess.has_value() && static_cast<bool>(*hess);
  for (std::uint64_t k = 0; k < 3; ++k) {
    const Matrix u = random_stiefel(n, p, opts.seed + 101 * k).matrix();
    const Matrix g = model.gradient(u);
    const Matrix g_fd = fd::central_gradient(value, u, h);
    const double err = fd::relative_error(g, g_fd);
    if (!(err <= opts.tolerance)) {
      std::ostringstream os;
      os << opts.name << ": gradient disagrees with finite differences of the value (relative error "
         << err << " > " << opts.tolerance << ")";
      throw ValidationFailure(os.str());
    }
    if (check_hessian) {
      const Matrix v1 = random_stiefel(n, p, opts.seed + 101 * k + 1).matrix();
      const Matrix v2 = random_stiefel(n, p, opts.seed + 101 * k + 2).matrix();
      const double formula = model.hess_bilinear(u, v1, v2);
      const double oracle = frobenius_inner(v1, fd::gradient_derivative(gradient, u, v2, h));
      const double herr = fd::relative_error(formula, oracle);
      if (!(herr <= opts.tolerance)) {
        std::ostringstream os;
        os << opts.name << ": Hessian disagrees with finite differences of the gradient (relative error "
           << herr << ")";
        throw ValidationFailure(os.str());
      }
    }
  }
  return model;
}

/// G(U) = tr(U^T C2 U C1^T) + tr(L^T U), i.e. vec(U)^T (C1 (x) C2) vec(U) plus a
/// linear term, with C1 p x p and C2 n x n not necessarily symmetric.
/// grad = C2 U C1^T + C2^T U C1 + L.
inline CostModel kronecker_quadratic_model(const Matrix& c1, const Matrix& c2,
                                           const std::optional<Matrix>& linear = std::nullopt) {
  if (c1.rows() != c1.cols() || c2.rows() != c2.cols()) {
    throw DimensionError("kronecker quadratic: C1 and C2 must be square");
  }
  const Eigen::Index n = c2.rows();
  const Eigen::Index p = c1.rows();
  if (p < 1 || p > n) throw DimensionError("kronecker quadratic: need 1 <= p <= n");
  auto k1 = std::make_shared<const Matrix>(c1);
  auto k2 = std::make_shared<const Matrix>(c2);
  auto lin = std::make_shared<const Matrix>(linear ? *linear : Matrix::Zero(n, p));
  if (lin->rows() != n || lin->cols() != p) throw DimensionError("kronecker quadratic: L must be n x p");
  auto apply = [k1, k2](const Matrix& v) -> Matrix {
    return (*k2) * v * k1->transpose() + k2->transpose() * v * (*k1);
  };
  std::ostringstream name;
  name << "kronecker-quadratic(n=" << n << ", p=" << p << ")";
  CostModel::ValueFn value = [k1, k2, lin](const Matrix& u) {
    return frobenius_inner(u, (*k2) * u * k1->transpose()) + frobenius_inner(*lin, u);
  };
  CostModel::GradientFn gradient = [apply, lin](const Matrix& u) -> Matrix { return apply(u) + *lin; };
  CostModel::HessBilinearFn hess = [apply](const Matrix&, const Matrix& v1, const Matrix& v2) {
    return frobenius_inner(v1, apply(v2));
  };
  CustomModelOptions opts;
  opts.name = name.str();
  // Self-validation only; the returned model also carries the exact product.
  custom_model(n, p, value, gradient, hess, opts);
  return CostModel(opts.name, n, p, value, gradient, hess,
                   [apply](const Matrix&, const Matrix& v) -> Matrix { return apply(v); });
}

}  // namespace stiefel
