#pragma once

// First- and second-order optimality on St(n,p) via the embedded gradient:
//   Sigma(U)  = 1/2 (grad G^T U + U^T grad G)        (Lagrange multiplier matrix)
//   dG(U)     = grad G(U) - U Sigma(U)                (Riemannian gradient)
//   Hess G~   = (Hess G - Sigma (x) I_n) restricted to T_U x T_U

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stiefel/costs.hpp"
#include "stiefel/errors.hpp"
#include "stiefel/frame.hpp"
#include "stiefel/manifold.hpp"

namespace stiefel {

inline constexpr double kDefaultCriticalTolerance = 1e-8;
inline constexpr double kDefaultEigenTolerance = 1e-8;

/// Symmetric p x p matrix of Lagrange multiplier functions sigma_bc(U).
struct SigmaMatrix {
  Matrix sigma;
};

inline SigmaMatrix sigma_from_gradient(const Matrix& u, const Matrix& grad) {
  const Matrix s = grad.transpose() * u;
  SigmaMatrix out{0.5 * (s + s.transpose())};
  return out;
}

inline SigmaMatrix sigma_matrix(const CostModel& model, const StiefelPoint& point) {
  return sigma_from_gradient(point.matrix(), model.gradient(point));
}

inline TangentVector embedded_gradient(const CostModel& model, const StiefelPoint& point) {
  const Matrix grad = model.gradient(point);
  const Matrix& u = point.matrix();
  const SigmaMatrix sigma = sigma_from_gradient(u, grad);
  return make_tangent_vector(point, grad - u * sigma.sigma);
}

/// Residuals of the two matrix conditions characterizing critical points:
///   (i)  U^T grad G = grad G^T U
///   (ii) grad G = U U^T grad G
/// Because dG = (I - UU^T) grad G + U skew(U^T grad G), the Frobenius norm of
/// the embedded gradient is bounded by sqrt(np) * (range + sym/2); with the
/// dimensions used at desk scale this puts the two tests within a factor
/// kappa <= 10 of each other away from the boundary.
struct CriticalityReport {
  double sym_residual = 0.0;
  double range_residual = 0.0;
  double embedded_grad_norm = 0.0;
  double tolerance = 0.0;
  bool is_critical = false;
};

inline CriticalityReport is_critical(const CostModel& model, const StiefelPoint& point,
                                     double tol = kDefaultCriticalTolerance) {
  const Matrix& u = point.matrix();
  const Matrix grad = model.gradient(point);
  const Matrix utg = u.transpose() * grad;
  CriticalityReport r;
  r.sym_residual = max_abs(utg - utg.transpose());
  r.range_residual = max_abs(grad - u * utg);
  r.embedded_grad_norm = (grad - u * sym_part(utg)).norm();
  r.tolerance = tol;
  r.is_critical = std::max(r.sym_residual, r.range_residual) <= tol;
  return r;
}

/// Frame coordinates of dG~: g'_ab = (-1)^(a+b) (<dG/du_b, u_a> - <dG/du_a, u_b>)
/// and g''_ic = <dG/du_c, z_i>, with z_i the i-th column of Z = I - U U^T.
/// Each coordinate equals <grad G, frame vector>; orthonormalized frames use
/// that pairing directly.
inline Vector frame_gradient_coords(const CostModel& model, const StiefelPoint& point,
                                    const LocalFrame& frame) {
  if (!frame.base.same_point(point)) throw BaseMismatch("frame was built at a different point");
  const Matrix grad = model.gradient(point);
  const Matrix& u = point.matrix();
  Vector g(frame.size());
  if (frame.orthonormalized) {
    for (Eigen::Index k = 0; k < frame.size(); ++k) g(k) = frobenius_inner(grad, frame.vector(k));
    return g;
  }
  for (Eigen::Index k = 0; k < frame.size(); ++k) {
    const FrameLabel& l = frame.labels[static_cast<std::size_t>(k)];
    if (l.block == FrameBlock::Prime) {
      const Eigen::Index a = l.first;
      const Eigen::Index b = l.second;
      g(k) = alternating_sign(a, b) * (grad.col(b).dot(u.col(a)) - grad.col(a).dot(u.col(b)));
    } else {
      const Eigen::Index i = l.first;
      const Eigen::Index c = l.second;
      Vector z = -(u * u.row(i).transpose());
      z(i) += 1.0;
      g(k) = grad.col(c).dot(z);
    }
  }
  return g;
}

/// (Sigma (x) I_n)(V1, V2) = -tr(A1 A2 Sigma) + tr(C1^T Z C2 Sigma) for
/// V_k = U A_k + C_k.
inline double sigma_kron_bilinear(const SigmaMatrix& sigma, const Matrix& z, const TangentVector& v1,
                                  const TangentVector& v2) {
  if (!v1.base().same_point(v2.base())) {
    throw BaseMismatch("sigma_kron_bilinear: tangent vectors live at different points");
  }
  const TangentComponents t1 = tangent_components(v1);
  const TangentComponents t2 = tangent_components(v2);
  const Matrix& s = sigma.sigma;
  return -(t1.a * t2.a * s).trace() + (t1.c_perp.transpose() * z * t2.c_perp * s).trace();
}

namespace detail {
inline double kd(Eigen::Index i, Eigen::Index j) { return i == j ? 1.0 : 0.0; }
}  // namespace detail

/// Closed form of (Sigma (x) I_n) on a pair of raw frame vectors:
///   prime/prime   -> (-1)^(a1+b1+a2+b2) (d_a1a2 s_b1b2 + d_b1b2 s_a1a2 - d_a2b1 s_a1b2 - d_a1b2 s_a2b1)
///   prime/second  -> 0
///   second/second -> z_j1j2 s_d1d2
inline double sigma_kron_closed_form(const SigmaMatrix& sigma, const Matrix& z, const FrameLabel& l1,
                                     const FrameLabel& l2) {
  using detail::kd;
  const Matrix& s = sigma.sigma;
  if (l1.block != l2.block) return 0.0;
  if (l1.block == FrameBlock::Prime) {
    const Eigen::Index a1 = l1.first, b1 = l1.second, a2 = l2.first, b2 = l2.second;
    const double sign = alternating_sign(a1 + b1, a2 + b2);
    return sign * (kd(a1, a2) * s(b1, b2) + kd(b1, b2) * s(a1, a2) - kd(a2, b1) * s(a1, b2) -
                   kd(a1, b2) * s(a2, b1));
  }
  return z(l1.first, l2.first) * s(l1.second, l2.second);
}

/// Hess F_aa on a pair of raw frame vectors (the Kronecker form (f_a f_a^T) (x) I_n).
inline double constraint_hessian_diag(Eigen::Index a, const Matrix& z, const FrameLabel& l1,
                                      const FrameLabel& l2) {
  using detail::kd;
  if (l1.block != l2.block) return 0.0;
  if (l1.block == FrameBlock::Prime) {
    const Eigen::Index a1 = l1.first, b1 = l1.second, a2 = l2.first, b2 = l2.second;
    const double sign = alternating_sign(a1 + b1, a2 + b2);
    return sign * (kd(a, a1) * kd(a, a2) * kd(b1, b2) + kd(a, b1) * kd(a, b2) * kd(a1, a2));
  }
  return kd(a, l1.second) * kd(a, l2.second) * z(l1.first, l2.first);
}

/// Hess F_bc (b < c) on a pair of raw frame vectors (the Kronecker form
/// (f_b f_c^T + f_c f_b^T) (x) I_n).
inline double constraint_hessian_offdiag(Eigen::Index b, Eigen::Index c, const Matrix& z,
                                         const FrameLabel& l1, const FrameLabel& l2) {
  using detail::kd;
  if (l1.block != l2.block) return 0.0;
  if (l1.block == FrameBlock::Prime) {
    const Eigen::Index a1 = l1.first, b1 = l1.second, a2 = l2.first, b2 = l2.second;
    const double sign = alternating_sign(a1 + b1, a2 + b2);
    return sign * (kd(a1, b) * kd(c, a2) * kd(b1, b2) - kd(a1, b) * kd(c, b2) * kd(b1, a2) +
                   kd(a1, c) * kd(b, a2) * kd(b1, b2) + kd(b1, b) * kd(c, b2) * kd(a1, a2) -
                   kd(b1, c) * kd(b, a2) * kd(a1, b2) + kd(b1, c) * kd(b, b2) * kd(a1, a2));
  }
  const Eigen::Index d1 = l1.second, d2 = l2.second;
  return (kd(b, d1) * kd(c, d2) + kd(b, d2) * kd(c, d1)) * z(l1.first, l2.first);
}

/// Hess G~(U)(V1, V2) = Hess G(U)(V1, V2) - (Sigma (x) I_n)(V1, V2).
inline double hessian_form_on_pair(const CostModel& model, const StiefelPoint& point,
                                   const SigmaMatrix& sigma, const TangentVector& v1,
                                   const TangentVector& v2) {
  if (!v1.base().same_point(point) || !v2.base().same_point(point)) {
    throw BaseMismatch("hessian_form_on_pair: tangent vectors live at a different point");
  }
  return model.hess_bilinear(point.matrix(), v1.matrix(), v2.matrix()) -
         sigma_kron_bilinear(sigma, point.complement_projector(), v1, v2);
}

/// Hess G~ in frame coordinates together with the frame Gram matrix.
struct FrameHessian {
  Matrix h;
  Matrix gram;
  std::vector<FrameLabel> labels;
};

/// Raw frames use the closed-form Sigma terms (zero on the mixed block);
/// orthonormalized frames evaluate the general trace formula.
inline FrameHessian assemble_frame_hessian(const CostModel& model, const StiefelPoint& point,
                                           const LocalFrame& frame) {
  if (!frame.base.same_point(point)) throw BaseMismatch("frame was built at a different point");
  const Eigen::Index d = frame.size();
  const Matrix& u = point.matrix();
  const SigmaMatrix sigma = sigma_matrix(model, point);
  const Matrix z = point.complement_projector();

  std::vector<Matrix> hv;
  hv.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) hv.push_back(model.hess_apply(u, frame.vector(j)));

  FrameHessian out;
  out.h.resize(d, d);
  out.gram = frame.gram();
  out.labels = frame.labels;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double ambient = frobenius_inner(frame.vector(i), hv[static_cast<std::size_t>(j)]);
      double sigma_term;
      if (frame.orthonormalized) {
        sigma_term = sigma_kron_bilinear(sigma, z, frame.tangent(i), frame.tangent(j));
      } else {
        sigma_term = sigma_kron_closed_form(sigma, z, frame.labels[static_cast<std::size_t>(i)],
                                            frame.labels[static_cast<std::size_t>(j)]);
      }
      out.h(i, j) = ambient - sigma_term;
    }
  }
  out.h = sym_part(out.h);
  return out;
}

enum class CriticalKind { LocalMinimum, LocalMaximum, Saddle, Degenerate };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::LocalMinimum: return "LocalMinimum";
    case CriticalKind::LocalMaximum: return "LocalMaximum";
    case CriticalKind::Saddle: return "Saddle";
    case CriticalKind::Degenerate: return "Degenerate";
  }
  return "?";
}

struct Classification {
  Vector eigenvalues;  // ascending generalized eigenvalues of (H, gram)
  CriticalKind kind = CriticalKind::Degenerate;
  double zero_threshold = 0.0;
};

/// Signs of the generalized eigenvalues of H v = lambda gram v, with anything in
/// [-threshold, threshold] treated as zero; threshold = tol_eig * max(1, |H|_F).
inline Classification classify_frame_hessian(const FrameHessian& fh, double tol_eig = kDefaultEigenTolerance) {
  Classification out;
  out.zero_threshold = tol_eig * std::max(1.0, fh.h.norm());
  if (fh.h.rows() == 0) {
    out.eigenvalues = Vector(0);
    out.kind = CriticalKind::Degenerate;
    return out;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(fh.h, fh.gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DegenerateFrame("frame Gram matrix is not positive definite");
  out.eigenvalues = es.eigenvalues();
  const double t = out.zero_threshold;
  const bool any_pos = (out.eigenvalues.array() > t).any();
  const bool any_neg = (out.eigenvalues.array() < -t).any();
  const bool all_pos = (out.eigenvalues.array() > t).all();
  const bool all_neg = (out.eigenvalues.array() < -t).all();
  if (all_pos) {
    out.kind = CriticalKind::LocalMinimum;
  } else if (all_neg) {
    out.kind = CriticalKind::LocalMaximum;
  } else if (any_pos && any_neg) {
    out.kind = CriticalKind::Saddle;
  } else {
    out.kind = CriticalKind::Degenerate;
  }
  return out;
}

/// Classifies a critical point; throws NotCritical when the first-order
/// conditions fail at tol_crit.
inline Classification classify_critical_point(const CostModel& model, const StiefelPoint& point,
                                              double tol_crit = kDefaultCriticalTolerance,
                                              double tol_eig = kDefaultEigenTolerance) {
  const CriticalityReport crit = is_critical(model, point, tol_crit);
  if (!crit.is_critical) {
    throw NotCritical("point is not critical at tolerance " + std::to_string(tol_crit) +
                      " (sym residual " + std::to_string(crit.sym_residual) + ", range residual " +
                      std::to_string(crit.range_residual) + ")");
  }
  const LocalFrame frame = build_frame(point);
  return classify_frame_hessian(assemble_frame_hessian(model, point, frame), tol_eig);
}

}  // namespace stiefel
