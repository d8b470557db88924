#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace stiefel;
using testsupport::frame_columns;
using testsupport::kron;
using testsupport::random_matrix;
using testsupport::unit_columns;
using testsupport::vec;

namespace {

CostModel constant_model(Eigen::Index n, Eigen::Index p) {
  return CostModel(
      "constant", n, p, [](const Matrix&) { return 3.0; },
      [n, p](const Matrix&) -> Matrix { return Matrix::Zero(n, p); },
      [](const Matrix&, const Matrix&, const Matrix&) { return 0.0; });
}

StiefelPoint st42(std::initializer_list<std::pair<Eigen::Index, double>> cols) {
  return make_stiefel_point(unit_columns(4, cols));
}

/// H = F^T (K - Sigma (x) I_n) F with F the vec'd frame and K the ambient Kronecker Hessian.
Matrix kronecker_frame_hessian(const Matrix& k, const Matrix& sigma, const LocalFrame& f) {
  const Eigen::Index n = f.base.n();
  const Matrix fc = frame_columns(f);
  return fc.transpose() * (k - kron(sigma, Matrix::Identity(n, n))) * fc;
}

}  // namespace

TEST(Sigma, BrockettAtE1E2) {
  const CostModel m = brockett_model(testsupport::brockett_st42());
  const SigmaMatrix s = sigma_matrix(m, st42({{0, 1.0}, {1, 1.0}}));
  Matrix expected = Matrix::Zero(2, 2);
  expected.diagonal() << 2, 8;
  EXPECT_LE(max_abs(s.sigma - expected), 1e-15);
}

TEST(Sigma, ExactProcrustesFitIsZero) {
  const StiefelPoint u = random_stiefel(5, 3, 1);
  const CostModel m = procrustes_model({Matrix::Identity(5, 5), u.matrix()});
  EXPECT_LE(max_abs(sigma_matrix(m, u).sigma), 1e-15);
}

TEST(Sigma, SymmetricAndMatchesLoops) {
  const CostModel m = penrose_model({random_matrix(6, 5, 2), random_matrix(6, 3, 3), random_matrix(3, 3, 4)});
  for (std::uint64_t s = 0; s < 10; ++s) {
    const StiefelPoint u = random_stiefel(5, 3, s);
    const Matrix sig = sigma_matrix(m, u).sigma;
    EXPECT_EQ(sig, sig.transpose());
    EXPECT_LE(max_abs(sig - testsupport::sigma_by_loops(u.matrix(), m.gradient(u))), 1e-12);
  }
}

TEST(Sigma, EqualsClassicalMultipliersAtCriticalPoints) {
  // At a critical point grad G = U Sigma, so Sigma = U^T grad G exactly.
  const CostModel m = brockett_model({testsupport::random_symmetric(5, 5), Vector::LinSpaced(2, 1, 2).asDiagonal()});
  const Matrix vecs = canonical_eigenvectors(testsupport::random_symmetric(5, 5));
  const StiefelPoint u = make_stiefel_point(vecs.leftCols(2));
  const Matrix g = m.gradient(u);
  EXPECT_LE(max_abs(g - u.matrix() * sigma_matrix(m, u).sigma), 1e-12);
}

TEST(EmbeddedGradient, ZeroAtBrockettEigenvectors) {
  const CostModel m = brockett_model(testsupport::brockett_st42());
  EXPECT_LE(max_abs(embedded_gradient(m, st42({{0, 1.0}, {1, 1.0}})).matrix()), 1e-15);
}

TEST(EmbeddedGradient, IsProjectedGradient) {
  const CostModel m = procrustes_model({random_matrix(7, 5, 6), random_matrix(7, 2, 7)});
  const StiefelPoint u = random_stiefel(5, 2, 8);
  const TangentVector dg = embedded_gradient(m, u);
  EXPECT_LE(max_abs(dg.matrix() - project_tangent(u, m.gradient(u)).matrix()), 1e-12);
  // <dG, V> = <grad G, V> for every tangent V.
  for (std::uint64_t k = 0; k < 5; ++k) {
    const Matrix v = testsupport::random_tangent_matrix(u, 50 + 2 * k);
    EXPECT_NEAR(frobenius_inner(dg.matrix(), v), frobenius_inner(m.gradient(u), v), 1e-12);
  }
}

TEST(IsCritical, BrockettExamples) {
  const CostModel m = brockett_model(testsupport::brockett_st42());
  EXPECT_TRUE(is_critical(m, st42({{0, 1.0}, {1, 1.0}}), 1e-10).is_critical);
  Matrix u = Matrix::Zero(4, 2);
  const double r = 1.0 / std::sqrt(2.0);
  u.col(0) << r, r, 0, 0;
  u.col(1) << r, -r, 0, 0;
  const CriticalityReport rep = is_critical(m, make_stiefel_point(u), 1e-10);
  EXPECT_FALSE(rep.is_critical);
  EXPECT_GT(std::max(rep.sym_residual, rep.range_residual), 0.1);
}

TEST(IsCritical, ExactProcrustesFit) {
  const StiefelPoint u = random_stiefel(4, 2, 9);
  const CriticalityReport rep = is_critical(procrustes_model({Matrix::Identity(4, 4), u.matrix()}), u);
  EXPECT_TRUE(rep.is_critical);
  EXPECT_EQ(rep.sym_residual, 0.0);
  EXPECT_EQ(rep.range_residual, 0.0);
}

TEST(IsCritical, AgreesWithEmbeddedGradientNorm) {
  int disagreements = 0;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const CostModel m = procrustes_model({random_matrix(6, 4, s), random_matrix(6, 2, s + 1)});
    const StiefelPoint u = random_stiefel(4, 2, s + 2);
    const CriticalityReport rep = is_critical(m, u, 1e-8);
    if (rep.is_critical != (embedded_gradient(m, u).matrix().norm() <= 1e-8)) ++disagreements;
  }
  EXPECT_EQ(disagreements, 0);
}

TEST(FrameGradient, MatchesPairingWithEuclideanGradient) {
  const CostModel m = penrose_model({random_matrix(6, 5, 10), random_matrix(6, 3, 11), random_matrix(3, 3, 12)});
  for (std::uint64_t s = 0; s < 5; ++s) {
    const StiefelPoint u = random_stiefel(5, 3, s);
    const LocalFrame f = build_frame(u);
    const Vector g = frame_gradient_coords(m, u, f);
    const Vector expected = frame_columns(f).transpose() * vec(m.gradient(u));
    EXPECT_LE((g - expected).cwiseAbs().maxCoeff(), 1e-12);
    const LocalFrame o = orthonormalize_frame(f);
    EXPECT_LE((frame_gradient_coords(m, u, o) - frame_columns(o).transpose() * vec(m.gradient(u))).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(FrameGradient, ZeroAtCriticalPoint) {
  const CostModel m = brockett_model(testsupport::brockett_st42());
  const StiefelPoint u = st42({{3, 1.0}, {1, -1.0}});
  EXPECT_LE(frame_gradient_coords(m, u, build_frame(u)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FrameGradient, RejectsForeignFrame) {
  const CostModel m = brockett_model(testsupport::brockett_st42());
  EXPECT_THROW(frame_gradient_coords(m, random_stiefel(4, 2, 1), build_frame(random_stiefel(4, 2, 2))),
               BaseMismatch);
}

TEST(SigmaKron, GeneralFormulaEqualsFrobeniusPairing) {
  // (Sigma (x) I)(V1, V2) = <V1, V2 Sigma>.
  const StiefelPoint u = random_stiefel(6, 3, 13);
  const SigmaMatrix s{testsupport::random_symmetric(3, 14)};
  for (std::uint64_t k = 0; k < 10; ++k) {
    const TangentVector v1 = testsupport::random_tangent(u, 100 + 4 * k);
    const TangentVector v2 = testsupport::random_tangent(u, 102 + 4 * k);
    EXPECT_NEAR(sigma_kron_bilinear(s, u.complement_projector(), v1, v2),
                frobenius_inner(v1.matrix(), v2.matrix() * s.sigma), 1e-12);
  }
}

TEST(SigmaKron, ClosedFormsOnFramePairs) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const StiefelPoint u = random_stiefel(5, 3, seed);
    const LocalFrame f = build_frame(u);
    const SigmaMatrix s{testsupport::random_symmetric(3, seed + 20)};
    const Matrix z = u.complement_projector();
    for (Eigen::Index i = 0; i < f.size(); ++i)
      for (Eigen::Index j = 0; j < f.size(); ++j) {
        const FrameLabel& a = f.labels[static_cast<std::size_t>(i)];
        const FrameLabel& b = f.labels[static_cast<std::size_t>(j)];
        const double general = sigma_kron_bilinear(s, z, f.tangent(i), f.tangent(j));
        EXPECT_NEAR(general, sigma_kron_closed_form(s, z, a, b), 1e-12);
        if (a.block != b.block) {
          EXPECT_NEAR(general, 0.0, 1e-12);
        }
        if (a.block == FrameBlock::Second && b.block == FrameBlock::Second) {
          EXPECT_NEAR(general, z(a.first, b.first) * s.sigma(a.second, b.second), 1e-12);
        }
      }
  }
}

TEST(SigmaKron, ZeroSigma) {
  const StiefelPoint u = random_stiefel(5, 2, 15);
  const LocalFrame f = build_frame(u);
  const SigmaMatrix s{Matrix::Zero(2, 2)};
  for (Eigen::Index i = 0; i < f.size(); ++i)
    for (Eigen::Index j = 0; j < f.size(); ++j)
      EXPECT_EQ(sigma_kron_bilinear(s, u.complement_projector(), f.tangent(i), f.tangent(j)), 0.0);
}

TEST(ConstraintHessian, ClosedFormsMatchColumnPairings) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const StiefelPoint u = random_stiefel(6, 3, seed);
    const LocalFrame f = build_frame(u);
    const Matrix z = u.complement_projector();
    for (Eigen::Index i = 0; i < f.size(); ++i)
      for (Eigen::Index j = 0; j < f.size(); ++j) {
        const FrameLabel& l1 = f.labels[static_cast<std::size_t>(i)];
        const FrameLabel& l2 = f.labels[static_cast<std::size_t>(j)];
        const Matrix& v1 = f.vector(i);
        const Matrix& v2 = f.vector(j);
        for (Eigen::Index a = 0; a < 3; ++a) {
          // Hess F_aa(V1, V2) = <v1_a, v2_a>.
          EXPECT_NEAR(constraint_hessian_diag(a, z, l1, l2), v1.col(a).dot(v2.col(a)), 1e-12);
        }
        for (Eigen::Index b = 0; b < 3; ++b)
          for (Eigen::Index c = b + 1; c < 3; ++c) {
            // Hess F_bc(V1, V2) = <v1_b, v2_c> + <v1_c, v2_b>.
            EXPECT_NEAR(constraint_hessian_offdiag(b, c, z, l1, l2),
                        v1.col(b).dot(v2.col(c)) + v1.col(c).dot(v2.col(b)), 1e-12);
          }
      }
  }
}

TEST(HessianFormOnPair, BrockettMatchesKroneckerForm) {
  const auto d = testsupport::brockett_st42();
  const CostModel m = brockett_model(d);
  const StiefelPoint u = random_stiefel(4, 2, 16);
  const SigmaMatrix s = sigma_matrix(m, u);
  const TangentVector v1 = testsupport::random_tangent(u, 17), v2 = testsupport::random_tangent(u, 19);
  const double expected = 2.0 * (v1.matrix().transpose() * d.a * v2.matrix() * d.n).trace() -
                          frobenius_inner(v1.matrix(), v2.matrix() * s.sigma);
  EXPECT_NEAR(hessian_form_on_pair(m, u, s, v1, v2), expected, 1e-12);
  EXPECT_NEAR(hessian_form_on_pair(m, u, s, v1, v2), hessian_form_on_pair(m, u, s, v2, v1), 1e-12);
  EXPECT_EQ(hessian_form_on_pair(m, u, s, v1, zero_tangent(u)), 0.0);
  EXPECT_THROW(hessian_form_on_pair(m, random_stiefel(4, 2, 1), s, v1, v2), BaseMismatch);
}

TEST(FrameHessian, MatchesKroneckerOracle) {
  const Matrix a = random_matrix(7, 5, 21), b = random_matrix(7, 2, 22), c = random_matrix(2, 2, 23);
  const CostModel m = penrose_model({a, b, c});
  const Matrix k = kron(c * c.transpose(), a.transpose() * a);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const StiefelPoint u = random_stiefel(5, 2, s);
    const LocalFrame f = build_frame(u);
    const FrameHessian fh = assemble_frame_hessian(m, u, f);
    const Matrix oracle = kronecker_frame_hessian(k, sigma_matrix(m, u).sigma, f);
    EXPECT_LE(max_abs(fh.h - oracle), 1e-10);
    EXPECT_EQ(fh.h, fh.h.transpose());
    EXPECT_LE(max_abs(fh.gram - frame_columns(f).transpose() * frame_columns(f)), 1e-12);
    // Orthonormalized frame goes through the general Sigma formula.
    const LocalFrame o = orthonormalize_frame(f);
    EXPECT_LE(max_abs(assemble_frame_hessian(m, u, o).h - kronecker_frame_hessian(k, sigma_matrix(m, u).sigma, o)),
              1e-10);
  }
}

TEST(FrameHessian, ConstantCostIsZero) {
  const CostModel m = constant_model(5, 2);
  const StiefelPoint u = random_stiefel(5, 2, 24);
  EXPECT_EQ(max_abs(assemble_frame_hessian(m, u, build_frame(u)).h), 0.0);
  EXPECT_EQ(classify_critical_point(m, u).kind, CriticalKind::Degenerate);
}

TEST(Classify, BrockettCensusExamples) {
  const CostModel m = brockett_model(testsupport::brockett_st42());
  EXPECT_EQ(classify_critical_point(m, st42({{0, 1.0}, {1, 1.0}})).kind, CriticalKind::Saddle);
  EXPECT_EQ(classify_critical_point(m, st42({{1, -1.0}, {0, 1.0}})).kind, CriticalKind::LocalMinimum);
  EXPECT_EQ(classify_critical_point(m, st42({{2, 1.0}, {3, 1.0}})).kind, CriticalKind::LocalMaximum);
  EXPECT_EQ(classify_critical_point(m, st42({{3, 1.0}, {1, 1.0}})).kind, CriticalKind::Saddle);

  const Classification minimum = classify_critical_point(m, st42({{1, 1.0}, {0, 1.0}}));
  EXPECT_GT(minimum.eigenvalues.minCoeff(), 0.0);
  const Classification maximum = classify_critical_point(m, st42({{2, 1.0}, {3, 1.0}}));
  EXPECT_LT(maximum.eigenvalues.maxCoeff(), 0.0);
}

TEST(Classify, SignatureIsFrameIndependent) {
  const CostModel m = brockett_model(testsupport::brockett_st42());
  const StiefelPoint u = st42({{3, 1.0}, {0, -1.0}});
  const LocalFrame f = build_frame(u);
  const Classification raw = classify_frame_hessian(assemble_frame_hessian(m, u, f));
  const Classification ortho = classify_frame_hessian(assemble_frame_hessian(m, u, orthonormalize_frame(f)));
  EXPECT_EQ(raw.kind, ortho.kind);
  EXPECT_LE((raw.eigenvalues - ortho.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Classify, RequiresCriticalPoint) {
  const CostModel m = brockett_model(testsupport::brockett_st42());
  EXPECT_THROW(classify_critical_point(m, random_stiefel(4, 2, 25)), NotCritical);
}
