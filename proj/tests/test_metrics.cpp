#include <gtest/gtest.h>

#include "support.hpp"

namespace su2vol {
namespace {

using testing::random_spd;

Mat3 random_rotation(Rng& rng) {
  Mat3 q;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) q(i, j) = rng.normal();
  Mat3 r = Eigen::HouseholderQR<Mat3>(q).householderQ();
  if (r.determinant() < 0) r.col(0) *= -1.0;
  return r;
}

void expect_params_near(const Parameters& got, const Parameters& want, double tol) {
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(got.a[i] / want.a[i], 1.0, tol) << "a" << i;
  EXPECT_NEAR(got.d, want.d, tol * std::max(1.0, want.d));
}

TEST(Metrics, MetricTensorRejectsBadInput) {
  MatX ns = MatX::Identity(6, 6);
  ns(0, 1) = 0.5;
  EXPECT_THROW(MetricTensor{ns}, Error);
  MatX indefinite = MatX::Identity(6, 6);
  indefinite(4, 4) = -1.0;
  EXPECT_THROW(MetricTensor{indefinite}, Error);
  EXPECT_THROW(MetricTensor{MatX::Identity(2, 2)}, Error);
  try {
    MetricTensor{ns};
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotSPD);
  }
}

TEST(Metrics, ExtractMilnorIdentity) {
  const MilnorFrame f = extract_milnor_su2(Mat3::Identity());
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(f.a(i), 1.0, 1e-14);
  EXPECT_NEAR(f.u.determinant(), 1.0, 1e-12);
  EXPECT_LE(milnor_bracket_residual(f.u), 1e-12);
}

TEST(Metrics, ExtractMilnorDiagonalSorts) {
  const MilnorFrame f = extract_milnor_su2(Vec3(4, 1, 9).asDiagonal());
  EXPECT_NEAR(f.a(0), 1.0, 1e-14);
  EXPECT_NEAR(f.a(1), 2.0, 1e-14);
  EXPECT_NEAR(f.a(2), 3.0, 1e-14);
  EXPECT_NEAR(std::abs(f.u(1, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(f.u(0, 1)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(f.u(2, 2)), 1.0, 1e-14);
  EXPECT_NEAR(f.u.determinant(), 1.0, 1e-12);
}

TEST(Metrics, ExtractMilnorRandom) {
  Rng rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const Mat3 g = random_spd(3, rng, 10.0);
    const MilnorFrame f = extract_milnor_su2(g);
    EXPECT_LE(milnor_bracket_residual(f.u), 1e-10);
    const Mat3 ip = f.u.transpose() * g * f.u;
    for (int i = 0; i < 3; ++i) {
      EXPECT_NEAR(std::sqrt(ip(i, i)), f.a(i), 1e-10 * f.a(i));
      for (int j = 0; j < 3; ++j)
        if (i != j) EXPECT_LE(std::abs(ip(i, j)), 1e-10 * std::sqrt(ip(i, i) * ip(j, j)));
    }
    EXPECT_LE(f.a(0), f.a(1));
    EXPECT_LE(f.a(1), f.a(2));
  }
}

TEST(Metrics, SkewedBasisBlockDiagonalHasNoTilt) {
  MatX g = MatX::Identity(6, 6);
  g.topLeftCorner(3, 3) = Vec3(4, 1, 9).asDiagonal();
  const SkewedBasis sk = skewed_basis(MetricTensor(g));
  EXPECT_LE(sk.h.cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((sk.v.topRows(3) - sk.milnor.u).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Metrics, SkewedBasisIsOrthogonalToTheCenter) {
  Rng rng(22);
  for (int n : {1, 2, 3, 5}) {
    for (int rep = 0; rep < 50; ++rep) {
      const MatX g = random_spd(3 + n, rng);
      const SkewedBasis sk = skewed_basis(MetricTensor(g));
      const MatX gv = g * sk.v;
      EXPECT_LE(gv.bottomRows(n).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE(milnor_bracket_residual(sk.milnor.u), 1e-10);
      EXPECT_LE((sk.v.topRows(3) - sk.milnor.u).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LE((sk.v.bottomRows(n) - sk.h).cwiseAbs().maxCoeff(), 1e-12);
      const MatX ip = sk.v.transpose() * g * sk.v;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (i != j) EXPECT_LE(std::abs(ip(i, j)), 1e-10 * std::sqrt(ip(i, i) * ip(j, j)));
    }
  }
}

TEST(Metrics, LiftVectorsZero) {
  const LiftedVectors lv = lift_vectors(MatX::Zero(2, 3));
  EXPECT_EQ(lv.d, 0.0);
  EXPECT_LE(lv.f.topRows(2).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((lv.f.bottomRows(3) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Metrics, LiftVectorsOrthogonalEqualNorm) {
  const double c = 2.5;
  const LiftedVectors lv = lift_vectors(c * MatX::Identity(3, 3));
  EXPECT_NEAR(lv.d, c, 1e-14);
  EXPECT_LE((lv.d * lv.f.topRows(3) - c * MatX::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((lv.f.transpose() * lv.f - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Metrics, LiftVectorsAllEqual) {
  MatX h = MatX::Zero(3, 3);
  h.row(0).setOnes();
  const LiftedVectors lv = lift_vectors(h);
  EXPECT_NEAR(lv.d, std::sqrt(3.0), 1e-14);
  EXPECT_LE((lv.f.transpose() * lv.f - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((lv.d * lv.f.topRows(3) - h).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Metrics, LiftVectorsRandom) {
  Rng rng(23);
  for (int n : {1, 2, 4}) {
    for (int rep = 0; rep < 50; ++rep) {
      MatX h(n, 3);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < 3; ++j) h(i, j) = rng.normal();
      const LiftedVectors lv = lift_vectors(h);
      const double lmax = Eigen::SelfAdjointEigenSolver<Mat3>(h.transpose() * h).eigenvalues().maxCoeff();
      EXPECT_NEAR(lv.d, std::sqrt(lmax), 1e-12);
      EXPECT_LE((lv.f.transpose() * lv.f - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((lv.d * lv.f.topRows(n) - h).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(Metrics, LiftIsPartialIsometryAndHomomorphism) {
  Rng rng(24);
  for (int n : {0, 1, 3}) {
    for (int rep = 0; rep < 30; ++rep) {
      const MetricTensor g(random_spd(3 + n, rng));
      const LiftResiduals r = check_lift(g, lift_to_decoupled(g));
      EXPECT_LE(r.frame_orthonormality, 1e-10);
      EXPECT_LE(r.partial_isometry, 1e-10);
      EXPECT_LE(r.homomorphism, 1e-10);
    }
  }
}

TEST(Metrics, ReduceReferenceMetric) {
  const DecoupledMetric m = reduce_to_decoupled(MetricTensor::reference(3));
  expect_params_near(m.params(), Parameters{{1, 1, 1}, 0}, 1e-12);
  const DecoupledMetric m0 = reduce_to_decoupled(MetricTensor::reference(0));
  expect_params_near(m0.params(), Parameters{{1, 1, 1}, 0}, 1e-12);
}

TEST(Metrics, FromParametersExamples) {
  EXPECT_LE((from_parameters(1, 1, 1, 0).gram() - Mat6::Identity()).cwiseAbs().maxCoeff(), 1e-15);
  const double d = 3.0;
  const DecoupledMetric m = from_parameters(1, 1, 1, d);
  for (int i = 0; i < 3; ++i) {
    const Vec6 u = AlgebraElement::u(i).coeffs();
    EXPECT_NEAR(u.dot(m.gram() * u), 1.0 + d * d, 1e-12);
  }
  EXPECT_THROW(from_parameters(2, 1, 3, 0), Error);
  EXPECT_THROW(from_parameters(0, 1, 3, 0), Error);
  EXPECT_THROW(from_parameters(1, 1, 3, -1), Error);
}

TEST(Metrics, RoundTripThroughReduction) {
  expect_params_near(reduce_to_decoupled(from_parameters(1, 2, 3, 5).tensor()).params(), Parameters{{1, 2, 3}, 5},
                     1e-8);
  Rng rng(25);
  for (int rep = 0; rep < 300; ++rep) {
    std::array<double, 3> a{std::exp(rng.uniform(-3, 3)), std::exp(rng.uniform(-3, 3)), std::exp(rng.uniform(-3, 3))};
    std::sort(a.begin(), a.end());
    const Parameters p{a, rng.uniform() < 0.2 ? 0.0 : std::exp(rng.uniform(-3, 3))};
    expect_params_near(reduce_to_decoupled(from_parameters(p).tensor()).params(), p, 1e-8);
  }
}

TEST(Metrics, CanonicalizeSortsAndFlips) {
  const DecoupledMetric raw = make_decoupled(Mat3::Identity(), Mat3::Identity(), Parameters{{3, 1, 2}, -5});
  const DecoupledMetric c = canonicalize(raw);
  expect_params_near(c.params(), Parameters{{1, 2, 3}, 5}, 1e-15);
  const DecoupledResiduals r = check_decoupled(c);
  EXPECT_LE(r.bracket, 1e-10);
  EXPECT_TRUE(r.ordered);
  const DecoupledMetric again = canonicalize(c);
  EXPECT_LE((again.basis() - c.basis()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Metrics, CanonicalizeRandomPermutationsKeepMilnorRelations) {
  Rng rng(26);
  for (int rep = 0; rep < 200; ++rep) {
    Parameters p{{rng.uniform(0.1, 5), rng.uniform(0.1, 5), rng.uniform(0.1, 5)}, rng.uniform(-4, 4)};
    const DecoupledMetric c = canonicalize(make_decoupled(random_rotation(rng), random_rotation(rng), p));
    const DecoupledResiduals r = check_decoupled(c);
    EXPECT_LE(r.bracket, 1e-10);
    EXPECT_LE(r.orthogonality, 1e-10);
    EXPECT_TRUE(r.ordered);
  }
}

TEST(Metrics, ReductionSatisfiesDecoupledInvariants) {
  Rng rng(27);
  for (int n : {0, 1, 3}) {
    for (int rep = 0; rep < 200; ++rep) {
      const DecoupledMetric m = reduce_to_decoupled(MetricTensor(random_spd(3 + n, rng)));
      const DecoupledResiduals r = check_decoupled(m);
      EXPECT_LE(r.bracket, 1e-10);
      EXPECT_LE(r.orthogonality, 1e-10);
      EXPECT_LE(r.milnor_norm, 1e-8);
      EXPECT_LE(r.f_norm, 1e-10);
      EXPECT_LE(r.f_central, 1e-12);
      EXPECT_TRUE(r.ordered);
    }
  }
}

TEST(Metrics, ParametersInvariantUnderAutomorphisms) {
  Rng rng(28);
  for (int n : {0, 1, 3}) {
    for (int rep = 0; rep < 100; ++rep) {
      const MatX g = random_spd(3 + n, rng);
      MatX phi = MatX::Zero(3 + n, 3 + n);
      phi.topLeftCorner(3, 3) = random_rotation(rng);
      if (n > 0) {
        MatX q(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) q(i, j) = rng.normal();
        phi.bottomRightCorner(n, n) = Eigen::HouseholderQR<MatX>(q).householderQ();
      }
      const MatX pulled = phi.transpose() * g * phi;
      const Parameters before = reduce_to_decoupled(MetricTensor(g)).params();
      const Parameters after = reduce_to_decoupled(MetricTensor(0.5 * (pulled + pulled.transpose()))).params();
      expect_params_near(after, before, 1e-8);
    }
  }
}

TEST(Metrics, MilnorNormIdentityHoldsForDecoupledMetrics) {
  Rng rng(29);
  for (int rep = 0; rep < 100; ++rep) {
    std::array<double, 3> a{rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(0.1, 10)};
    std::sort(a.begin(), a.end());
    const DecoupledMetric m = from_parameters(Parameters{a, rng.uniform(0, 10)});
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double gij = m.u(i).coeffs().dot(m.gram() * m.u(j).coeffs());
        const double want = i == j ? a[i] * a[i] + m.d() * m.d() : 0.0;
        EXPECT_NEAR(gij, want, 1e-10 * (1.0 + want));
      }
    }
  }
}

}  // namespace
}  // namespace su2vol
