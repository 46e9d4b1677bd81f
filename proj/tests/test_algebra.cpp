#include <gtest/gtest.h>

#include "support.hpp"

namespace su2vol {
namespace {

using testing::expm;
using testing::pauli_oracle;
using testing::su2_oracle;

double max_abs(const Mat2c& m) { return m.cwiseAbs().maxCoeff(); }

TEST(Algebra, PauliBasisMatchesHandWrittenMatrices) {
  for (int k = 0; k < 3; ++k) EXPECT_LT(max_abs(pauli(k) - pauli_oracle(k)), 1e-15);
}

TEST(Algebra, MilnorMatrixRelations) {
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const int k = (i + 2) % 3;
    EXPECT_LE(max_abs(pauli(i) * pauli(i) + 0.25 * Mat2c::Identity()), 1e-12);
    EXPECT_LE(max_abs(pauli(i) * pauli(j) - 0.5 * pauli(k)), 1e-12);
  }
}

TEST(Algebra, BracketExamples) {
  const auto b = bracket(AlgebraElement::u(0), AlgebraElement::u(1));
  EXPECT_LT((b.coeffs() - AlgebraElement::u(2).coeffs()).norm(), 1e-15);

  const AlgebraElement a(Vec3(0.3, -1.2, 2.0), Vec3(1.0, 2.0, 3.0));
  EXPECT_LT(bracket(a, a).coeffs().norm(), 1e-15);

  const auto central = bracket(AlgebraElement::u(0) + AlgebraElement::e(0), AlgebraElement::u(1) + AlgebraElement::e(1));
  EXPECT_LT((central.coeffs() - AlgebraElement::u(2).coeffs()).norm(), 1e-15);
}

TEST(Algebra, BracketIsMatrixCommutatorAndSatisfiesJacobi) {
  Rng rng(11);
  auto random_element = [&] {
    return AlgebraElement(Vec3(rng.normal(), rng.normal(), rng.normal()), Vec3(rng.normal(), rng.normal(), rng.normal()));
  };
  for (int rep = 0; rep < 200; ++rep) {
    const auto x = random_element();
    const auto y = random_element();
    const auto z = random_element();
    const Mat2c mx = su2_oracle(x.su2());
    const Mat2c my = su2_oracle(y.su2());
    EXPECT_LT(max_abs(bracket(x, y).matrix() - (mx * my - my * mx)), 1e-12);
    EXPECT_LT(bracket(x, y).center().norm(), 1e-15);
    const auto jacobi = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y));
    EXPECT_LE(jacobi.coeffs().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Algebra, ExponentialExamples) {
  const GroupElement full = exp_group(kFourPi * AlgebraElement::u(0));
  EXPECT_LT(full.distance_to(GroupElement::identity()), 1e-12);
  EXPECT_LT(exp_group(AlgebraElement()).distance_to(GroupElement::identity()), 1e-15);
  const GroupElement half = exp_group(kTwoPi * AlgebraElement::u(2));
  EXPECT_LT(max_abs(half.su2() + Mat2c::Identity()), 1e-12);
  const GroupElement shifted = exp_group(AlgebraElement(Vec3::Zero(), Vec3(1, 2, 3)));
  EXPECT_LT((shifted.vec() - Vec3(1, 2, 3)).norm(), 1e-15);
}

TEST(Algebra, RodriguesAgreesWithIndependentExponential) {
  Rng rng(12);
  for (int rep = 0; rep < 1000; ++rep) {
    const Vec3 x(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
    EXPECT_LE(max_abs(exp_su2(x) - expm(su2_oracle(x))), 1e-12);
  }
  for (double tiny : {0.0, 1e-12, 1e-8, 1e-5, 1e-3}) {
    const Vec3 x = tiny * Vec3(0.3, -0.5, 0.8);
    EXPECT_LE(max_abs(exp_su2(x) - expm(su2_oracle(x))), 1e-15);
  }
}

TEST(Algebra, ExponentialIsFourPiPeriodic) {
  Rng rng(13);
  for (int rep = 0; rep < 100; ++rep) {
    const Vec3 dir = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    const double t = rng.uniform(-5, 5);
    EXPECT_LT(max_abs(exp_su2(t * dir) - exp_su2((t + kFourPi) * dir)), 1e-12);
  }
}

TEST(Algebra, LogExamples) {
  const LogResult id = log_su2(GroupElement::identity());
  EXPECT_FALSE(id.ambiguous);
  EXPECT_LT(id.value.coeffs().norm(), 1e-15);

  const LogResult small = log_su2(exp_group(0.3 * AlgebraElement::u(1)));
  EXPECT_LT((small.value.coeffs() - (0.3 * AlgebraElement::u(1)).coeffs()).norm(), 1e-12);

  const LogResult minus = log_su2(GroupElement(-Mat2c::Identity(), Vec3::Zero()));
  EXPECT_TRUE(minus.ambiguous);
  EXPECT_LT((minus.value.coeffs() - (kTwoPi * AlgebraElement::u(2)).coeffs()).norm(), 1e-12);
}

TEST(Algebra, LogRoundTripOnRandomElements) {
  Rng rng(14);
  for (int rep = 0; rep < 1000; ++rep) {
    const Vec3 x(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-8, 8));
    const GroupElement g(exp_su2(x), Vec3(rng.normal(), rng.normal(), rng.normal()));
    const LogResult l = log_su2(g);
    ASSERT_FALSE(l.ambiguous);
    EXPECT_LE(l.value.su2().norm(), kTwoPi + 1e-12);
    EXPECT_LT(exp_group(l.value).distance_to(g), 1e-9);
  }
}

TEST(Algebra, ReferenceInnerProduct) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(g0_inner(AlgebraElement::u(i), AlgebraElement::u(j)), i == j ? 1.0 : 0.0, 1e-15);
      EXPECT_NEAR(g0_inner(AlgebraElement::u(i), AlgebraElement::e(j)), 0.0, 1e-15);
    }
  }
  const auto x = AlgebraElement::u(0) + AlgebraElement::e(0);
  EXPECT_NEAR(g0_inner(x, x), 2.0, 1e-15);

  Rng rng(15);
  for (int rep = 0; rep < 100; ++rep) {
    const AlgebraElement a(Vec3(rng.normal(), rng.normal(), rng.normal()), Vec3(rng.normal(), rng.normal(), rng.normal()));
    const AlgebraElement b(Vec3(rng.normal(), rng.normal(), rng.normal()), Vec3(rng.normal(), rng.normal(), rng.normal()));
    const double oracle = -2.0 * (su2_oracle(a.su2()) * su2_oracle(b.su2())).trace().real() + a.center().dot(b.center());
    EXPECT_NEAR(g0_inner(a, b), oracle, 1e-12);
    EXPECT_NEAR(g0_inner_trace(a, b), oracle, 1e-12);
    EXPECT_NEAR(g0_inner(a, b), g0_inner(b, a), 1e-15);
  }
}

TEST(Algebra, ReferenceDistance) {
  EXPECT_EQ(reference_distance(GroupElement::identity()), 0.0);
  for (double t : {0.1, 1.0, 2.5, kPi, 5.0, kTwoPi - 1e-6}) {
    EXPECT_NEAR(reference_distance(exp_group(t * AlgebraElement::u(0))), t, 1e-9);
  }
  EXPECT_NEAR(reference_distance(GroupElement(Mat2c::Identity(), Vec3(3, 4, 0))), 5.0, 1e-15);
}

TEST(Algebra, ProductsStayOnTheGroup) {
  Rng rng(16);
  GroupElement g;
  for (int rep = 0; rep < 10000; ++rep) {
    g = g * exp_group(AlgebraElement(Vec3(rng.normal(), rng.normal(), rng.normal()), Vec3::Zero()));
  }
  EXPECT_LE(g.manifold_defect(), 1e-12);
}

}  // namespace
}  // namespace su2vol
