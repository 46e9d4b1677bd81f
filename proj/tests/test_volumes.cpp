#include <gtest/gtest.h>

#include "support.hpp"

namespace su2vol {
namespace {

using testing::planar_hexagon_area;
using testing::wrapped_area_quadrature;

Hexagon random_hexagon(Rng& rng) {
  auto scale = [&] { return std::exp(rng.uniform(std::log(1e-3), std::log(20.0))); };
  return Hexagon{scale(), scale(), scale(), rng.uniform() < 0.2 ? 0.0 : scale()};
}

/// Overlap of the wrapped interval [lo, hi] with [-iota, iota] on the 4 pi circle.
double wrapped_overlap_oracle(double lo, double hi, double iota) {
  if (hi < lo) return 0.0;
  if (hi - lo >= kFourPi) return 2.0 * iota;
  double acc = 0.0;
  for (int k = -4; k <= 4; ++k) {
    acc += std::max(0.0, std::min(hi + k * kFourPi, iota) - std::max(lo + k * kFourPi, -iota));
  }
  return acc;
}

double truncated_area_quadrature(const Hexagon& h, double iota, int n = 200000) {
  const double top = h.d * h.nu_star + h.xi_star;
  const double dy = 2.0 * top / n;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double y = -top + (k + 0.5) * dy;
    double lo = -h.nu_star;
    double hi = h.nu_star;
    if (h.d > 0.0) {
      lo = std::max(lo, (y - h.xi_star) / h.d);
      hi = std::min(hi, (y + h.xi_star) / h.d);
    }
    acc += wrapped_overlap_oracle(lo - h.mu_star, hi + h.mu_star, iota);
  }
  return acc * dy;
}

TEST(Hexagon, AreaExamples) {
  EXPECT_NEAR(hexagon_area(Hexagon{1, 1, 1, 0}), 8.0, 1e-12);
  EXPECT_NEAR(hexagon_area(Hexagon{kFourPi, kFourPi, 1, 0}), 2.0 * kFourPi, 1e-12);
  EXPECT_NEAR(hexagon_area(Hexagon{0, 0, 1, 3}), 0.0, 1e-15);
}

TEST(Hexagon, AreaMatchesPlanarFormulaWhenUnwrapped) {
  Rng rng(41);
  for (int rep = 0; rep < 2000; ++rep) {
    const Hexagon h{rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 5), rng.uniform(0, 10)};
    EXPECT_NEAR(hexagon_area(h), planar_hexagon_area(h), 1e-12 * (1.0 + planar_hexagon_area(h)));
  }
}

TEST(Hexagon, AreaMatchesQuadratureWhenWrapped) {
  Rng rng(42);
  for (int rep = 0; rep < 60; ++rep) {
    const Hexagon h = random_hexagon(rng);
    const double exact = hexagon_area(h);
    EXPECT_NEAR(exact, wrapped_area_quadrature(h), 1e-6 * exact + 1e-12);
  }
}

TEST(Hexagon, SectionWidthMatchesOracle) {
  Rng rng(43);
  for (int rep = 0; rep < 200; ++rep) {
    const Hexagon h = random_hexagon(rng);
    const double y = rng.uniform(-1.2, 1.2) * h.half_height();
    EXPECT_NEAR(std::min(h.width(y), kFourPi), testing::width_oracle(h, y), 1e-12 * (1.0 + h.width(y)));
  }
}

TEST(Hexagon, AreaIsMonotoneInEachArgument) {
  Rng rng(44);
  for (int rep = 0; rep < 500; ++rep) {
    const Hexagon h = random_hexagon(rng);
    const double base = hexagon_area(h);
    const double f = rng.uniform(1.0, 3.0);
    for (int k = 0; k < 4; ++k) {
      Hexagon g = h;
      double* fields[4] = {&g.mu_star, &g.nu_star, &g.xi_star, &g.d};
      *fields[k] *= f;
      EXPECT_GE(hexagon_area(g), base * (1.0 - 1e-12));
    }
  }
}

TEST(Hexagon, AreaRespectsWrapBound) {
  Rng rng(45);
  for (int rep = 0; rep < 2000; ++rep) {
    const Hexagon h = random_hexagon(rng);
    const double bound = std::min(planar_hexagon_area(h), 8.0 * kPi * h.half_height());
    EXPECT_LE(hexagon_area(h), bound * (1.0 + 1e-12));
  }
}

TEST(Hexagon, TruncatedAreaMatchesQuadrature) {
  Rng rng(46);
  for (double iota : {kPi / 4, kPi / 3, 0.1}) {
    for (int rep = 0; rep < 20; ++rep) {
      const Hexagon h = random_hexagon(rng);
      const double exact = hexagon_iota_area(h, iota);
      EXPECT_NEAR(exact, truncated_area_quadrature(h, iota), 1e-6 * exact + 1e-12);
      EXPECT_LE(exact, hexagon_area(h) * (1.0 + 1e-12));
    }
  }
}

TEST(Hexagon, EstimatorExamples) {
  EXPECT_DOUBLE_EQ(vbar_H(Hexagon{1, 1, 1, 0}), 1.0);
  for (double nu : {0.5, 2.0})
    for (double xi : {0.1, 3.0})
      for (double d : {0.0, 1.0, 7.0}) EXPECT_DOUBLE_EQ(vbar_H(Hexagon{0, nu, xi, d}), std::min(nu * xi, d * nu + xi));
}

TEST(Hexagon, AreaToEstimatorRatioIsBounded) {
  Rng rng(47);
  double lo = INFINITY;
  double hi = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const Hexagon h = random_hexagon(rng);
    const double ratio = hexagon_area(h) / vbar_H(h);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_TRUE(std::isfinite(hi));
}

TEST(Estimator, MRhoExamples) {
  const MRho a = m_rho(EstimatorInputs{1.0, Parameters{{1, 2, 4}, 0}, 0.1});
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(a.m(i), 0.1, 1e-15);
    EXPECT_NEAR(a.rho(i), 0.012, 1e-15);
  }
  const double r = 1e-4;
  const Parameters p{{1, 2, 4}, 0};
  const MRho b = m_rho(EstimatorInputs{r, p, 0.1});
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(b.m(i), r / p.a[i]);
    const double lead = r * r / (p.a[(i + 1) % 3] * p.a[(i + 2) % 3]);
    EXPECT_NEAR(b.rho(i) / lead, 1.0, 1e-3);
  }
  const MRho c = m_rho(EstimatorInputs{3.0, p, 1e300});
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(c.m(i), 3.0 / p.a[i]);
}

TEST(Estimator, VbarMatchesFormula) {
  Rng rng(48);
  for (int rep = 0; rep < 2000; ++rep) {
    std::array<double, 3> a{std::exp(rng.uniform(-5, 5)), std::exp(rng.uniform(-5, 5)), std::exp(rng.uniform(-5, 5))};
    std::sort(a.begin(), a.end());
    const double d = rng.uniform() < 0.2 ? 0.0 : std::exp(rng.uniform(-5, 9));
    const double r = std::exp(rng.uniform(-5, 5));
    const double eta = 0.1;
    double m[3];
    for (int i = 0; i < 3; ++i) m[i] = std::min(r / a[i], eta);
    double expect = 1.0;
    for (int i = 0; i < 3; ++i) {
      const double mj = m[(i + 1) % 3];
      const double mk = m[(i + 2) % 3];
      const double rho = mj * mk + m[i] * mj * mj + m[i] * mk * mk;
      expect *= std::min(d * rho * r / a[i] + rho * r + r * r / a[i], d * r / a[i] + r);
    }
    EXPECT_NEAR(vbar_g(EstimatorInputs{r, Parameters{a, d}, eta}) / expect, 1.0, 1e-13);
  }
}

TEST(Estimator, VbarLimits) {
  for (double r : {1e-3, 1e-4}) {
    EXPECT_NEAR(vbar_g(EstimatorInputs{r, Parameters{{1, 1, 1}, 0}, 0.1}) / std::pow(r, 6), 1.0, 10 * r);
  }
  const double eta = 0.1;
  const Parameters p{{0.5, 1, 2}, 0};
  for (double r : {0.2, 1.0, 10.0}) {
    const EstimatorInputs in{r, p, eta};
    const MRho mr = m_rho(in);
    const Vec3 f = vbar_g_factors(in);
    for (int i = 0; i < 3; ++i) {
      EXPECT_GE(mr.rho(i), eta * eta);
      EXPECT_NEAR(f(i), std::min(mr.rho(i) * r + r * r / p.a[i], r), 1e-15 * r * r);
    }
  }
}

TEST(Estimator, RejectsInvalidInputs) {
  EXPECT_THROW(vbar_g(EstimatorInputs{-1.0, Parameters{}, 0.1}), Error);
  EXPECT_THROW(vbar_g(EstimatorInputs{1.0, Parameters{{2, 1, 1}, 0}, 0.1}), Error);
}

TEST(Estimator, DoublingRatioWithinCalculusBound) {
  Rng rng(49);
  for (int rep = 0; rep < 20000; ++rep) {
    std::array<double, 3> a{std::exp(rng.uniform(-6, 6)), std::exp(rng.uniform(-6, 6)), std::exp(rng.uniform(-6, 6))};
    std::sort(a.begin(), a.end());
    const Parameters p{a, rng.uniform() < 0.2 ? 0.0 : std::exp(rng.uniform(-6, 10))};
    const double eta = std::exp(rng.uniform(std::log(0.01), std::log(0.5)));
    const double r = std::exp(rng.uniform(-8, 8));
    const double ratio = vbar_g(EstimatorInputs{2 * r, p, eta}) / vbar_g(EstimatorInputs{r, p, eta});
    ASSERT_LE(ratio, vbar_g_doubling_bound(p, eta));
  }
}

TEST(Estimator, EstimatorTreeEvaluatesToVbar) {
  Rng rng(50);
  for (int rep = 0; rep < 200; ++rep) {
    std::array<double, 3> a{std::exp(rng.uniform(-3, 3)), std::exp(rng.uniform(-3, 3)), std::exp(rng.uniform(-3, 3))};
    std::sort(a.begin(), a.end());
    const Parameters p{a, std::exp(rng.uniform(-3, 5))};
    const double r = std::exp(rng.uniform(-4, 4));
    EXPECT_NEAR(vbar_g_tree(p).eval(r) / vbar_g(EstimatorInputs{r, p, kDefaultEta}), 1.0, 1e-12);
  }
}

TEST(Containment, LinearUpperExamples) {
  const Vec3 flat = linear_upper(EstimatorInputs{0.3, Parameters{{1, 2, 3}, 0}, 0.1});
  EXPECT_LE((flat - Vec3(0.3, 0.3, 0.3)).norm(), 1e-15);
  const Vec3 tilted = linear_upper(EstimatorInputs{2.0, Parameters{{1, 1, 1}, 1}, 0.1});
  EXPECT_LE((tilted - Vec3(4, 4, 4)).norm(), 1e-15);
}

TEST(Containment, OuterRegimeGate) {
  const Parameters p{{1, 2, 3}, 0.5};
  const double eta = 0.1;
  EXPECT_NO_THROW(containment_sets(EstimatorInputs{eta * p.a[1], p, eta}, ContainmentSide::Outer));
  try {
    containment_sets(EstimatorInputs{eta * p.a[1] * (1 + 1e-9), p, eta}, ContainmentSide::Outer);
    FAIL() << "expected OutOfRegime";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutOfRegime);
  }
}

TEST(Containment, SetsFollowTheEstimatorGeometry) {
  const EstimatorInputs in{0.05, Parameters{{1, 2, 3}, 4}, 0.1};
  const MRho mr = m_rho(in);
  const ContainmentSet inner = containment_sets(in, ContainmentSide::Inner);
  const ContainmentSet outer = containment_sets(in, ContainmentSide::Outer, 8.0);
  EXPECT_TRUE(inner.iota_truncated);
  EXPECT_FALSE(outer.iota_truncated);
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(inner.factors[i].mu_star, mr.rho(i));
    EXPECT_DOUBLE_EQ(outer.factors[i].mu_star, 8.0 * mr.rho(i));
    EXPECT_DOUBLE_EQ(inner.factors[i].nu_star, in.r / in.params.a[i]);
    EXPECT_DOUBLE_EQ(inner.factors[i].xi_star, in.r);
    EXPECT_DOUBLE_EQ(inner.factors[i].d, 4.0);
  }
  EXPECT_LE(inner.chart_measure(), outer.chart_measure());
}

TEST(Containment, InnerMeasureComparableToEstimator) {
  Rng rng(51);
  double lo = INFINITY;
  double hi = 0.0;
  double trunc_lo = INFINITY;
  for (int rep = 0; rep < 3000; ++rep) {
    std::array<double, 3> a{std::exp(rng.uniform(-4, 4)), std::exp(rng.uniform(-4, 4)), std::exp(rng.uniform(-4, 4))};
    std::sort(a.begin(), a.end());
    const EstimatorInputs in{std::exp(rng.uniform(-5, 5)), Parameters{a, std::exp(rng.uniform(-4, 8))}, 0.1};
    const ContainmentSet k = containment_sets(in, ContainmentSide::Inner);
    const double ratio = k.chart_measure() / k.vbar_product();
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    for (const auto& h : k.factors) trunc_lo = std::min(trunc_lo, hexagon_iota_area(h, k.iota) / hexagon_area(h));
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_TRUE(std::isfinite(hi));
  EXPECT_GT(trunc_lo, 0.0);
}

TEST(Doubling, CombinatorExamples) {
  using E = DoublingExpr;
  const E r = E::variable();
  EXPECT_DOUBLE_EQ(E::sum({r, E::sum({r, E::constant(1)})}).bound(), 2.0);
  EXPECT_DOUBLE_EQ(E::sum({r, E::product({r, r})}).bound(), 4.0);
  EXPECT_DOUBLE_EQ(E::product({r, r, r}).bound(), 8.0);
  EXPECT_DOUBLE_EQ(E::min({r, E::constant(3)}).bound(), 2.0);
  EXPECT_DOUBLE_EQ(E::couple({r, E::product({r, r})}).bound(), 4.0);
  EXPECT_DOUBLE_EQ(E::comparable(r, 0.5, 2.0).bound(), 8.0);
  EXPECT_DOUBLE_EQ(E::product_metric(E::constant(3), E::constant(5)).bound(), 1.0);
  const E b = E::product({r, r});
  EXPECT_DOUBLE_EQ(E::product_metric(b, r).bound(), 16.0 * 4.0);
  EXPECT_DOUBLE_EQ(E::reduction(1, b).bound(), std::pow(2.0 * 4.0, 4));
  EXPECT_DOUBLE_EQ(E::compose(E::product({r, r}), E::product({r, r, r})).bound(), 64.0);
}

TEST(Doubling, BoundsHoldPointwise) {
  using E = DoublingExpr;
  const E r = E::variable();
  const std::vector<E> exprs{E::sum({r, E::product({r, r})}), E::min({E::product({r, r, r}), E::constant(2.0)}),
                             E::max({r, E::product({E::constant(0.1), r, r})}),
                             E::compose(E::sum({r, E::constant(1)}), E::product({r, r}))};
  Rng rng(52);
  for (const auto& e : exprs) {
    const double bound = e.bound();
    for (int rep = 0; rep < 2000; ++rep) {
      const double x = std::exp(rng.uniform(-10, 10));
      EXPECT_LE(e.eval(2 * x), bound * e.eval(x) * (1 + 1e-12));
    }
  }
}

TEST(Doubling, MalformedTreesAreRejected) {
  using E = DoublingExpr;
  try {
    E::sum({}).bound();
    FAIL() << "expected MalformedTree";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MalformedTree);
  }
  EXPECT_THROW(E::comparable(E::variable(), 2.0, 1.0).bound(), Error);
  EXPECT_THROW(E::reduction(-1, E::variable()).bound(), Error);
}

}  // namespace
}  // namespace su2vol
