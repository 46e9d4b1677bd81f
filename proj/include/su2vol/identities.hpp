#pragma once

// Residual suite for the closed-form group identities: commutator words,
// adjoint rotation, Rodrigues, the chart Jacobian and chart collisions.
// Deterministic grids plus seeded random points.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "su2vol/algebra.hpp"
#include "su2vol/frames.hpp"
#include "su2vol/metrics.hpp"
#include "su2vol/random.hpp"

namespace su2vol {

struct IdentityCheck {
  std::string name;
  double residual = 0.0;  // worst residual over the points
  double tolerance = 0.0;
  std::size_t points = 0;

  bool pass() const { return std::isfinite(residual) && residual <= tolerance; }
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;

  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const IdentityCheck& c) { return c.pass(); });
  }
  double max_residual() const {
    double worst = 0.0;
    for (const auto& c : checks) worst = std::max(worst, c.residual);
    return worst;
  }
};

struct IdentitySuiteOptions {
  double word_tolerance = 1e-10;      // commutator words, with u's and with v's
  double exact_tolerance = 1e-12;     // adjoint rotation, Rodrigues, Milnor relations
  double jacobian_tolerance = 1e-5;   // relative, against finite differences
  int grid = 50;                      // grid x grid over [-pi, pi] x [-pi/2, pi/2]
  std::size_t random_points = 1000;
  std::uint64_t seed = 20240601;
  std::vector<double> d_values{0.0, 0.5, 10.0};
};

namespace detail {

/// (s, t) pairs: the deterministic grid followed by seeded random points.
inline std::vector<std::pair<double, double>> word_points(const IdentitySuiteOptions& opt, std::uint64_t stream) {
  std::vector<std::pair<double, double>> pts;
  const int n = std::max(2, opt.grid);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      pts.emplace_back(-kPi + kTwoPi * i / (n - 1), -0.5 * kPi + kPi * j / (n - 1));
  Rng rng(derive_seed(opt.seed, stream));
  for (std::size_t k = 0; k < opt.random_points; ++k) {
    const double s = rng.uniform(-kPi, kPi);
    pts.emplace_back(s, rng.uniform(-0.5 * kPi, 0.5 * kPi));
  }
  return pts;
}

inline double word_residual(const std::array<AlgebraElement, 3>& x, const AlgebraElement& target, int i, double s,
                            double t) {
  const int j = (i + 1) % 3;
  const auto word = commutator_word(x[i], x[j], s, t);
  const GroupElement g = product_of_exponentials({word.begin(), word.end()});
  const double f = commutator_identity(s, t).f;
  return g.distance_to(GroupElement(exp_su2(f * target.su2()), Vec3::Zero()));
}

}  // namespace detail

inline IdentityReport run_identity_suite(const IdentitySuiteOptions& opt = {}) {
  IdentityReport report;

  {
    IdentityCheck c{"milnor_relations", 0.0, opt.exact_tolerance, 3};
    const Mat2c quarter = -0.25 * Mat2c::Identity();
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3;
      const int k = (i + 2) % 3;
      c.residual = std::max(c.residual, (pauli(i) * pauli(i) - quarter).cwiseAbs().maxCoeff());
      c.residual = std::max(c.residual, (pauli(i) * pauli(j) - 0.5 * pauli(k)).cwiseAbs().maxCoeff());
    }
    report.checks.push_back(c);
  }

  {
    IdentityCheck c{"commutator_word", 0.0, opt.word_tolerance, 0};
    const std::array<AlgebraElement, 3> u{AlgebraElement::u(0), AlgebraElement::u(1), AlgebraElement::u(2)};
    const auto pts = detail::word_points(opt, 1);
    for (int i = 0; i < 3; ++i) {
      for (const auto& [s, t] : pts) {
        c.residual = std::max(c.residual, detail::word_residual(u, u[(i + 2) % 3], i, s, t));
        ++c.points;
      }
    }
    report.checks.push_back(c);
  }

  for (std::size_t m = 0; m < opt.d_values.size(); ++m) {
    const double d = opt.d_values[m];
    char name[64];
    std::snprintf(name, sizeof name, "commutator_word_v_d=%g", d);
    IdentityCheck c{name, 0.0, opt.word_tolerance, 0};
    const DecoupledMetric metric = from_parameters(0.5, 1.0, 2.0, d);
    const auto pts = detail::word_points(opt, 10 + m);
    for (int i = 0; i < 3; ++i) {
      for (const auto& [s, t] : pts) {
        c.residual = std::max(c.residual, detail::word_residual(metric.v(), metric.u((i + 2) % 3), i, s, t));
        ++c.points;
      }
    }
    report.checks.push_back(c);
  }

  {
    IdentityCheck c{"adjoint_rotate", 0.0, opt.exact_tolerance, 0};
    Rng rng(derive_seed(opt.seed, 2));
    for (std::size_t k = 0; k < opt.random_points; ++k) {
      const int i = static_cast<int>(k % 3);
      const int j = (i + 1 + static_cast<int>((k / 3) % 2)) % 3;
      const double s = rng.uniform(-kFourPi, kFourPi);
      const AlgebraElement x = AlgebraElement::u(i);
      const AlgebraElement y = AlgebraElement::u(j);
      const Mat2c direct = exp_su2(-s * y.su2()) * x.matrix() * exp_su2(s * y.su2());
      c.residual = std::max(c.residual, (direct - adjoint_rotate(x, y, s).matrix()).cwiseAbs().maxCoeff());
      ++c.points;
    }
    report.checks.push_back(c);
  }

  {
    IdentityCheck c{"rodrigues", 0.0, opt.exact_tolerance, 0};
    Rng rng(derive_seed(opt.seed, 3));
    for (std::size_t k = 0; k < opt.random_points; ++k) {
      const Vec3 x(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
      c.residual = std::max(c.residual, (exp_su2(x) - exp_series(su2_matrix(x))).cwiseAbs().maxCoeff());
      ++c.points;
    }
    report.checks.push_back(c);
  }

  {
    IdentityCheck c{"chart_jacobian", 0.0, opt.jacobian_tolerance, 0};
    Rng rng(derive_seed(opt.seed, 4));
    for (std::size_t k = 0; k < opt.random_points; ++k) {
      Coordinates p;
      p.x = Vec3(rng.uniform(-kTwoPi, kTwoPi), rng.uniform(-0.5 * kPi + 0.1, 0.5 * kPi - 0.1),
                 rng.uniform(-kPi, kPi));
      const double exact = jacobian(p.x(1));
      c.residual = std::max(c.residual, std::abs(jacobian_fd(p) - exact) / exact);
      ++c.points;
    }
    report.checks.push_back(c);
  }

  {
    // Misclassified pairs plus the largest image mismatch of pairs declared equal.
    IdentityCheck c{"chart_collisions", 0.0, opt.word_tolerance, 0};
    Rng rng(derive_seed(opt.seed, 5));
    for (std::size_t k = 0; k < opt.random_points; ++k) {
      Coordinates p;
      p.x = Vec3(rng.uniform(-kTwoPi, kTwoPi), rng.uniform(-0.5 * kPi + 0.01, 0.5 * kPi - 0.01),
                 rng.uniform(-kPi, kPi));
      Coordinates lattice = p;
      lattice.x += Vec3(kTwoPi, kTwoPi, 0.0);
      Coordinates flip = p;
      flip.x = Vec3(p.x(0) + kPi, kPi - p.x(1), p.x(2) + kPi);
      Coordinates odd = p;
      odd.x(0) += kTwoPi;
      if (psi_collision_classify(p, lattice) != CollisionKind::Lattice) c.residual = std::max(c.residual, 1.0);
      if (psi_collision_classify(p, flip) != CollisionKind::HalfPiBranch) c.residual = std::max(c.residual, 1.0);
      if (psi_collision_classify(p, odd) != CollisionKind::Distinct) c.residual = std::max(c.residual, 1.0);
      c.residual = std::max(c.residual, psi(p).distance_to(psi(lattice)));
      c.residual = std::max(c.residual, psi(p).distance_to(psi(flip)));
      c.points += 3;
    }
    report.checks.push_back(c);
  }

  return report;
}

}  // namespace su2vol
