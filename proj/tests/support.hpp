#pragma once

// Oracles shared by the unit tests. They avoid the library's own numerics:
// matrix exponentials come from Eigen's MatrixFunctions module.

#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "su2vol/su2vol.hpp"

namespace su2vol::testing {

/// Pauli-basis element written out by hand: u_k = -(i/2) sigma_k.
inline Mat2c pauli_oracle(int k) {
  using c = std::complex<double>;
  const c I(0.0, 1.0);
  Mat2c s;
  if (k == 0) s << 0, 1, 1, 0;
  if (k == 1) s << 0, -I, I, 0;
  if (k == 2) s << 1, 0, 0, -1;
  return -0.5 * I * s;
}

inline Mat2c su2_oracle(const Vec3& x) {
  return x(0) * pauli_oracle(0) + x(1) * pauli_oracle(1) + x(2) * pauli_oracle(2);
}

inline Mat2c expm(const Mat2c& a) { return a.exp(); }

/// Psi computed with Eigen's exponential.
inline Mat2c psi_oracle(const Vec3& x) {
  return expm(x(2) * pauli_oracle(2)) * expm(x(1) * pauli_oracle(1)) * expm(x(0) * pauli_oracle(0));
}

/// Coefficients in the Pauli basis; g0 is -2 tr(ab), so u_k are g0-orthonormal.
inline Vec3 pauli_coefficients_oracle(const Mat2c& m) {
  Vec3 out;
  for (int k = 0; k < 3; ++k) out(k) = -2.0 * (m * pauli_oracle(k)).trace().real();
  return out;
}

/// Random SPD matrix with condition number at most about `spread`^2.
inline MatX random_spd(int dim, Rng& rng, double spread = 4.0) {
  MatX q = MatX::Zero(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) q(i, j) = rng.normal();
  Eigen::HouseholderQR<MatX> qr(q);
  const MatX orth = qr.householderQ();
  VecX eig(dim);
  for (int i = 0; i < dim; ++i) eig(i) = std::exp(rng.uniform(-std::log(spread), std::log(spread)));
  MatX g = orth * eig.asDiagonal() * orth.transpose();
  return 0.5 * (g + g.transpose());
}

/// Exact area of the planar (unwrapped) hexagon: parallelogram plus the sweep of a segment.
inline double planar_hexagon_area(const Hexagon& h) {
  return 4.0 * h.nu_star * h.xi_star + 4.0 * h.mu_star * (h.d * h.nu_star + h.xi_star);
}

/// Cross-section width by brute reasoning on nu: |nu| <= nu*, |y - d nu| <= xi*.
inline double width_oracle(const Hexagon& h, double y) {
  double lo = -h.nu_star;
  double hi = h.nu_star;
  if (h.d > 0.0) {
    lo = std::max(lo, (y - h.xi_star) / h.d);
    hi = std::min(hi, (y + h.xi_star) / h.d);
  } else if (std::abs(y) > h.xi_star) {
    return 0.0;
  }
  if (hi < lo) return 0.0;
  return std::min(hi - lo + 2.0 * h.mu_star, kFourPi);
}

/// Midpoint rule on a fine grid; the integrand is piecewise linear.
inline double wrapped_area_quadrature(const Hexagon& h, int n = 200000) {
  const double top = h.d * h.nu_star + h.xi_star;
  const double dy = 2.0 * top / n;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) acc += width_oracle(h, -top + (k + 0.5) * dy);
  return acc * dy;
}

}  // namespace su2vol::testing
