#pragma once

// Arithmetic in su(2) (+) R^3 and on SU(2) x R^3.
//
// Algebra elements are stored as six coefficients in the reference basis
// (u1, u2, u3 | e1, e2, e3), where u_i are the half-Pauli matrices
//
//   u1 = 1/2 [[0, -i], [-i, 0]],  u2 = 1/2 [[0, -1], [1, 0]],  u3 = 1/2 [[-i, 0], [0, i]],
//
// which satisfy [u1, u2] = u3 cyclically and are orthonormal for the
// bi-invariant form <u, u'> = -2 tr(u u') + <f, f'>.

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "su2vol/errors.hpp"

namespace su2vol {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat2c = Eigen::Matrix2cd;
using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;

/// Half-Pauli matrix u_i, i in {0, 1, 2}.
inline Mat2c pauli(int i) {
  const cplx I(0.0, 1.0);
  Mat2c m;
  switch (i) {
    case 0: m << 0.0, -I, -I, 0.0; break;
    case 1: m << 0.0, -1.0, 1.0, 0.0; break;
    default: m << -I, 0.0, 0.0, I; break;
  }
  return 0.5 * m;
}

/// Matrix of x1 u1 + x2 u2 + x3 u3.
inline Mat2c su2_matrix(const Vec3& x) {
  const cplx I(0.0, 1.0);
  Mat2c m;
  m << -I * x(2), -I * x(0) - x(1),
       -I * x(0) + x(1), I * x(2);
  return 0.5 * m;
}

/// Pauli coefficients of a matrix in su(2); the Hermitian/trace parts are discarded.
inline Vec3 su2_coefficients(const Mat2c& m) {
  Vec3 x;
  for (int i = 0; i < 3; ++i) x(i) = -2.0 * (m * pauli(i)).trace().real();
  return x;
}

class AlgebraElement {
 public:
  AlgebraElement() : c_(Vec6::Zero()) {}
  explicit AlgebraElement(const Vec6& coeffs) : c_(coeffs) {}
  AlgebraElement(const Vec3& su2_part, const Vec3& center_part) {
    c_ << su2_part, center_part;
  }

  static AlgebraElement u(int i, double scale = 1.0) {
    Vec6 c = Vec6::Zero();
    c(i) = scale;
    return AlgebraElement(c);
  }
  static AlgebraElement e(int i, double scale = 1.0) {
    Vec6 c = Vec6::Zero();
    c(3 + i) = scale;
    return AlgebraElement(c);
  }

  const Vec6& coeffs() const { return c_; }
  Vec3 su2() const { return c_.head<3>(); }
  Vec3 center() const { return c_.tail<3>(); }
  Mat2c matrix() const { return su2_matrix(su2()); }
  double operator[](int i) const { return c_(i); }

  bool is_finite() const { return c_.allFinite(); }

  friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
    return AlgebraElement(Vec6(a.c_ + b.c_));
  }
  friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
    return AlgebraElement(Vec6(a.c_ - b.c_));
  }
  friend AlgebraElement operator-(const AlgebraElement& a) { return AlgebraElement(Vec6(-a.c_)); }
  friend AlgebraElement operator*(double s, const AlgebraElement& a) {
    return AlgebraElement(Vec6(s * a.c_));
  }
  friend AlgebraElement operator*(const AlgebraElement& a, double s) { return s * a; }

 private:
  Vec6 c_;
};

/// Lie bracket. In Pauli coordinates the su(2) bracket is the cross product;
/// the R^3 summand is central.
inline AlgebraElement bracket(const AlgebraElement& a, const AlgebraElement& b) {
  return AlgebraElement(a.su2().cross(b.su2()), Vec3::Zero());
}

/// Bi-invariant reference inner product g0.
inline double g0_inner(const AlgebraElement& a, const AlgebraElement& b) {
  return a.coeffs().dot(b.coeffs());
}

/// g0 evaluated literally through the trace formula; used to cross-check g0_inner.
inline double g0_inner_trace(const AlgebraElement& a, const AlgebraElement& b) {
  return -2.0 * (a.matrix() * b.matrix()).trace().real() + a.center().dot(b.center());
}

/// A point of SU(2) x R^3. Products renormalize the SU(2) factor every
/// kRenormEvery multiplications to keep it unitary with unit determinant.
class GroupElement {
 public:
  static constexpr int kRenormEvery = 64;

  GroupElement() : su2_(Mat2c::Identity()), vec_(Vec3::Zero()) {}
  GroupElement(const Mat2c& su2, const Vec3& vec) : su2_(su2), vec_(vec) {}

  static GroupElement identity() { return {}; }

  const Mat2c& su2() const { return su2_; }
  const Vec3& vec() const { return vec_; }

  GroupElement inverse() const { return GroupElement(su2_.adjoint(), -vec_, drift_); }

  /// Projects the SU(2) factor onto the closest matrix of the form
  /// [[a, -conj(b)], [b, conj(a)]] with |a|^2 + |b|^2 = 1.
  GroupElement renormalized() const {
    cplx a = 0.5 * (su2_(0, 0) + std::conj(su2_(1, 1)));
    cplx b = 0.5 * (su2_(1, 0) - std::conj(su2_(0, 1)));
    const double n = std::sqrt(std::norm(a) + std::norm(b));
    a /= n;
    b /= n;
    Mat2c m;
    m << a, -std::conj(b), b, std::conj(a);
    return GroupElement(m, vec_);
  }

  /// Distance of the SU(2) factor from the unitary, determinant-one manifold.
  double manifold_defect() const {
    const double unit = (su2_.adjoint() * su2_ - Mat2c::Identity()).norm();
    const double det = std::abs(su2_.determinant() - cplx(1.0, 0.0));
    return std::max(unit, det);
  }

  friend GroupElement operator*(const GroupElement& g, const GroupElement& h) {
    GroupElement out(g.su2_ * h.su2_, g.vec_ + h.vec_, std::max(g.drift_, h.drift_) + 1);
    if (out.drift_ >= kRenormEvery) out = out.renormalized();
    return out;
  }

  /// Max-abs difference in both factors.
  double distance_to(const GroupElement& other) const {
    return std::max((su2_ - other.su2_).cwiseAbs().maxCoeff(),
                    (vec_ - other.vec_).cwiseAbs().maxCoeff());
  }

 private:
  GroupElement(const Mat2c& su2, const Vec3& vec, int drift) : su2_(su2), vec_(vec), drift_(drift) {}

  Mat2c su2_;
  Vec3 vec_;
  int drift_ = 0;
};

/// sin(x)/x, continuous at 0.
inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

/// Rodrigues: exp(A) = cos(rho) I + sin(rho)/rho A with rho = |x| / 2.
inline Mat2c exp_su2(const Vec3& x) {
  const double rho = 0.5 * x.norm();
  return std::cos(rho) * Mat2c::Identity() + sinc(rho) * su2_matrix(x);
}

inline GroupElement exp_group(const AlgebraElement& a) {
  return GroupElement(exp_su2(a.su2()), a.center());
}

struct LogResult {
  AlgebraElement value;
  bool ambiguous = false;  // su2 == -I: direction undefined, value is 2*pi*u3
};

namespace detail {

struct SU2Polar {
  double rho;   // rotation half-angle in [0, pi]
  Vec3 w;       // Pauli coefficients of (U - U^*) / 2, equal to sin(rho)/rho * x
};

inline SU2Polar su2_polar(const Mat2c& u) {
  const Mat2c skew = 0.5 * (u - u.adjoint());
  const Vec3 w = su2_coefficients(skew);
  const double c = 0.5 * u.trace().real();
  return {std::atan2(0.5 * w.norm(), c), w};
}

}  // namespace detail

/// Principal logarithm of the SU(2) factor: g0-norm in [0, 2*pi], tie at -I
/// broken toward u3 (and flagged).
inline LogResult log_su2(const GroupElement& g) {
  if (g.manifold_defect() > 1e-9) {
    throw Error(ErrorKind::NotOnGroup, "log_su2: SU(2) factor is not unitary with det 1");
  }
  const auto [rho, w] = detail::su2_polar(g.su2());
  const double wn = w.norm();
  if (wn <= 1e-15) {
    if (rho > 0.5 * kPi) {
      return {AlgebraElement(Vec3(0.0, 0.0, kTwoPi), g.vec()), true};
    }
    return {AlgebraElement(Vec3::Zero(), g.vec()), false};
  }
  return {AlgebraElement(Vec3(w * (2.0 * rho / wn)), g.vec()), false};
}

/// g0-norm of the principal log of an SU(2) matrix, in [0, 2*pi].
inline double su2_angle(const Mat2c& u) { return 2.0 * detail::su2_polar(u).rho; }

/// Geodesic distance from the identity for the bi-invariant product metric g0.
inline double reference_distance(const GroupElement& g) {
  const double theta = su2_angle(g.su2());
  return std::sqrt(theta * theta + g.vec().squaredNorm());
}

/// 20-term power series of exp(A) with scaling and squaring (the plain series
/// does not converge to 1e-12 for |A| near 10); oracle for Rodrigues.
inline Mat2c exp_series(const Mat2c& a, int terms = 20) {
  int squarings = 0;
  double norm = a.norm();
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const Mat2c scaled = a / std::ldexp(1.0, squarings);
  Mat2c sum = Mat2c::Identity();
  Mat2c term = Mat2c::Identity();
  for (int k = 1; k < terms; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

}  // namespace su2vol
