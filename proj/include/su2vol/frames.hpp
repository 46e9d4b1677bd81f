#pragma once

// Coordinates of the second kind, the Maurer-Cartan ODE in those
// coordinates, and closed-form conjugation and commutator identities.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "su2vol/algebra.hpp"
#include "su2vol/metrics.hpp"

namespace su2vol {

/// Reduces an angle into (-2*pi, 2*pi].
inline double wrap_4pi(double x) {
  double r = std::fmod(x, kFourPi);
  if (r <= -kTwoPi) r += kFourPi;
  if (r > kTwoPi) r -= kFourPi;
  return r;
}

struct Coordinates {
  Vec3 x = Vec3::Zero();
  Vec3 y = Vec3::Zero();

  Coordinates normalized() const {
    Coordinates c = *this;
    for (int i = 0; i < 3; ++i) c.x(i) = wrap_4pi(c.x(i));
    return c;
  }
};

/// e^{x3 u3} e^{x2 u2} e^{x1 u1} paired with the translation y.
inline GroupElement psi(const Coordinates& c) {
  const Mat2c m = exp_su2(Vec3(0, 0, c.x(2))) * exp_su2(Vec3(0, c.x(1), 0)) * exp_su2(Vec3(c.x(0), 0, 0));
  return GroupElement(m, c.y);
}

/// Same chart built from the Milnor frame u_i and the central frame f_i of m.
inline GroupElement psi_in(const DecoupledMetric& m, const Coordinates& c) {
  Mat2c prod = Mat2c::Identity();
  for (int i = 2; i >= 0; --i) prod = prod * exp_su2(c.x(i) * m.u(i).su2());
  Vec3 t = Vec3::Zero();
  for (int i = 0; i < 3; ++i) t += c.y(i) * m.f()[i].center();
  return GroupElement(prod, t);
}

/// Density of mu_0 in the chart: |cos x2|.
inline double jacobian(double x2) { return std::abs(std::cos(x2)); }

/// |det| of the left-logarithmic derivative of the chart, by central differences.
inline double jacobian_fd(const Coordinates& c, double h = 1e-5) {
  const Mat2c base_inv = psi(c).su2().adjoint();
  Mat3 frame;
  for (int i = 0; i < 3; ++i) {
    Coordinates plus = c;
    Coordinates minus = c;
    plus.x(i) += h;
    minus.x(i) -= h;
    const Mat2c deriv = (psi(plus).su2() - psi(minus).su2()) / (2.0 * h);
    frame.col(i) = su2_coefficients(base_inv * deriv);
  }
  return std::abs(frame.determinant());
}

// ---------------------------------------------------------------------------
// Collisions of the chart

enum class CollisionKind { Lattice, HalfPiBranch, Distinct };

inline const char* to_string(CollisionKind k) {
  switch (k) {
    case CollisionKind::Lattice: return "Lattice";
    case CollisionKind::HalfPiBranch: return "HalfPiBranch";
    case CollisionKind::Distinct: return "Distinct";
  }
  return "Unknown";
}

namespace detail {

/// True if delta is a 2*pi-lattice vector with an even number of shifts.
inline bool even_lattice_shift(const Vec3& delta, double tol) {
  long parity = 0;
  for (int i = 0; i < 3; ++i) {
    const double k = std::round(delta(i) / kTwoPi);
    if (std::abs(delta(i) - k * kTwoPi) > tol) return false;
    parity += static_cast<long>(k);
  }
  return parity % 2 == 0;
}

}  // namespace detail

/// Lattice: the x parts differ by 2*pi shifts, even in number (an odd count
/// negates the SU(2) factor). HalfPiBranch: the Euler flip
/// (x1 + pi, pi - x2, x3 + pi) up to the same lattice, or both points on one
/// gimbal line x2 = +-pi/2 with the same image. Distinct otherwise.
inline CollisionKind psi_collision_classify(const Coordinates& c1, const Coordinates& c2, double tol = 1e-9) {
  if ((c1.y - c2.y).cwiseAbs().maxCoeff() > tol) return CollisionKind::Distinct;
  if (detail::even_lattice_shift(c2.x - c1.x, tol)) return CollisionKind::Lattice;
  const Vec3 flipped(c1.x(0) + kPi, kPi - c1.x(1), c1.x(2) + kPi);
  if (detail::even_lattice_shift(c2.x - flipped, tol)) return CollisionKind::HalfPiBranch;
  const bool gimbal1 = std::abs(std::cos(c1.x(1))) <= tol;
  const bool gimbal2 = std::abs(std::cos(c2.x(1))) <= tol;
  if (gimbal1 && gimbal2 && psi(c1).distance_to(psi(c2)) <= tol) return CollisionKind::HalfPiBranch;
  return CollisionKind::Distinct;
}

// ---------------------------------------------------------------------------
// Closed-form identities

/// e^{-sY} X e^{sY} for X, Y in one standard Milnor triple.
inline AlgebraElement adjoint_rotate(const AlgebraElement& x, const AlgebraElement& y, double s) {
  return std::cos(s) * x + std::sin(s) * bracket(x, y);
}

struct CommutatorCoefficients {
  double f = 0.0;    // signed, |f| = 2 arccos(cos^2(s/2) + sin^2(s/2) cos t)
  double tau = 0.0;  // |tau| <= |t| / 2
};

/// Coefficients for which
///   e^{-tau u2} e^{s u1/2} e^{t u2} e^{-s u1} e^{-t u2} e^{s u1/2} e^{tau u2} = e^{f u3}.
/// The sign of f follows sin(s/2) sin(t).
inline CommutatorCoefficients commutator_identity(double s, double t) {
  CommutatorCoefficients out;
  const double z = std::min(1.0, std::abs(std::sin(0.5 * s) * std::sin(0.5 * t)));
  const double sign = (std::sin(0.5 * s) * std::sin(t) < 0.0) ? -1.0 : 1.0;
  out.f = sign * 4.0 * std::asin(z);
  const double ct = std::cos(0.5 * t);
  out.tau = ct > 0.0 ? std::atan2(std::cos(0.5 * s) * std::sin(0.5 * t), ct)
                     : std::atan(std::cos(0.5 * s) * std::tan(0.5 * t));
  out.tau = std::clamp(out.tau, -0.5 * std::abs(t), 0.5 * std::abs(t));  // rounding at |cos(s/2)| = 1
  return out;
}

/// The seven exponents of the commutator word producing a multiple of e_k,
/// where (i, j, k) is cyclic; first factor leftmost.
inline std::array<AlgebraElement, 7> commutator_word(const AlgebraElement& ui, const AlgebraElement& uj, double s,
                                                     double t) {
  const double tau = commutator_identity(s, t).tau;
  return {-tau * uj, 0.5 * s * ui, t * uj, -s * ui, -t * uj, 0.5 * s * ui, tau * uj};
}

inline GroupElement product_of_exponentials(const std::vector<AlgebraElement>& factors) {
  GroupElement g;
  for (const auto& a : factors) g = g * exp_group(a);
  return g;
}

/// Max-abs residual of the commutator word in (ui, uj) against e^{f uk}.
inline double commutator_residual(const AlgebraElement& ui, const AlgebraElement& uj, const AlgebraElement& uk,
                                  double s, double t) {
  const auto word = commutator_word(ui, uj, s, t);
  const GroupElement g = product_of_exponentials({word.begin(), word.end()});
  const double f = commutator_identity(s, t).f;
  return g.distance_to(GroupElement(exp_su2(f * uk.su2()), Vec3::Zero()));
}

// ---------------------------------------------------------------------------
// Control paths and the Maurer-Cartan ODE

/// Piecewise-constant control: on each segment the Maurer-Cartan form is
/// sum alpha_i v_i + beta_i f_i in the frame of a decoupled metric.
struct Segment {
  double dt = 0.0;
  Vec3 alpha = Vec3::Zero();
  Vec3 beta = Vec3::Zero();
};

struct ControlPath {
  std::vector<Segment> segments;

  bool empty() const { return segments.empty(); }

  double duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.dt;
    return t;
  }

  void validate() const {
    for (const auto& s : segments) {
      if (!(s.dt > 0.0) || !std::isfinite(s.dt) || !s.alpha.allFinite() || !s.beta.allFinite()) {
        throw Error(ErrorKind::InvalidParameters, "control path segments need finite controls and dt > 0");
      }
    }
  }

  double length(const DecoupledMetric& m) const {
    double l = 0.0;
    for (const auto& s : segments) l += s.dt * m.frame_norm(s.alpha, s.beta);
    return l;
  }

  /// Endpoint as the ordered product of exp(dt * control).
  GroupElement endpoint(const DecoupledMetric& m) const {
    GroupElement g;
    for (const auto& s : segments) g = g * exp_group(s.dt * m.from_frame(s.alpha, s.beta));
    return g;
  }

  void append(const ControlPath& other) {
    segments.insert(segments.end(), other.segments.begin(), other.segments.end());
  }
};

struct IntegrationResult {
  GroupElement endpoint;
  Coordinates coords;
  double length = 0.0;
  double richardson_error = 0.0;  // |x(h) - x(h/2)| at the end point
};

inline constexpr double kGimbalMargin = 1e-3;

namespace detail {

/// x' = T(x1, x2) alpha, the inverse of the left-logarithmic derivative of the chart.
inline Vec3 mc_rhs(const Vec3& x, const Vec3& alpha) {
  if (std::abs(x(1)) >= 0.5 * kPi - kGimbalMargin) {
    throw Error(ErrorKind::GimbalLock, "mc_integrate: |x2| reached pi/2 - 1e-3; re-anchor the path");
  }
  const double s1 = std::sin(x(0));
  const double c1 = std::cos(x(0));
  const double sec = 1.0 / std::cos(x(1));
  const double tan = std::tan(x(1));
  return {alpha(0) + s1 * tan * alpha(1) + c1 * tan * alpha(2), c1 * alpha(1) - s1 * alpha(2),
          s1 * sec * alpha(1) + c1 * sec * alpha(2)};
}

inline Vec3 rk4_path(const ControlPath& path, double max_step) {
  Vec3 x = Vec3::Zero();
  for (const auto& seg : path.segments) {
    const int steps = std::max(1, static_cast<int>(std::ceil(seg.dt / max_step)));
    const double h = seg.dt / steps;
    for (int k = 0; k < steps; ++k) {
      const Vec3 k1 = mc_rhs(x, seg.alpha);
      const Vec3 k2 = mc_rhs(x + 0.5 * h * k1, seg.alpha);
      const Vec3 k3 = mc_rhs(x + 0.5 * h * k2, seg.alpha);
      const Vec3 k4 = mc_rhs(x + h * k3, seg.alpha);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return x;
}

}  // namespace detail

/// Integrates the chart coordinates of a path starting at the identity. The
/// su(2) coordinates follow the ODE in the Milnor frame of m; the central
/// coordinates accumulate d alpha_i + beta_i.
inline IntegrationResult mc_integrate(const DecoupledMetric& m, const ControlPath& path) {
  path.validate();
  IntegrationResult out;
  if (path.empty()) return out;
  const double max_step = 1e-3 * path.duration();
  const Vec3 coarse = detail::rk4_path(path, max_step);
  const Vec3 fine = detail::rk4_path(path, 0.5 * max_step);
  out.richardson_error = (fine - coarse).cwiseAbs().maxCoeff();
  Coordinates c;
  c.x = fine + (fine - coarse) / 15.0;
  for (const auto& seg : path.segments) c.y += seg.dt * (m.d() * seg.alpha + seg.beta);
  out.coords = c.normalized();
  out.endpoint = psi_in(m, c);
  out.length = path.length(m);
  return out;
}

}  // namespace su2vol
