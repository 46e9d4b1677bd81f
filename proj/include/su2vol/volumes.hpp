#pragma once

// Wrapped hexagons on the cylinder S x R (S of circumference 4*pi), the
// closed-form volume estimator, containment sets in chart coordinates and a
// calculus of doubling constants.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "su2vol/algebra.hpp"
#include "su2vol/errors.hpp"
#include "su2vol/metrics.hpp"

namespace su2vol {

/// H = {(mu + nu, d nu + xi) : |mu| <= mu*, |nu| <= nu*, |xi| <= xi*} on S x R.
struct Hexagon {
  double mu_star = 0.0;
  double nu_star = 0.0;
  double xi_star = 0.0;
  double d = 0.0;

  void validate() const {
    for (double v : {mu_star, nu_star, xi_star, d}) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidParameters, "hexagon entries must be finite and >= 0");
    }
  }

  /// Half-height of the planar lift.
  double half_height() const { return d * nu_star + xi_star; }

  /// Planar cross-section [lo, hi] at height y; lo > hi when empty.
  std::pair<double, double> section(double y) const {
    double nlo = -nu_star;
    double nhi = nu_star;
    if (d > 0.0) {
      nlo = std::max(nlo, (y - xi_star) / d);
      nhi = std::min(nhi, (y + xi_star) / d);
    } else if (std::abs(y) > xi_star) {
      return {1.0, -1.0};
    }
    if (nlo > nhi) {
      // At |y| = d nu* + xi* the interval is a point; rounding may invert it.
      if (nlo - nhi > 1e-12 * (nu_star + (std::abs(y) + xi_star) / d)) return {1.0, -1.0};
      nlo = nhi = 0.5 * (nlo + nhi);
    }
    return {nlo - mu_star, nhi + mu_star};
  }

  double width(double y) const {
    const auto [lo, hi] = section(y);
    return hi >= lo ? hi - lo : 0.0;
  }

  /// Membership on the cylinder: some lift of x lies in the planar section.
  bool contains(double x, double y) const {
    const auto [lo, hi] = section(y);
    if (hi < lo) return false;
    if (hi - lo >= kFourPi) return true;
    const double shift = std::ceil((lo - x) / kFourPi) * kFourPi;
    return x + shift <= hi;
  }
};

namespace detail {

/// Heights where the planar section changes slope, clipped to the support.
inline std::vector<double> hexagon_breakpoints(const Hexagon& h) {
  const double top = h.half_height();
  std::vector<double> ys{-top, top};
  if (h.d > 0.0) {
    const double corner = h.d * h.nu_star - h.xi_star;
    ys.push_back(corner);
    ys.push_back(-corner);
  }
  std::vector<double> out;
  for (double y : ys)
    if (y >= -top && y <= top) out.push_back(y);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Integrates a function that is linear between consecutive entries of ys.
template <class F>
double trapezoid_exact(const std::vector<double>& ys, F&& value) {
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
    const double a = ys[k];
    const double b = ys[k + 1];
    if (b > a) area += 0.5 * (b - a) * (value(a) + value(b));
  }
  return area;
}

/// Adds the heights in each linear piece of ys where g(y) = level, given g
/// linear on each piece; g is evaluated at the piece ends.
template <class G>
void add_level_crossings(std::vector<double>& ys, G&& g, std::vector<double> levels) {
  std::sort(levels.begin(), levels.end());
  const std::vector<double> base = ys;
  for (std::size_t k = 0; k + 1 < base.size(); ++k) {
    const double a = base[k];
    const double b = base[k + 1];
    const double ga = g(a);
    const double gb = g(b);
    if (ga == gb) continue;
    auto first = std::upper_bound(levels.begin(), levels.end(), std::min(ga, gb));
    auto last = std::lower_bound(levels.begin(), levels.end(), std::max(ga, gb));
    for (auto it = first; it < last; ++it) {
      const double t = (*it - ga) / (gb - ga);
      if (t > 0.0 && t < 1.0) ys.push_back(a + t * (b - a));
    }
  }
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
}

}  // namespace detail

/// |H| = integral of min(w(y), 4 pi) dy, with w the planar section width.
/// w is concave and piecewise linear, so the integral is exact on the
/// breakpoints refined by the saturation level.
inline double hexagon_area(const Hexagon& h) {
  h.validate();
  std::vector<double> ys = detail::hexagon_breakpoints(h);
  if (ys.size() < 2) return 0.0;
  detail::add_level_crossings(ys, [&](double y) { return h.width(y); }, {kFourPi});
  return detail::trapezoid_exact(ys, [&](double y) { return std::min(h.width(y), kFourPi); });
}

namespace detail {

/// Measure of the wrapped interval [lo, hi] (length < 4 pi) inside [-iota, iota].
inline double wrapped_overlap(double lo, double hi, double iota) {
  if (hi < lo) return 0.0;
  if (hi - lo >= kFourPi) return 2.0 * iota;
  const double k0 = std::floor((-iota - hi) / kFourPi);
  double total = 0.0;
  for (double k = k0; lo + k * kFourPi <= iota; k += 1.0) {
    const double a = std::max(lo + k * kFourPi, -iota);
    const double b = std::min(hi + k * kFourPi, iota);
    if (b > a) total += b - a;
  }
  return std::min(total, 2.0 * iota);
}

/// Heights on which both section ends and the truncated width are linear.
inline std::vector<double> truncated_breakpoints(const Hexagon& h, double iota) {
  std::vector<double> ys = hexagon_breakpoints(h);
  if (ys.size() < 2) return ys;
  const double span = h.mu_star + h.nu_star + kFourPi;
  std::vector<double> ends;
  for (double k = -std::ceil(span / kFourPi); k <= std::ceil(span / kFourPi); k += 1.0) {
    ends.push_back(iota + k * kFourPi);
    ends.push_back(-iota + k * kFourPi);
  }
  add_level_crossings(ys, [&](double y) { return h.width(y); }, {kFourPi});
  add_level_crossings(ys, [&](double y) { return h.section(y).first; }, ends);
  add_level_crossings(ys, [&](double y) { return h.section(y).second; }, ends);
  return ys;
}

inline double truncated_width(const Hexagon& h, double y, double iota) {
  const auto [lo, hi] = h.section(y);
  return wrapped_overlap(lo, hi, iota);
}

}  // namespace detail

/// |H_iota| = |H intersected with ([-iota, iota] x R)|, exact.
inline double hexagon_iota_area(const Hexagon& h, double iota) {
  h.validate();
  if (!(iota > 0.0) || iota > kTwoPi) throw Error(ErrorKind::InvalidParameters, "iota must lie in (0, 2 pi]");
  const std::vector<double> ys = detail::truncated_breakpoints(h, iota);
  if (ys.size() < 2) return 0.0;
  return detail::trapezoid_exact(ys, [&](double y) { return detail::truncated_width(h, y, iota); });
}

inline double vbar_H(const Hexagon& h) {
  const double planar = h.d * h.mu_star * h.nu_star + h.mu_star * h.xi_star + h.nu_star * h.xi_star;
  return std::min(planar, h.d * h.nu_star + h.xi_star);
}

// ---------------------------------------------------------------------------
// Estimator

inline constexpr double kDefaultEta = 0.1;
inline constexpr double kDefaultIota = kPi / 4.0;
inline constexpr double kDefaultOuterConstant = 8.0;

struct EstimatorInputs {
  double r = 1.0;
  Parameters params;
  double eta = kDefaultEta;

  void validate() const {
    validate_parameters(params);
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidParameters, "radius must be positive");
    if (!(eta > 0.0)) throw Error(ErrorKind::InvalidParameters, "eta must be positive");
  }
};

struct MRho {
  Vec3 m;
  Vec3 rho;
};

inline MRho m_rho(const EstimatorInputs& in) {
  MRho out;
  for (int i = 0; i < 3; ++i) out.m(i) = std::min(in.r / in.params.a[i], in.eta);
  for (int i = 0; i < 3; ++i) {
    const double mi = out.m(i);
    const double mj = out.m((i + 1) % 3);
    const double mk = out.m((i + 2) % 3);
    out.rho(i) = mj * mk + mi * mj * mj + mi * mk * mk;
  }
  return out;
}

/// Per-axis factors of the estimator; their product is vbar_g.
inline Vec3 vbar_g_factors(const EstimatorInputs& in) {
  in.validate();
  const MRho mr = m_rho(in);
  const double d = in.params.d;
  const double r = in.r;
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const double ai = in.params.a[i];
    const double rho = mr.rho(i);
    out(i) = std::min(d * rho * r / ai + rho * r + r * r / ai, d * r / ai + r);
  }
  return out;
}

inline double vbar_g(const EstimatorInputs& in) { return vbar_g_factors(in).prod(); }

/// Half-widths of the central box containing the projection of B_g(r).
inline Vec3 linear_upper(const EstimatorInputs& in) {
  Vec3 out;
  for (int i = 0; i < 3; ++i) out(i) = in.params.d * in.r / in.params.a[i] + in.r;
  return out;
}

// ---------------------------------------------------------------------------
// Containment sets

enum class ContainmentSide { Inner, Outer };

struct ContainmentSet {
  std::array<Hexagon, 3> factors;  // factor i lives in the (x_i, y_i) plane
  ContainmentSide side = ContainmentSide::Inner;
  bool iota_truncated = false;
  double iota = kDefaultIota;

  /// Lebesgue measure of K in chart coordinates.
  double chart_measure() const {
    double v = 1.0;
    for (const auto& h : factors) v *= iota_truncated ? hexagon_iota_area(h, iota) : hexagon_area(h);
    return v;
  }

  double vbar_product() const {
    double v = 1.0;
    for (const auto& h : factors) v *= vbar_H(h);
    return v;
  }
};

/// Inner: H_iota(rho_i, r/a_i, r). Outer: H(C rho_i, r/a_i, r), valid for r <= eta a_2.
inline ContainmentSet containment_sets(const EstimatorInputs& in, ContainmentSide side,
                                       double outer_constant = kDefaultOuterConstant,
                                       double iota = kDefaultIota) {
  in.validate();
  if (side == ContainmentSide::Outer && in.r > in.eta * in.params.a[1]) {
    throw Error(ErrorKind::OutOfRegime, "outer containment requires r <= eta * a2");
  }
  const MRho mr = m_rho(in);
  ContainmentSet k;
  k.side = side;
  k.iota_truncated = side == ContainmentSide::Inner;
  k.iota = iota;
  const double scale = side == ContainmentSide::Outer ? outer_constant : 1.0;
  for (int i = 0; i < 3; ++i) {
    k.factors[i] = Hexagon{scale * mr.rho(i), in.r / in.params.a[i], in.r, in.params.d};
  }
  return k;
}

// ---------------------------------------------------------------------------
// Doubling calculus

/// Expression tree over r > 0 and fixed parameters. Every node is monotone
/// nondecreasing in r; bound() returns a constant D with f(2r) <= D f(r).
class DoublingExpr {
 public:
  enum class Kind { Const, Var, Sum, Product, Min, Max, Couple, Compose, Comparable, ProductMetric, Reduction };

  static DoublingExpr constant(double c) { return DoublingExpr(Kind::Const, {}, c); }
  static DoublingExpr variable() { return DoublingExpr(Kind::Var, {}); }
  static DoublingExpr sum(std::vector<DoublingExpr> c) { return DoublingExpr(Kind::Sum, std::move(c)); }
  static DoublingExpr product(std::vector<DoublingExpr> c) { return DoublingExpr(Kind::Product, std::move(c)); }
  static DoublingExpr min(std::vector<DoublingExpr> c) { return DoublingExpr(Kind::Min, std::move(c)); }
  static DoublingExpr max(std::vector<DoublingExpr> c) { return DoublingExpr(Kind::Max, std::move(c)); }
  /// Vector of components; evaluates to the largest component.
  static DoublingExpr couple(std::vector<DoublingExpr> c) { return DoublingExpr(Kind::Couple, std::move(c)); }
  /// outer(inner(r)); the variable of outer is the value of inner.
  static DoublingExpr compose(DoublingExpr outer, DoublingExpr inner) {
    return DoublingExpr(Kind::Compose, {std::move(outer), std::move(inner)});
  }
  /// A function f with lo * g <= f <= hi * g; evaluates to g.
  static DoublingExpr comparable(DoublingExpr g, double lo, double hi) {
    return DoublingExpr(Kind::Comparable, {std::move(g)}, lo, hi);
  }
  /// Doubling constant of a product of two spaces with constants D1, D2.
  static DoublingExpr product_metric(DoublingExpr d1, DoublingExpr d2) {
    return DoublingExpr(Kind::ProductMetric, {std::move(d1), std::move(d2)});
  }
  /// Constant for su(2) (+) R^n from the decoupled constant B.
  static DoublingExpr reduction(int n, DoublingExpr b) {
    return DoublingExpr(Kind::Reduction, {std::move(b)}, static_cast<double>(n));
  }

  Kind kind() const { return kind_; }
  const std::vector<DoublingExpr>& children() const { return children_; }

  double bound() const {
    validate();
    switch (kind_) {
      case Kind::Const: return 1.0;
      case Kind::Var: return 2.0;
      case Kind::Sum:
      case Kind::Min:
      case Kind::Max: return op_bound(2.0);
      case Kind::Product: {
        int k = 0;
        for (const auto& c : children_)
          if (c.bound() > 1.0) ++k;
        return op_bound(std::ldexp(1.0, k));
      }
      case Kind::Couple: {
        double d = 1.0;
        for (const auto& c : children_) d = std::max(d, c.bound());
        return d;
      }
      case Kind::Compose: return std::pow(children_[0].bound(), doublings(children_[1].bound()));
      case Kind::Comparable: return (hi_ / lo_) * children_[0].bound();
      case Kind::ProductMetric: {
        const double d1 = children_[0].bound();
        const double d2 = children_[1].bound();
        return d1 * d1 * d2 * d2;
      }
      case Kind::Reduction: {
        const double b = std::ldexp(children_[0].bound(), static_cast<int>(lo_));
        return b * b * b * b;
      }
    }
    return std::numeric_limits<double>::infinity();
  }

  /// Value at r; NaN for the constant-bookkeeping nodes.
  double eval(double r) const {
    validate();
    switch (kind_) {
      case Kind::Const: return lo_;
      case Kind::Var: return r;
      case Kind::Sum: {
        double s = 0.0;
        for (const auto& c : children_) s += c.eval(r);
        return s;
      }
      case Kind::Product: {
        double p = 1.0;
        for (const auto& c : children_) p *= c.eval(r);
        return p;
      }
      case Kind::Min: {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& c : children_) v = std::min(v, c.eval(r));
        return v;
      }
      case Kind::Max:
      case Kind::Couple: {
        double v = -std::numeric_limits<double>::infinity();
        for (const auto& c : children_) v = std::max(v, c.eval(r));
        return v;
      }
      case Kind::Compose: return children_[0].eval(children_[1].eval(r));
      case Kind::Comparable: return children_[0].eval(r);
      case Kind::ProductMetric:
      case Kind::Reduction: return std::numeric_limits<double>::quiet_NaN();
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

 private:
  DoublingExpr(Kind k, std::vector<DoublingExpr> c, double lo = 0.0, double hi = 0.0)
      : kind_(k), children_(std::move(c)), lo_(lo), hi_(hi) {}

  static double doublings(double d) { return d <= 1.0 ? 0.0 : std::ceil(std::log2(d) - 1e-12); }

  /// An operation with constant d_op applied to children: composition with
  /// their couple.
  double op_bound(double d_op) const {
    double inner = 1.0;
    for (const auto& c : children_) inner = std::max(inner, c.bound());
    return std::pow(d_op, doublings(inner));
  }

  void validate() const {
    auto fail = [](const char* what) { throw Error(ErrorKind::MalformedTree, what); };
    switch (kind_) {
      case Kind::Const:
        if (!(lo_ >= 0.0) || !std::isfinite(lo_)) fail("constant must be finite and >= 0");
        if (!children_.empty()) fail("constant has children");
        break;
      case Kind::Var:
        if (!children_.empty()) fail("variable has children");
        break;
      case Kind::Sum:
      case Kind::Product:
      case Kind::Min:
      case Kind::Max:
      case Kind::Couple:
        if (children_.empty()) fail("operation needs at least one argument");
        break;
      case Kind::Compose:
      case Kind::ProductMetric:
        if (children_.size() != 2) fail("binary combinator needs exactly two arguments");
        break;
      case Kind::Comparable:
        if (children_.size() != 1) fail("comparable needs one argument");
        if (!(lo_ > 0.0) || !(hi_ >= lo_) || !std::isfinite(hi_)) fail("comparable needs 0 < c <= C < inf");
        break;
      case Kind::Reduction:
        if (children_.size() != 1) fail("reduction needs one argument");
        if (!(lo_ >= 0.0) || lo_ > 62.0) fail("reduction needs 0 <= n <= 62");
        break;
    }
  }

  Kind kind_;
  std::vector<DoublingExpr> children_;
  double lo_ = 0.0;
  double hi_ = 0.0;
};

/// The estimator as a tree in r, with parameters as constants.
inline DoublingExpr vbar_g_tree(const Parameters& p, double eta = kDefaultEta) {
  using E = DoublingExpr;
  const E r = E::variable();
  std::array<E, 3> m{E::constant(0), E::constant(0), E::constant(0)};
  for (int i = 0; i < 3; ++i) m[i] = E::min({E::product({E::constant(1.0 / p.a[i]), r}), E::constant(eta)});
  std::vector<E> factors;
  for (int i = 0; i < 3; ++i) {
    const E& mi = m[i];
    const E& mj = m[(i + 1) % 3];
    const E& mk = m[(i + 2) % 3];
    const E rho = E::sum({E::product({mj, mk}), E::product({mi, mj, mj}), E::product({mi, mk, mk})});
    const E inv_a = E::constant(1.0 / p.a[i]);
    const E reach = E::sum({E::product({E::constant(p.d), rho, r, inv_a}), E::product({rho, r}),
                            E::product({r, r, inv_a})});
    const E box = E::sum({E::product({E::constant(p.d), r, inv_a}), r});
    factors.push_back(E::min({reach, box}));
  }
  return E::product(std::move(factors));
}

inline double vbar_g_doubling_bound(const Parameters& p, double eta = kDefaultEta) {
  return vbar_g_tree(p, eta).bound();
}

}  // namespace su2vol
