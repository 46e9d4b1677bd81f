#pragma once

// Certified two-sided estimates of the left-invariant distance from the
// identity for a decoupled metric.
//
// Lower bounds are comparison arguments valid for every path; upper bounds
// are lengths of explicit paths (straight exponentials, coordinate legs,
// commutator words, and locally optimized piecewise-constant controls).

#include <algorithm>
#include <array>
#include <complex>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "su2vol/algebra.hpp"
#include "su2vol/frames.hpp"
#include "su2vol/metrics.hpp"

namespace su2vol {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A point expressed in the frame of a decoupled metric: the isomorphism
/// sending the Pauli basis to u_i and e_i to f_i is an isometry onto the
/// metric built by from_parameters.
struct FramePoint {
  Mat2c su2 = Mat2c::Identity();
  Vec3 y = Vec3::Zero();
};

/// S in SU(2) with S u^_i S^* = u_i for the Milnor frame of m.
inline Mat2c frame_rotation(const DecoupledMetric& m) {
  Mat3 q;
  for (int i = 0; i < 3; ++i) q.col(i) = m.u(i).su2();
  const Eigen::AngleAxisd aa(q);
  return exp_su2(aa.angle() * aa.axis());
}

inline FramePoint to_frame(const DecoupledMetric& m, const GroupElement& p) {
  const Mat2c s = frame_rotation(m);
  Mat3 f;
  for (int i = 0; i < 3; ++i) f.col(i) = m.f()[i].center();
  return {s.adjoint() * p.su2() * s, f.partialPivLu().solve(p.vec())};
}

/// Ad_U in Pauli coordinates (an element of SO(3)).
inline Mat3 adjoint_matrix(const Mat2c& u) {
  Mat3 r;
  for (int b = 0; b < 3; ++b) r.col(b) = su2_coefficients(u * pauli(b) * u.adjoint());
  return r;
}

/// Chart angles x with psi(x) = U, x2 in [-pi/2, pi/2].
inline Vec3 chart_angles(const Mat2c& u) {
  const Mat3 r = adjoint_matrix(u);
  Vec3 x;
  x(1) = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  if (std::abs(std::cos(x(1))) > 1e-6) {
    x(0) = std::atan2(r(2, 1), r(2, 2));
    x(2) = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal line: only one combination of x1 and x3 is determined.
    x(2) = 0.0;
    const double c = std::cos(x(1));
    const double s = std::sin(x(1));
    Mat3 ry;
    ry << c, 0, s, 0, 1, 0, -s, 0, c;
    const Mat3 rx = ry.transpose() * r;
    x(0) = std::atan2(rx(2, 1), rx(2, 2));
  }
  const Mat2c m = psi(Coordinates{x, Vec3::Zero()}).su2();
  if ((m + u).cwiseAbs().maxCoeff() < (m - u).cwiseAbs().maxCoeff()) x(0) += kTwoPi;
  return x;
}

namespace detail {

/// Operator norm of J_r(x)^{-1} - I at |x| = theta < 2 pi: the modulus of
/// (theta/2) / sin(theta/2) e^{i theta/2} - 1, nondecreasing in theta.
inline double log_jacobian_defect(double theta) {
  if (theta <= 0.0) return 0.0;
  const double h = 0.5 * theta;
  const double m = h / std::sin(h);
  return std::abs(std::polar(m, h) - cplx(1.0, 0.0));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commutator words

struct WordSpec {
  int axis = 0;          // target e^{sigma u_axis}
  int level = 0;         // 0: empty, 1: bracket of two v's, 2: bracket of a v and a level-1 word
  double sigma = 0.0;
  double s = 0.0;        // per repetition, sign chosen to hit sigma
  double t = 0.0;        // per repetition, > 0
  bool swapped = false;  // s acts on the second axis of the cyclic pair
  int reps = 1;
  double cost = 0.0;
};

/// Level-2 words are evaluated only when their estimated cost is below this
/// multiple of the level-1 cost, and words only when it is below this
/// multiple of the plan budget.
inline constexpr double kLevelTwoMargin = 1.5;

struct DistanceOptions {
  int word_level = 2;         // deepest commutator words tried
  int optimizer_budget = 0;   // SQP iterations per start; 0 disables
  int segments = 8;
  int starts = 5;
};

struct DistanceBracket {
  double lower = 0.0;
  double upper = 0.0;
  ControlPath witness;
  double endpoint_mismatch = 0.0;
};

enum class Membership { Inside, Outside, Ambiguous };

class DistanceModel {
 public:
  explicit DistanceModel(const Parameters& p) : p_(p), metric_(from_parameters(p)) {
    // Each (v_i, f_i) block of the reference gram is [[a^2 + d^2, -d], [-d, 1]].
    double lmin = kInf;
    for (int i = 0; i < 3; ++i) {
      const double a = p.a[i];
      const double trace = a * a + p.d * p.d + 1.0;
      const double disc = std::sqrt(((a - 1.0) * (a - 1.0) + p.d * p.d) * ((a + 1.0) * (a + 1.0) + p.d * p.d));
      lmin = std::min(lmin, 2.0 * a * a / (trace + disc));
    }
    sqrt_lambda_min_ = std::sqrt(lmin);
    a_min_ = std::min({p.a[0], p.a[1], p.a[2]});
    const double a_max = std::max({p.a[0], p.a[1], p.a[2]});
    log_gain_ = std::sqrt(a_max * a_max + p.d * p.d) / a_min_;
    for (int i = 0; i < 3; ++i) {
      y_weight_(i) = 1.0 / (1.0 + (p.d / p.a[i]) * (p.d / p.a[i]));
      hopf_weight_(i) = std::min(p.a[(i + 1) % 3], p.a[(i + 2) % 3]);
    }
    // Right Riemann sums of the nondecreasing defect bound its integral from above.
    constexpr int kSub = 8;
    defect_integral_.assign(kDefectGrid + 1, 0.0);
    for (int k = 1; k <= kDefectGrid; ++k) {
      double acc = 0.0;
      for (int j = 1; j <= kSub; ++j) {
        acc += detail::log_jacobian_defect(defect_theta(k - 1) + (defect_theta(k) - defect_theta(k - 1)) * j / kSub);
      }
      defect_integral_[k] = defect_integral_[k - 1] + acc * (defect_theta(k) - defect_theta(k - 1)) / kSub;
    }
    build_word_tables();
  }

  const Parameters& params() const { return p_; }
  const DecoupledMetric& metric() const { return metric_; }

  // -- lower bounds ---------------------------------------------------------

  /// max of: spectral comparison with g0; the best two-scale comparison
  /// g >= c_s g0|su(2) + c_z |.|^2, whose distance is sqrt(c_s theta^2 +
  /// c_z |y|^2); the central projection, whose velocity d alpha_i + beta_i is
  /// bounded through Cauchy-Schwarz; and the orbit of each u_i under Ad, which
  /// moves at angular speed at most speed / min(a_j, a_k).
  double lower(const FramePoint& q, const Mat3& ad) const {
    const double theta = su2_angle(q.su2);
    const double yy = q.y.squaredNorm();
    double lb = sqrt_lambda_min_ * std::sqrt(theta * theta + yy);
    lb = std::max(lb, std::sqrt(two_scale_bound(theta * theta, yy)));
    lb = std::max(lb, std::sqrt(y_weight_.dot(q.y.cwiseAbs2())));
    for (int i = 0; i < 3; ++i) lb = std::max(lb, hopf_weight_(i) * std::acos(std::clamp(ad(i, i), -1.0, 1.0)));
    return lb;
  }

  /// max over c_z in [0, 1] of c_s(c_z) theta^2 + c_z |y|^2 where
  /// c_s(c_z) = a_min^2 + d^2 - d^2 / (1 - c_z) is the largest feasible c_s;
  /// concave in c_z with the stationary point 1 - c_z = d theta / |y|.
  double two_scale_bound(double theta2, double yy) const {
    const double a2 = a_min_ * a_min_;
    const double d2 = p_.d * p_.d;
    if (d2 == 0.0) return a2 * theta2 + yy;
    const double one_minus_min = d2 / (a2 + d2);  // c_s >= 0
    double w = yy > 0.0 ? p_.d * std::sqrt(theta2) / std::sqrt(yy) : 1.0;
    w = std::clamp(w, one_minus_min, 1.0);
    const double cs = std::max(0.0, a2 + d2 - d2 / w);
    return cs * theta2 + (1.0 - w) * yy;
  }

  /// True when no path of length <= r reaches q. Along such a path the
  /// su(2) arclength stays below r / a_min; if that is < 2 pi the principal
  /// log is smooth along it and
  ///  - |log|_g grows at most at rate 1 + (sqrt(a_max^2 + d^2) / a_min) delta(theta),
  ///  - log U - int alpha drifts at most by int delta, so |y - d log U| is
  ///    at most d int_0^{r/a_min} delta + r,
  /// with delta the defect of the inverse right Jacobian.
  bool excluded(const FramePoint& q, double r) const {
    const double reach = r / a_min_;
    if (!(reach < defect_theta(kDefectGrid))) return false;
    const auto [rho, w] = detail::su2_polar(q.su2);
    const double wn = w.norm();
    const Vec3 x = wn > 1e-300 ? Vec3((2.0 * rho / wn) * w) : Vec3::Zero();
    const double gain = 1.0 + log_gain_ * detail::log_jacobian_defect(reach);
    if (frame_cost(x, q.y) > gain * r * (1.0 + 1e-12)) return true;
    if (p_.d > 0.0) {
      const double drift = p_.d * defect_integral_upper(reach) + r;
      if ((q.y - p_.d * x).norm() > drift * (1.0 + 1e-12)) return true;
    }
    return false;
  }

  double lower(const FramePoint& q) const { return lower(q, adjoint_matrix(q.su2)); }

  // -- straight exponentials ------------------------------------------------

  /// g-length of t -> exp(t X) over the branches X = (2 rho + 4 pi k) w / |w|:
  /// both principal ones and the two nearest the central optimum.
  double straight_upper(const FramePoint& q, Vec3* best_x = nullptr) const {
    const auto [rho, w] = detail::su2_polar(q.su2);
    const double wn = w.norm();
    const Vec3 axis = wn > 1e-300 ? Vec3(w / wn) : Vec3(0, 0, 1);
    double best = kInf;
    auto consider = [&](double angle) {
      const Vec3 x = angle * axis;
      const double c = frame_cost(x, q.y);
      if (c < best) {
        best = c;
        if (best_x) *best_x = x;
      }
    };
    consider(2.0 * rho);
    consider(2.0 * rho - kFourPi);
    if (p_.d > 0.0) {
      double weight = p_.d * p_.d;
      for (int i = 0; i < 3; ++i) weight += p_.a[i] * p_.a[i] * axis(i) * axis(i);
      const double optimum = p_.d * q.y.dot(axis) / weight;
      const double k = std::floor((optimum - 2.0 * rho) / kFourPi);
      if (std::abs(k) < 1e9) {
        consider(2.0 * rho + kFourPi * k);
        consider(2.0 * rho + kFourPi * (k + 1.0));
      }
    }
    return best;
  }

  double frame_cost(const Vec3& x, const Vec3& y) const {
    double s = (y - p_.d * x).squaredNorm();
    for (int i = 0; i < 3; ++i) s += p_.a[i] * p_.a[i] * x(i) * x(i);
    return std::sqrt(s);
  }

  // -- chart representatives ------------------------------------------------

  /// All x in [-2pi, 2pi]^3 with psi(x) equal to U: even 2pi-lattice shifts
  /// of the base angles and of their Euler flip.
  static std::vector<Vec3> representatives(const Mat2c& u) {
    const Vec3 base = chart_angles(u);
    const Vec3 flip(base(0) + kPi, kPi - base(1), base(2) + kPi);
    std::vector<Vec3> out;
    for (const Vec3& b : {base, flip}) {
      std::array<std::vector<std::pair<double, int>>, 3> options;
      for (int i = 0; i < 3; ++i) {
        for (int k = -3; k <= 3; ++k) {
          const double v = b(i) + k * kTwoPi;
          if (std::abs(v) <= kTwoPi + 1e-12) options[i].push_back({v, k});
        }
      }
      for (const auto& [v0, k0] : options[0])
        for (const auto& [v1, k1] : options[1])
          for (const auto& [v2, k2] : options[2])
            if ((k0 + k1 + k2) % 2 == 0) out.emplace_back(v0, v1, v2);
    }
    return out;
  }

  // -- word costs -----------------------------------------------------------

  /// Cost of one repetition of a level-1 word with parameters (s, t).
  double word1_rep_cost(int axis, bool swapped, double s, double t) const {
    const int i = (axis + 1) % 3;
    const int j = (axis + 2) % 3;
    const double ax = swapped ? p_.a[j] : p_.a[i];
    const double ay = swapped ? p_.a[i] : p_.a[j];
    const double tau = commutator_identity(s, t).tau;
    return 2.0 * ax * std::abs(s) + 2.0 * ay * (std::abs(t) + std::abs(tau));
  }

  /// s with |f(s, t)| = |target| for t in (0, pi], or NaN if unreachable.
  static double solve_s(double target_abs, double t) {
    const double ratio = std::sin(0.25 * target_abs) / std::sin(0.5 * t);
    if (!(ratio <= 1.0 + 1e-15)) return std::numeric_limits<double>::quiet_NaN();
    return 2.0 * std::asin(std::min(1.0, ratio));
  }

  /// Word realizing exactly e^{sigma u_axis} with the given nesting level
  /// (1 or 2). Parameters come from a per-model table of optimized words;
  /// the returned cost is the exact cost of the returned word.
  WordSpec word(int axis, double sigma, int level) const {
    WordSpec best;
    best.axis = axis;
    best.sigma = sigma;
    best.cost = sigma == 0.0 ? 0.0 : kInf;
    if (sigma == 0.0) return best;
    const double target = std::abs(sigma);
    const WordTable& tab = tables_[level - 1][axis];
    const double u = (std::log(target) - tab.log_lo) / tab.step;
    const int last = static_cast<int>(tab.grid.size()) - 1;
    const int k0 = std::clamp(static_cast<int>(std::floor(u)), 0, last);
    const int k1 = std::min(k0 + 1, last);
    for (int k : {k0, k1}) {
      const WordSpec& g = tab.grid[k];
      if (g.level == 0) continue;
      const double per = target / g.reps;
      if (per >= kTwoPi) continue;
      const double t_min = 0.5 * per * (1.0 + 1e-12);
      const double grid_sigma = std::exp(tab.log_lo + k * tab.step);
      for (double t : {g.t, g.t * std::sqrt(target / grid_sigma)}) {
        t = std::clamp(t, t_min, kPi);
        const double s = solve_s(per, t);
        if (!std::isfinite(s)) continue;
        const double cost = g.reps * rep_cost(axis, level, g.swapped, s, t);
        if (cost < best.cost) {
          const double sign = (sigma > 0.0) != g.swapped ? 1.0 : -1.0;
          best.level = level;
          best.s = sign * s;
          best.t = t;
          best.swapped = g.swapped;
          best.reps = g.reps;
          best.cost = cost;
        }
      }
    }
    return best;
  }

  /// Tabulated cost near |sigma| rescaled by the square-root law; a cheap
  /// guide for pruning, not a bound.
  double word_cost_estimate(int axis, double sigma, int level) const {
    const double target = std::abs(sigma);
    if (target == 0.0) return 0.0;
    const WordTable& tab = tables_[level - 1][axis];
    const double u = (std::log(target) - tab.log_lo) / tab.step;
    const int last = static_cast<int>(tab.grid.size()) - 1;
    const int k0 = std::clamp(static_cast<int>(std::floor(u)), 0, last);
    double best = kInf;
    for (int k : {k0, std::min(k0 + 1, last)}) {
      if (tab.grid[k].level == 0) continue;
      best = std::min(best, tab.grid[k].cost * std::sqrt(target / std::abs(tab.grid[k].sigma)));
    }
    return best;
  }

  /// Largest tabulated angle on `axis` whose word costs at most r; below the
  /// table it follows the square-root law of short words.
  double word_reach(int axis, double r) const {
    double reach = 0.0;
    double cheapest = kInf;
    for (const auto& level_tables : tables_) {
      const WordTable& tab = level_tables[axis];
      for (std::size_t k = 0; k < tab.grid.size(); ++k) {
        if (tab.grid[k].level == 0) continue;
        if (k == 0) cheapest = std::min(cheapest, tab.grid[k].cost);
        if (tab.grid[k].cost <= r) reach = std::max(reach, std::abs(tab.grid[k].sigma));
      }
    }
    if (reach >= kTwoPi) return 2.0 * kFourPi;
    if (reach == 0.0 && std::isfinite(cheapest)) {
      const double lo = std::exp(tables_[0][axis].log_lo);
      reach = lo * (r / cheapest) * (r / cheapest);
    }
    return reach;
  }

  WordSpec best_word1(int axis, double sigma) const { return word(axis, sigma, 1); }
  WordSpec best_word2(int axis, double sigma) const { return word(axis, sigma, 2); }

  /// Cost of one repetition; level-2 words replace each Y factor by a level-1 word.
  double rep_cost(int axis, int level, bool swapped, double s, double t) const {
    if (level == 1) return word1_rep_cost(axis, swapped, s, t);
    const int i = (axis + 1) % 3;
    const int j = (axis + 2) % 3;
    const double ax = swapped ? p_.a[j] : p_.a[i];
    const int inner_axis = swapped ? i : j;
    const double tau = commutator_identity(s, t).tau;
    return 2.0 * ax * std::abs(s) + 2.0 * word(inner_axis, t, 1).cost + 2.0 * word(inner_axis, tau, 1).cost;
  }

  // -- coordinate plans -----------------------------------------------------

  /// Realizes e^{x u_i} as a v_i-leg of signed length `direct` (which also
  /// translates by d direct f_i) followed by a drift-free word.
  struct Leg {
    double direct = 0.0;
    WordSpec word;
    double cost = 0.0;
  };

  struct Plan {
    std::array<Leg, 3> legs;
    Vec3 drift = Vec3::Zero();  // central correction in f-coordinates
    double length = kInf;
  };

  /// Cheapest plan over representatives. Per axis the options are a direct
  /// leg (also at 4 pi shifts toward y_i / d), a word, or a direct part near
  /// the central target plus a word for the remainder mod 4 pi. The residual
  /// translation is spread along the path, so the length is sqrt(L^2 + |drift|^2).
  /// Cheapest plan; words whose estimated cost exceeds a multiple of `budget`
  /// are skipped, so plans longer than the budget may be missed.
  Plan best_plan(const FramePoint& q, int word_level, const std::vector<Vec3>* reps = nullptr,
                 double budget = kInf) const {
    std::vector<Vec3> own;
    if (!reps) {
      own = representatives(q.su2);
      reps = &own;
    }
    Plan best;
    std::array<std::vector<std::pair<double, WordSpec>>, 3> memo;
    auto word_for = [&](int axis, double x) -> const WordSpec& {
      for (const auto& [v, w] : memo[axis])
        if (v == x) return w;
      WordSpec w;
      w.cost = kInf;
      const double estimate = std::min(word_cost_estimate(axis, x, 1),
                                       word_level >= 2 ? word_cost_estimate(axis, x, 2) : kInf);
      if (estimate > kLevelTwoMargin * budget) {
        memo[axis].push_back({x, w});
        return memo[axis].back().second;
      }
      w = word(axis, x, 1);
      if (word_level >= 2 && word_cost_estimate(axis, x, 2) < kLevelTwoMargin * w.cost) {
        WordSpec w2 = word(axis, x, 2);
        if (w2.cost < w.cost) w = w2;
      }
      memo[axis].push_back({x, w});
      return memo[axis].back().second;
    };
    auto direct_leg = [&](int i, double x) {
      Leg leg;
      leg.direct = x;
      leg.cost = p_.a[i] * std::abs(x);
      return leg;
    };
    auto word_leg = [&](int i, double direct, double sigma) {
      Leg leg = direct_leg(i, direct);
      leg.word = word_for(i, sigma);
      leg.cost += leg.word.cost;
      return leg;
    };
    std::array<std::vector<Leg>, 3> options;
    for (const Vec3& x : *reps) {
      for (int i = 0; i < 3; ++i) {
        options[i].clear();
        options[i].push_back(direct_leg(i, x(i)));
        if (p_.d > 0.0) {
          const double k = std::round((q.y(i) / p_.d - x(i)) / kFourPi);
          if (k != 0.0 && std::abs(k) < 1e9) {
            for (double kk : {k, k - (k > 0.0 ? 1.0 : -1.0)}) {
              if (kk != 0.0) options[i].push_back(direct_leg(i, x(i) + kFourPi * kk));
            }
          }
        }
        if (word_level < 1) continue;
        if (x(i) != 0.0) {
          const Leg w = word_leg(i, 0.0, x(i));
          if (std::isfinite(w.cost)) options[i].push_back(w);
        }
        if (p_.d > 0.0) {
          const double a2 = p_.a[i] * p_.a[i];
          for (double nu : {p_.d * q.y(i) / (a2 + p_.d * p_.d), q.y(i) / p_.d}) {
            const double rest = wrap_4pi(x(i) - nu);
            if (rest == 0.0 || nu == 0.0) continue;
            const Leg w = word_leg(i, nu, rest);
            if (std::isfinite(w.cost)) options[i].push_back(w);
          }
        }
      }
      for (const Leg& l0 : options[0]) {
        for (const Leg& l1 : options[1]) {
          for (const Leg& l2 : options[2]) {
            const std::array<const Leg*, 3> legs{&l0, &l1, &l2};
            double l = 0.0;
            Vec3 drift = q.y;
            for (int i = 0; i < 3; ++i) {
              l += legs[i]->cost;
              drift(i) -= p_.d * legs[i]->direct;
            }
            const double length = std::sqrt(l * l + drift.squaredNorm());
            if (length < best.length) {
              for (int i = 0; i < 3; ++i) best.legs[i] = *legs[i];
              best.drift = drift;
              best.length = length;
            }
          }
        }
      }
    }
    return best;
  }

  // -- path builders --------------------------------------------------------

  static Segment v_segment(int axis, double c) {
    Segment s;
    s.dt = 1.0;
    s.alpha(axis) = c;
    return s;
  }

  /// Segments of a word realizing e^{sigma u_axis}; every factor is a
  /// multiple of some v_i (or a nested word), so the central drift cancels.
  void append_word(const WordSpec& w, std::vector<Segment>& out) const {
    if (w.level == 0 || w.sigma == 0.0) return;
    const int i = (w.axis + 1) % 3;
    const int j = (w.axis + 2) % 3;
    const int x_axis = w.swapped ? j : i;
    const int y_axis = w.swapped ? i : j;
    const double tau = commutator_identity(w.s, w.t).tau;
    auto y_factor = [&](double c) {
      if (c == 0.0) return;
      if (w.level == 1) {
        out.push_back(v_segment(y_axis, c));
      } else {
        append_word(word(y_axis, c, 1), out);
      }
    };
    for (int rep = 0; rep < w.reps; ++rep) {
      y_factor(-tau);
      out.push_back(v_segment(x_axis, 0.5 * w.s));
      y_factor(w.t);
      out.push_back(v_segment(x_axis, -w.s));
      y_factor(-w.t);
      out.push_back(v_segment(x_axis, 0.5 * w.s));
      y_factor(tau);
    }
  }

  ControlPath build_plan_path(const Plan& plan) const {
    ControlPath path;
    for (int i = 2; i >= 0; --i) {
      const Leg& leg = plan.legs[i];
      if (leg.direct != 0.0) path.segments.push_back(v_segment(i, leg.direct));
      append_word(leg.word, path.segments);
    }
    spread_drift(path, plan.drift);
    return path;
  }

  /// Adds a central translation proportionally to segment length, so the
  /// total length becomes sqrt(L^2 + |drift|^2); segments here never carry f.
  void spread_drift(ControlPath& path, const Vec3& drift) const {
    if (drift.squaredNorm() == 0.0) return;
    double total = 0.0;
    for (const auto& s : path.segments) total += s.dt * metric_.frame_norm(s.alpha, s.beta);
    if (total <= 0.0) {
      Segment s;
      s.dt = 1.0;
      s.beta = drift;
      path.segments.push_back(s);
      return;
    }
    for (auto& s : path.segments) {
      const double share = metric_.frame_norm(s.alpha, s.beta) / total;
      s.beta += share * drift;
    }
  }

  ControlPath straight_path(const FramePoint& q) const {
    Vec3 x;
    straight_upper(q, &x);
    ControlPath path;
    Segment s;
    s.dt = 1.0;
    s.alpha = x;
    s.beta = q.y - p_.d * x;
    if (x.squaredNorm() + q.y.squaredNorm() > 0.0) path.segments.push_back(s);
    return path;
  }

  // -- local optimization ---------------------------------------------------

  /// Endpoint in the canonical frame of a control path.
  FramePoint endpoint(const ControlPath& path) const {
    const GroupElement g = path.endpoint(metric_);
    return {g.su2(), g.vec()};
  }

  /// Right Jacobian of exp for the cross-product bracket:
  /// exp(X + e) = exp(X) exp(right_jacobian(X) e) + O(e^2).
  static Mat3 right_jacobian(const Vec3& x) {
    const double th = x.norm();
    Mat3 k;
    k << 0.0, -x(2), x(1), x(2), 0.0, -x(0), -x(1), x(0), 0.0;
    double c1, c2;
    if (th < 1e-4) {
      c1 = 0.5 - th * th / 24.0;
      c2 = 1.0 / 6.0 - th * th / 120.0;
    } else {
      c1 = (1.0 - std::cos(th)) / (th * th);
      c2 = (th - std::sin(th)) / (th * th * th);
    }
    return Mat3::Identity() - c1 * k + c2 * k * k;
  }

  /// Horizontal path model: N segments of duration 1/N with su(2) controls
  /// alpha_k and the common central control beta = y - d mean(alpha), which is
  /// the energy-optimal choice for fixed alpha and makes the central endpoint
  /// exact. A closing segment fixes the remaining SU(2) mismatch.
  struct HorizontalPath {
    std::vector<Vec3> alpha;
    Vec3 beta = Vec3::Zero();
    Vec3 closing = Vec3::Zero();  // su(2) log of the mismatch
    double length = kInf;
  };

  static Vec3 su2_log_coefficients(const Mat2c& u) {
    const auto [rho, w] = detail::su2_polar(u);
    const double wn = w.norm();
    return wn > 1e-300 ? Vec3((2.0 * rho / wn) * w) : Vec3::Zero();
  }

  /// Fills beta, closing and length of h for target q.
  void close_path(HorizontalPath& h, const FramePoint& q) const {
    const double n = static_cast<double>(h.alpha.size());
    Vec3 mean = Vec3::Zero();
    Mat2c prod = Mat2c::Identity();
    for (const Vec3& al : h.alpha) {
      mean += al / n;
      prod = prod * exp_su2(al / n);
    }
    h.beta = q.y - p_.d * mean;
    h.closing = su2_log_coefficients(prod.adjoint() * q.su2);
    double len = 0.0;
    for (const Vec3& al : h.alpha) len += metric_.frame_norm(al, h.beta) / n;
    h.length = len + metric_.frame_norm(h.closing, -p_.d * h.closing);
  }

  ControlPath to_control_path(const HorizontalPath& h) const {
    ControlPath path;
    const double n = static_cast<double>(h.alpha.size());
    for (const Vec3& al : h.alpha) path.segments.push_back(Segment{1.0 / n, al, h.beta});
    if (h.closing.squaredNorm() > 0.0) path.segments.push_back(Segment{1.0, h.closing, -p_.d * h.closing});
    return path;
  }

  /// SQP on the energy mean|alpha_k|_a^2 + |beta|^2 subject to the SU(2)
  /// endpoint, with an exact Hessian (block diagonal plus rank one per
  /// coordinate) and an analytic endpoint Jacobian. Steps are accepted only
  /// when the closed length decreases; stops early once it is <= target.
  HorizontalPath optimize(const FramePoint& q, std::vector<Vec3> alpha, int iterations,
                          double target = 0.0) const {
    const int n = static_cast<int>(alpha.size());
    HorizontalPath best;
    best.alpha = alpha;
    close_path(best, q);
    if (n == 0) return best;
    const double nn = n;
    Vec3 kappa;
    for (int i = 0; i < 3; ++i) kappa(i) = (p_.d * p_.d / nn) / (p_.a[i] * p_.a[i] + p_.d * p_.d);
    auto apply_hinv = [&](const std::vector<Vec3>& v) {
      Vec3 sum = Vec3::Zero();
      for (const Vec3& x : v) sum += x;
      std::vector<Vec3> out(v.size());
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < 3; ++i) out[k](i) = 0.5 * nn / (p_.a[i] * p_.a[i]) * (v[k](i) - kappa(i) * sum(i));
      return out;
    };
    std::vector<Vec3> b(n, (2.0 * p_.d / nn) * q.y);
    const std::vector<Vec3> hinv_b = apply_hinv(b);

    std::vector<Mat3> jac(n);
    std::vector<Mat2c> factors(n);
    for (int it = 0; it < iterations && best.length > target; ++it) {
      // Jacobian blocks R(Q_k)^T J_r(alpha_k / N) / N with Q_k the product after k.
      for (int k = 0; k < n; ++k) factors[k] = exp_su2(best.alpha[k] / nn);
      Mat2c tail = Mat2c::Identity();
      for (int k = n - 1; k >= 0; --k) {
        jac[k] = adjoint_matrix(tail).transpose() * right_jacobian(best.alpha[k] / nn) / nn;
        tail = factors[k] * tail;
      }
      // lambda solves (J H^-1 J^T) lambda = J H^-1 b - J z - residual.
      std::array<std::vector<Vec3>, 3> hinv_jt;
      Mat3 schur = Mat3::Zero();
      Vec3 rhs = -best.closing;
      for (int c = 0; c < 3; ++c) {
        std::vector<Vec3> col(n);
        for (int k = 0; k < n; ++k) col[k] = jac[k].row(c).transpose();
        hinv_jt[c] = apply_hinv(col);
      }
      for (int k = 0; k < n; ++k) {
        rhs += jac[k] * (hinv_b[k] - best.alpha[k]);
        for (int c = 0; c < 3; ++c) schur.col(c) += jac[k] * hinv_jt[c][k];
      }
      const Vec3 lambda = schur.ldlt().solve(rhs);
      if (!lambda.allFinite()) break;
      std::vector<Vec3> delta(n);
      for (int k = 0; k < n; ++k) {
        delta[k] = hinv_b[k] - best.alpha[k];
        for (int c = 0; c < 3; ++c) delta[k] -= lambda(c) * hinv_jt[c][k];
      }
      bool improved = false;
      double step = 1.0;
      for (int ls = 0; ls < 5 && !improved; ++ls, step *= 0.5) {
        HorizontalPath cand;
        cand.alpha = best.alpha;
        for (int k = 0; k < n; ++k) cand.alpha[k] += step * delta[k];
        close_path(cand, q);
        if (std::isfinite(cand.length) && cand.length < best.length * (1.0 - 1e-12)) {
          best = std::move(cand);
          improved = true;
        }
      }
      if (!improved) break;
    }
    return best;
  }

  /// Starting controls: the best straight branch, the central optimum held
  /// constant, and the cheapest direct plans spread over the segments.
  std::vector<std::vector<Vec3>> starts(const FramePoint& q, const std::vector<Vec3>& reps,
                                        const DistanceOptions& opt) const {
    const int n = std::max(1, opt.segments);
    std::vector<std::vector<Vec3>> out;
    Vec3 x;
    straight_upper(q, &x);
    out.emplace_back(n, x);
    Vec3 central;
    for (int i = 0; i < 3; ++i) central(i) = p_.d * q.y(i) / (p_.a[i] * p_.a[i] + p_.d * p_.d);
    out.emplace_back(n, central);
    std::vector<std::pair<double, Plan>> plans;
    for (const Vec3& r : reps) {
      const std::vector<Vec3> one{r};
      const Plan plan = best_plan(q, 0, &one);
      plans.push_back({plan.length, plan});
    }
    std::stable_sort(plans.begin(), plans.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < plans.size() && static_cast<int>(out.size()) < opt.starts; ++k) {
      out.push_back(plan_controls(plans[k].second, n));
    }
    return out;
  }

  /// Direct legs of a plan (applied in the order 3, 2, 1) spread over n
  /// segments in proportion to their lengths.
  std::vector<Vec3> plan_controls(const Plan& plan, int n) const {
    double total = 0.0;
    for (int i = 0; i < 3; ++i) total += p_.a[i] * std::abs(plan.legs[i].direct);
    std::array<int, 3> counts{0, 0, 0};
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
      const double share = total > 0.0 ? p_.a[i] * std::abs(plan.legs[i].direct) / total : 1.0 / 3.0;
      counts[i] = std::max(1, static_cast<int>(std::round(share * n)));
      assigned += counts[i];
    }
    while (assigned > n) {
      --*std::max_element(counts.begin(), counts.end());
      --assigned;
    }
    counts[0] += n - assigned;
    std::vector<Vec3> out;
    for (int i = 2; i >= 0; --i) {
      for (int c = 0; c < counts[i]; ++c) {
        Vec3 al = Vec3::Zero();
        al(i) = plan.legs[i].direct * n / std::max(1, counts[i]);
        out.push_back(al);
      }
    }
    return out;
  }

  // -- brackets -------------------------------------------------------------

  DistanceBracket bracket(const FramePoint& q, const DistanceOptions& opt = {}) const {
    DistanceBracket out;
    const Mat3 ad = adjoint_matrix(q.su2);
    out.lower = lower(q, ad);
    ControlPath best = straight_path(q);
    double best_len = best.length(metric_);
    const std::vector<Vec3> reps = representatives(q.su2);
    const Plan plan = best_plan(q, opt.word_level, &reps);
    if (plan.length < best_len) {
      best = build_plan_path(plan);
      best_len = best.length(metric_);
    }
    if (opt.optimizer_budget > 0 && best_len > out.lower * (1.0 + 1e-9)) {
      for (const auto& start : starts(q, reps, opt)) {
        const HorizontalPath h = optimize(q, start, opt.optimizer_budget);
        const ControlPath cand = to_control_path(h);
        const double len = cand.length(metric_);
        if (len < best_len) {
          best = cand;
          best_len = len;
        }
      }
    }
    out.witness = best;
    out.upper = std::max(best_len, out.lower);
    const FramePoint end = endpoint(best);
    out.endpoint_mismatch = GroupElement(end.su2, end.y).distance_to(GroupElement(q.su2, q.y));
    return out;
  }

  /// Certified classification of q against radius r; upper bounds are tried
  /// from cheapest to most expensive and the first one below r wins.
  Membership classify(const FramePoint& q, const Mat3& ad, double r, const DistanceOptions& opt,
                      double* lower_out = nullptr) const {
    const double lb = lower(q, ad);
    if (lower_out) *lower_out = lb;
    if (lb > r) return Membership::Outside;
    if (straight_upper(q) <= r) return Membership::Inside;
    if (excluded(q, r)) return Membership::Outside;
    const std::vector<Vec3> reps = representatives(q.su2);
    if (best_plan(q, 0, &reps).length <= r) return Membership::Inside;
    if (opt.word_level >= 1 && best_plan(q, opt.word_level, &reps, r).length <= r) return Membership::Inside;
    if (opt.optimizer_budget > 0) {
      for (const auto& start : starts(q, reps, opt)) {
        if (optimize(q, start, opt.optimizer_budget, r).length <= r) return Membership::Inside;
      }
    }
    return Membership::Ambiguous;
  }

 private:
  struct WordTable {
    double log_lo = 0.0;
    double step = 1.0;
    std::vector<WordSpec> grid;  // optimized word at sigma_k = exp(log_lo + k step)
  };

  void build_word_tables() {
    constexpr double kLogLo = -20.0;
    constexpr double kStep = 0.2;
    const int n = static_cast<int>(std::ceil((std::log(kTwoPi) - kLogLo) / kStep)) + 1;
    for (int level = 1; level <= 2; ++level) {
      for (int axis = 0; axis < 3; ++axis) {
        WordTable& tab = tables_[level - 1][axis];
        tab.log_lo = kLogLo;
        tab.step = kStep;
        tab.grid.clear();
        for (int k = 0; k < n; ++k) {
          tab.grid.push_back(optimize_word(axis, std::min(std::exp(kLogLo + k * kStep), kTwoPi), level));
        }
      }
    }
  }

  /// Minimizes the word cost over t in [t_min, pi] (log-spaced scan, then
  /// golden section) for both role assignments and a few repetition counts.
  WordSpec optimize_word(int axis, double sigma, int level) const {
    WordSpec best;
    best.axis = axis;
    best.sigma = sigma;
    best.level = 0;
    best.cost = sigma == 0.0 ? 0.0 : kInf;
    if (sigma == 0.0) return best;
    const double target = std::abs(sigma);
    for (int reps : {1, 2, 4}) {
      const double per = target / reps;
      if (per >= kTwoPi) continue;
      if (reps > 1 && per < 0.25) break;
      for (bool swapped : {false, true}) {
        const double t_min = std::max(0.5 * per * (1.0 + 1e-12), 1e-300);
        auto cost_at = [&](double t) {
          const double s = solve_s(per, t);
          if (!std::isfinite(s)) return kInf;
          return reps * rep_cost(axis, level, swapped, s, t);
        };
        const double lo = std::log(t_min);
        const double hi = std::log(kPi);
        constexpr int kScan = 10;
        double best_u = hi;
        double best_c = kInf;
        for (int k = 0; k <= kScan; ++k) {
          const double u = lo + (hi - lo) * k / kScan;
          const double c = cost_at(std::exp(u));
          if (c < best_c) {
            best_c = c;
            best_u = u;
          }
        }
        const double step = (hi - lo) / kScan;
        double a = std::max(lo, best_u - step);
        double b = std::min(hi, best_u + step);
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double u1 = b - g * (b - a);
        double u2 = a + g * (b - a);
        double c1 = cost_at(std::exp(u1));
        double c2 = cost_at(std::exp(u2));
        for (int it = 0; it < 14; ++it) {
          if (c1 < c2) {
            b = u2;
            u2 = u1;
            c2 = c1;
            u1 = b - g * (b - a);
            c1 = cost_at(std::exp(u1));
          } else {
            a = u1;
            u1 = u2;
            c1 = c2;
            u2 = a + g * (b - a);
            c2 = cost_at(std::exp(u2));
          }
        }
        double u_best = best_u;
        double c_best = best_c;
        if (c1 < c_best) {
          c_best = c1;
          u_best = u1;
        }
        if (c2 < c_best) {
          c_best = c2;
          u_best = u2;
        }
        if (c_best < best.cost) {
          const double t = std::exp(u_best);
          const double s = solve_s(per, t);
          // Unswapped words produce +f u_axis with f of the sign of s.
          const double sign = (sigma > 0.0) != swapped ? 1.0 : -1.0;
          best.level = level;
          best.s = sign * s;
          best.t = t;
          best.swapped = swapped;
          best.reps = reps;
          best.cost = c_best;
        }
      }
    }
    return best;
  }

  static constexpr int kDefectGrid = 512;
  static double defect_theta(int k) { return (kTwoPi - 1e-3) * k / kDefectGrid; }

  /// Upper bound of int_0^theta delta for theta <= defect_theta(kDefectGrid).
  double defect_integral_upper(double theta) const {
    const int k = std::clamp(static_cast<int>(std::ceil(theta / defect_theta(1))), 0, kDefectGrid);
    return defect_integral_[k];
  }

  Parameters p_;
  DecoupledMetric metric_;
  double sqrt_lambda_min_ = 1.0;
  double a_min_ = 1.0;
  double log_gain_ = 1.0;
  std::vector<double> defect_integral_;
  Vec3 y_weight_;
  Vec3 hopf_weight_;
  std::array<std::array<WordTable, 3>, 2> tables_;
};

/// Word path ending at e^{sigma u_axis} in the frame of m; empty for sigma = 0.
inline ControlPath word_upper_bound(const DecoupledMetric& m, int axis, double sigma, double r_hint,
                                    double eta = 0.1) {
  if (axis < 0 || axis > 2) throw Error(ErrorKind::InvalidParameters, "axis must be 0, 1 or 2");
  const Parameters p = m.params();
  Vec3 mm;
  for (int i = 0; i < 3; ++i) mm(i) = std::min(r_hint / p.a[i], eta);
  const int i = (axis + 1) % 3;
  const int j = (axis + 2) % 3;
  const double rho = mm(i) * mm(j) + mm(axis) * mm(i) * mm(i) + mm(axis) * mm(j) * mm(j);
  if (std::abs(sigma) > rho * (1.0 + 1e-12)) {
    throw Error(ErrorKind::OutOfRange, "|sigma| exceeds rho_i(r_hint)");
  }
  ControlPath path;
  if (sigma == 0.0) return path;
  const DistanceModel model(p);
  WordSpec w = model.word(axis, sigma, 1);
  const WordSpec w2 = model.word(axis, sigma, 2);
  if (w2.cost < w.cost) w = w2;
  model.append_word(w, path.segments);
  return path;
}

/// Bracket for the distance from the identity to p under m.
inline DistanceBracket distance_bracket(const DecoupledMetric& m, const GroupElement& p, int budget = 20) {
  const DistanceModel model(m.params());
  DistanceOptions opt;
  opt.optimizer_budget = budget;
  return model.bracket(to_frame(m, p), opt);
}

}  // namespace su2vol
