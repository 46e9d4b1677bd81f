#pragma once

// Monte Carlo mu_0-volume of metric balls with certified membership.
//
// Samples live in chart coordinates over the fundamental domain
// x1 in (-2pi, 2pi], x2 in (-pi/2, pi/2], x3 in (-pi, pi] times the central
// box that contains every ball of radius r. The proposal is a fixed mixture
// of the uniform law on the outer containment product of hexagons, products
// of per-axis hexagon ladders fitted to the word reach, and the mu_0-uniform
// law on the whole box. The box term bounds every weight, so the estimator
// is unbiased whether or not any containment holds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "su2vol/distance.hpp"
#include "su2vol/frames.hpp"
#include "su2vol/random.hpp"
#include "su2vol/volumes.hpp"

namespace su2vol {

/// mu_0 of SU(2): the chart density |cos x2| integrated over the domain.
inline constexpr double kSU2Volume = 16.0 * kPi * kPi;

inline constexpr std::array<double, 3> kDomainHalfWidth{kTwoPi, kPi / 2.0, kPi};

/// Uniform law on a hexagon truncated to x in [-half, half]: y by the exact
/// inverse of its piecewise-quadratic CDF, then x uniform on the section.
class TruncatedHexagon {
 public:
  TruncatedHexagon(const Hexagon& h, double half) : h_(h), half_(half) {
    ys_ = detail::truncated_breakpoints(h, half);
    cum_.assign(ys_.size(), 0.0);
    w_.resize(ys_.size());
    for (std::size_t k = 0; k < ys_.size(); ++k) w_[k] = detail::truncated_width(h, ys_[k], half);
    for (std::size_t k = 1; k < ys_.size(); ++k) {
      cum_[k] = cum_[k - 1] + 0.5 * (ys_[k] - ys_[k - 1]) * (w_[k] + w_[k - 1]);
    }
  }

  double area() const { return cum_.empty() ? 0.0 : cum_.back(); }

  bool contains(double x, double y) const { return std::abs(x) <= half_ && h_.contains(x, y); }

  /// Maps (u, v) in [0, 1)^2 to a point of the set.
  std::pair<double, double> sample(double u, double v) const {
    const double target = u * area();
    std::size_t k = static_cast<std::size_t>(std::upper_bound(cum_.begin(), cum_.end(), target) - cum_.begin());
    k = std::clamp<std::size_t>(k, 1, ys_.size() - 1) - 1;
    const double len = ys_[k + 1] - ys_[k];
    const double rem = target - cum_[k];
    const double slope = (w_[k + 1] - w_[k]) / len;
    const double disc = std::max(0.0, w_[k] * w_[k] + 2.0 * slope * rem);
    const double denom = w_[k] + std::sqrt(disc);
    double y = ys_[k] + (denom > 0.0 ? 2.0 * rem / denom : 0.0);
    y = std::clamp(y, ys_[k], ys_[k + 1]);
    return {section_point(y, v), y};
  }

 private:
  /// Point at fraction v of the truncated section at height y.
  double section_point(double y, double v) const {
    const auto [lo, hi] = h_.section(y);
    if (hi < lo) return 0.0;
    if (hi - lo >= kFourPi) return -half_ + 2.0 * half_ * v;
    const double total = detail::wrapped_overlap(lo, hi, half_);
    double want = v * total;
    const double k0 = std::floor((-half_ - hi) / kFourPi);
    double last = 0.0;
    for (double k = k0; lo + k * kFourPi <= half_; k += 1.0) {
      const double a = std::max(lo + k * kFourPi, -half_);
      const double b = std::min(hi + k * kFourPi, half_);
      if (b <= a) continue;
      if (want <= b - a) return a + want;
      want -= b - a;
      last = b;
    }
    return last;
  }

  Hexagon h_;
  double half_;
  std::vector<double> ys_;
  std::vector<double> cum_;
  std::vector<double> w_;
};

/// Equal-weight mixture of truncated hexagons on one axis.
class HexagonMixture {
 public:
  void add(const TruncatedHexagon& h) {
    if (h.area() > 0.0 && std::isfinite(h.area())) parts_.push_back(h);
  }
  bool empty() const { return parts_.empty(); }

  double density(double x, double y) const {
    double q = 0.0;
    for (const auto& h : parts_)
      if (h.contains(x, y)) q += 1.0 / h.area();
    return q / static_cast<double>(parts_.size());
  }

  /// u selects the member and is then reused, rescaled, inside it.
  std::pair<double, double> sample(double u, double v) const {
    const double k_real = u * static_cast<double>(parts_.size());
    const std::size_t k = std::min(parts_.size() - 1, static_cast<std::size_t>(k_real));
    return parts_[k].sample(std::clamp(k_real - static_cast<double>(k), 0.0, 1.0), v);
  }

 private:
  std::vector<TruncatedHexagon> parts_;
};

struct VolumeOptions {
  double eta = kDefaultEta;
  double outer_constant = kDefaultOuterConstant;
  // Ball-adapted components: on axis i, the commutator extent w_i alone,
  // extents halving from w_i down to w_i / ladder_depth, and extents halving
  // from max(w_i, C rho_i) down to min(w_i, C rho_i) / ladder_depth, where
  // w_i is the word reach of axis i.
  double ladder_depth = 256.0;
  double outer_share = 0.2;           // of the hexagon samples, drawn from the outer set
  double containment_fraction = 0.9;  // share of samples drawn from hexagon products
  double z = 2.576;                   // two-sided 99% normal quantile
  DistanceOptions distance;
};

/// Weight truncation levels w_max 4^-k, k = 1..kTruncationLevels, for the
/// conservative lower bound. Each level and the untruncated sum give a normal
/// bound and a Chernoff bound; kTruncatedZ and kTruncatedLogInvDelta split
/// one-sided level 0.005 over those 2 (kTruncationLevels + 1) bounds.
inline constexpr int kTruncationLevels = 40;
inline constexpr double kTruncatedConfidence = 0.005;
inline constexpr int kTruncatedBounds = 2 * (kTruncationLevels + 1);
inline constexpr double kTruncatedZ = 3.842170200596989;

struct VolumeBracket {
  double lower = 0.0;            // certified-inside mass
  double upper = 0.0;            // certified-inside plus ambiguous mass
  double lower_halfwidth = 0.0;  // z * standard error
  double upper_halfwidth = 0.0;
  // Largest confidence lower bound over weight truncations: truncating at a
  // level fixed by the proposal estimates the mass of a subset of the ball.
  double lower_bound = 0.0;
  double ambiguous_mass = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t n_inside = 0;
  std::uint64_t n_ambiguous = 0;
  bool outer_regime = false;        // r <= eta a2, so the containment theorem applies
  double outside_containment = 0.0;  // certified-inside mass outside the outer containment set
  double containment_measure = 0.0;  // Lebesgue measure of the truncated outer containment set

  double lower_conservative() const { return std::max(0.0, lower_bound); }
  double upper_conservative() const { return upper + upper_halfwidth; }
  bool low_confidence() const { return upper > 0.0 && ambiguous_mass > 0.2 * upper; }
};

namespace detail {

struct MassAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  /// n * sample variance.
  double scaled_variance() const {
    if (n < 2) return 0.0;
    const double mean = sum / n;
    return std::max(0.0, sum_sq - n * mean * mean) * n / (n - 1.0);
  }
};

/// Smallest q <= p with n KL(p || q) <= log(1 / delta): a lower confidence
/// bound for the mean of n independent [0, 1] terms with sample mean p.
/// Positive whenever p is, barring underflow.
inline double chernoff_lower(double p, double n, double log_inv_delta) {
  if (!(p > 0.0)) return 0.0;
  p = std::min(p, 1.0);
  const auto kl = [p](double q) {
    double v = p * std::log(p / q);
    if (p < 1.0) v += (1.0 - p) * std::log1p((q - p) / (1.0 - q));
    return v;
  };
  // Bisect on t = log(p / q); KL >= p t - p bounds the bracket.
  const double target = log_inv_delta / n;
  double t_lo = 0.0;
  double t_hi = (target + p) / p;
  for (int it = 0; it < 200 && t_hi - t_lo > 1e-13 * (1.0 + t_hi); ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    (kl(p * std::exp(-mid)) > target ? t_hi : t_lo) = mid;
  }
  return p * std::exp(-t_hi);
}

}  // namespace detail

/// mu_0(B_g(r)) bracket from n samples; deterministic in (params, r, n, seed).
inline VolumeBracket ball_volume(const DistanceModel& model, double r, std::uint64_t n, std::uint64_t seed,
                                 const VolumeOptions& opt = {}) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidParameters, "radius must be positive");
  if (n < 2) throw Error(ErrorKind::InvalidParameters, "need at least two samples");
  const Parameters p = model.params();
  EstimatorInputs in{r, p, opt.eta};
  in.validate();

  VolumeBracket out;
  out.n_samples = n;
  out.seed = seed;
  out.outer_regime = r <= opt.eta * p.a[1];

  const MRho mr = m_rho(in);
  const Vec3 box = linear_upper(in);
  const double box_volume = 8.0 * box.prod();

  // Mixture components, each a product over axes of hexagon mixtures: the
  // outer containment product H(C rho_i, r / a_i, r), then the ball-adapted
  // product whose axis i mixes H(e, r / a_i, r) over its ladder of extents e.
  using Component = std::array<HexagonMixture, 3>;
  std::vector<Component> parts;
  auto add_part = [&](const std::array<std::vector<double>, 3>& extents) {
    Component k;
    for (int i = 0; i < 3; ++i) {
      for (double e : extents[i])
        k[i].add(TruncatedHexagon(Hexagon{e, r / p.a[i], r, p.d}, kDomainHalfWidth[i]));
      if (k[i].empty()) return;
    }
    parts.push_back(std::move(k));
  };
  const Vec3 outer_extent = opt.outer_constant * mr.rho;
  add_part({{{outer_extent(0)}, {outer_extent(1)}, {outer_extent(2)}}});
  const bool has_outer = !parts.empty();
  if (has_outer) {
    out.containment_measure = 1.0;
    for (int i = 0; i < 3; ++i)
      out.containment_measure *=
          TruncatedHexagon(Hexagon{outer_extent(i), r / p.a[i], r, p.d}, kDomainHalfWidth[i]).area();
  }
  std::array<std::vector<double>, 3> word_ladder, wide_ladder;
  for (int i = 0; i < 3; ++i) {
    const double reach = model.word_reach(i, r);
    auto halve = [&](double top, double bottom, std::vector<double>& out) {
      for (double e = top; e >= bottom && out.size() < 64; e *= 0.5) out.push_back(e);
    };
    halve(reach, reach / opt.ladder_depth, word_ladder[i]);
    halve(std::max(reach, outer_extent(i)), std::min(reach, outer_extent(i)) / opt.ladder_depth, wide_ladder[i]);
  }
  add_part({{{word_ladder[0].front()}, {word_ladder[1].front()}, {word_ladder[2].front()}}});
  add_part(word_ladder);
  add_part(wide_ladder);

  const double nd = static_cast<double>(n);
  const std::uint64_t n_parts_total =
      parts.empty() ? 0 : static_cast<std::uint64_t>(std::llround(opt.containment_fraction * nd));
  // The outer set takes outer_share of the hexagon samples; the rest split evenly.
  std::vector<std::uint64_t> n_part(parts.size(), 0);
  if (!parts.empty()) {
    const std::uint64_t n_outer =
        has_outer ? static_cast<std::uint64_t>(std::llround(opt.outer_share * static_cast<double>(n_parts_total))) : 0;
    if (has_outer) n_part[0] = n_outer;
    const std::size_t first = has_outer ? 1 : 0;
    const std::size_t rest = parts.size() - first;
    if (rest == 0) {
      n_part[0] = n_parts_total;
    } else {
      const std::uint64_t left = n_parts_total - n_outer;
      for (std::size_t c = first; c < parts.size(); ++c) {
        n_part[c] = left / rest + (c - first < left % rest ? 1 : 0);
      }
    }
  }
  const std::uint64_t n_box = n - n_parts_total;

  auto part_density = [&](std::size_t c, const Vec3& x, const Vec3& y) {
    double q = 1.0;
    for (int i = 0; i < 3 && q > 0.0; ++i) q *= parts[c][i].density(x(i), y(i));
    return q;
  };
  auto density = [&](const Vec3& x, const Vec3& y) {
    double q = static_cast<double>(n_box) / nd * jacobian(x(1)) / (kSU2Volume * box_volume);
    for (std::size_t c = 0; c < parts.size(); ++c) {
      q += static_cast<double>(n_part[c]) / nd * part_density(c, x, y);
    }
    return q;
  };

  Rng rng(seed);
  std::vector<detail::MassAccumulator> lo_acc(parts.size() + 1), hi_acc(parts.size() + 1);
  std::vector<std::vector<double>> inside_weights(parts.size() + 1);
  double outside_k = 0.0;

  auto evaluate = [&](const Vec3& x, const Vec3& y, std::size_t stratum) {
    if (std::abs(y(0)) > box(0) || std::abs(y(1)) > box(1) || std::abs(y(2)) > box(2)) {
      lo_acc[stratum].add(0.0);
      hi_acc[stratum].add(0.0);
      return;
    }
    const double weight = jacobian(x(1)) / density(x, y);
    const FramePoint q{psi(Coordinates{x, Vec3::Zero()}).su2(), y};
    const Membership mem = model.classify(q, adjoint_matrix(q.su2), r, opt.distance);
    if (mem == Membership::Inside) {
      ++out.n_inside;
      if (!has_outer || part_density(0, x, y) == 0.0) outside_k += weight;
    }
    if (mem == Membership::Ambiguous) ++out.n_ambiguous;
    if (mem == Membership::Inside) inside_weights[stratum].push_back(weight);
    lo_acc[stratum].add(mem == Membership::Inside ? weight : 0.0);
    hi_acc[stratum].add(mem == Membership::Outside ? 0.0 : weight);
  };

  for (std::size_t c = 0; c < parts.size(); ++c) {
    if (n_part[c] == 0) continue;
    const std::vector<double> u = latin_hypercube(n_part[c], 6, rng);
    for (std::uint64_t k = 0; k < n_part[c]; ++k) {
      Vec3 x, y;
      for (int i = 0; i < 3; ++i) {
        const auto [xi, yi] = parts[c][i].sample(u[k * 6 + 2 * i], u[k * 6 + 2 * i + 1]);
        x(i) = xi;
        y(i) = yi;
      }
      evaluate(x, y, c);
    }
  }
  if (n_box > 0) {
    const std::vector<double> u = latin_hypercube(n_box, 6, rng);
    for (std::uint64_t k = 0; k < n_box; ++k) {
      const double* w = &u[k * 6];
      const Vec3 x(kTwoPi * (2.0 * w[0] - 1.0), std::asin(2.0 * w[1] - 1.0), kPi * (2.0 * w[2] - 1.0));
      const Vec3 y(box(0) * (2.0 * w[3] - 1.0), box(1) * (2.0 * w[4] - 1.0), box(2) * (2.0 * w[5] - 1.0));
      evaluate(x, y, parts.size());
    }
  }

  double lo_sum = 0.0, hi_sum = 0.0, lo_var = 0.0, hi_var = 0.0;
  for (std::size_t c = 0; c < lo_acc.size(); ++c) {
    lo_sum += lo_acc[c].sum;
    hi_sum += hi_acc[c].sum;
    lo_var += lo_acc[c].scaled_variance();
    hi_var += hi_acc[c].scaled_variance();
  }
  out.lower = lo_sum / nd;
  out.upper = hi_sum / nd;
  out.ambiguous_mass = out.upper - out.lower;
  out.lower_halfwidth = opt.z * std::sqrt(lo_var) / nd;
  out.upper_halfwidth = opt.z * std::sqrt(hi_var) / nd;
  out.outside_containment = outside_k / nd;

  // J <= 1 and the box term of the density bound every weight by w_max.
  out.lower_bound = out.lower - kTruncatedZ * std::sqrt(lo_var) / nd;
  if (n_box > 0) {
    const double log_inv_delta = std::log(kTruncatedBounds / kTruncatedConfidence);
    double level = kSU2Volume * box_volume * nd / static_cast<double>(n_box);
    out.lower_bound = std::max(out.lower_bound, level * detail::chernoff_lower(out.lower / level, nd, log_inv_delta));
    for (int k = 1; k <= kTruncationLevels; ++k) {
      level *= 0.25;
      double sum = 0.0, var = 0.0;
      for (std::size_t c = 0; c < inside_weights.size(); ++c) {
        detail::MassAccumulator acc;
        for (double w : inside_weights[c])
          if (w <= level) acc.add(w);
        acc.n = lo_acc[c].n;
        sum += acc.sum;
        var += acc.scaled_variance();
      }
      out.lower_bound = std::max(out.lower_bound, (sum - kTruncatedZ * std::sqrt(var)) / nd);
      out.lower_bound = std::max(out.lower_bound, level * detail::chernoff_lower(sum / (nd * level), nd, log_inv_delta));
    }
  }
  return out;
}

inline VolumeBracket ball_volume(const DecoupledMetric& m, double r, std::uint64_t n, std::uint64_t seed,
                                 const VolumeOptions& opt = {}) {
  return ball_volume(DistanceModel(m.params()), r, n, seed, opt);
}

}  // namespace su2vol
