#pragma once

// Parameter sweep comparing Monte Carlo ball volumes with the closed-form
// estimator, plus empirical doubling ratios.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "su2vol/balls.hpp"
#include "su2vol/frames.hpp"
#include "su2vol/metrics.hpp"
#include "su2vol/random.hpp"
#include "su2vol/volumes.hpp"

namespace su2vol {

inline constexpr double kRoundtripTolerance = 1e-8;

struct SweepConfig {
  std::vector<double> a_values{0.01, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> d_values{0.0, 1.0, 1e2, 1e4};
  std::vector<double> r_values{0.01, 0.1, 1.0, 10.0, 100.0};
  double eta = kDefaultEta;
  double iota = kDefaultIota;
  double outer_constant = kDefaultOuterConstant;
  std::uint64_t seed = 20240601;
  std::uint64_t samples = 10000;
  int threads = 1;
  int word_level = 2;
  int optimizer_budget = 20;  // SQP iterations per start for points the plans leave ambiguous
  int optimizer_starts = 1;
  double tolerance = 1e-10;  // identity spot-check tolerance
};

struct SweepCell {
  std::size_t index = 0;
  Parameters params;
  double r = 0.0;
  double vbar = 0.0;
  double vbar2 = 0.0;
  double calculus_bound = 0.0;
  VolumeBracket vol;
  VolumeBracket vol2;
  double inner_ratio = 0.0;        // |K_inner| / prod vbar_H over its factors
  double identity_residual = 0.0;  // commutator word with v's in place of u's
  double roundtrip_error = 0.0;    // relative parameter error of reduce(from_parameters); NaN if skipped
  std::string error;

  bool ok() const { return error.empty(); }
  double vbar_ratio() const { return vbar2 / vbar; }
  double sandwich_lower() const { return vol.lower / vbar; }
  double sandwich_upper() const { return vol.upper / vbar; }
  double sandwich2_lower() const { return vol2.lower / vbar2; }
  double sandwich2_upper() const { return vol2.upper / vbar2; }
  double doubling_upper() const {
    const double lo = vol.lower_conservative();
    return lo > 0.0 ? vol2.upper_conservative() / lo : INFINITY;
  }
  bool low_confidence() const { return vol.low_confidence() || vol2.low_confidence(); }
};

struct SweepSummary {
  std::size_t cells = 0;
  std::size_t failed_cells = 0;
  std::size_t low_confidence_cells = 0;
  std::size_t linear_regime_cells = 0;
  double sandwich_min = INFINITY;   // empirical c
  double sandwich_max = 0.0;        // empirical C
  double sup_doubling = 0.0;        // max conservative vol(2r).upper / vol(r).lower
  double sup_vbar_ratio = 0.0;
  double calculus_bound = 0.0;
  double max_identity_residual = 0.0;
  double max_roundtrip_error = 0.0;
  std::size_t roundtrip_skipped = 0;
  bool envelope_ok = false;         // sandwich ratios finite and positive everywhere
  bool doubling_ok = false;         // sup_doubling <= calculus_bound * (C / c)
  bool vbar_ok = false;             // vbar(2r) / vbar(r) <= calculus bound at every cell
  bool identities_ok = false;

  double spread() const { return sandwich_max / sandwich_min; }
  bool pass() const { return envelope_ok && doubling_ok && vbar_ok && identities_ok && failed_cells == 0; }
};

struct SweepReport {
  SweepConfig config;
  std::vector<SweepCell> cells;
  SweepSummary summary;
};

/// Ascending triples from a_values (with repetition) x d x r, in a fixed order.
inline std::vector<std::pair<Parameters, double>> sweep_grid(const SweepConfig& cfg) {
  std::vector<double> a = cfg.a_values;
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  std::vector<std::pair<Parameters, double>> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i; j < a.size(); ++j)
      for (std::size_t k = j; k < a.size(); ++k)
        for (double d : cfg.d_values)
          for (double r : cfg.r_values) out.push_back({Parameters{{a[i], a[j], a[k]}, d}, r});
  return out;
}

namespace detail {

inline double identity_spot_check(const Parameters& p, std::uint64_t seed) {
  Rng rng(seed);
  const DecoupledMetric m = from_parameters(p);
  double worst = 0.0;
  for (int rep = 0; rep < 4; ++rep) {
    const double s = rng.uniform(-kPi, kPi);
    const double t = rng.uniform(-0.5 * kPi, 0.5 * kPi);
    const auto word = commutator_word(m.v()[0], m.v()[1], s, t);
    const GroupElement g = product_of_exponentials({word.begin(), word.end()});
    const double f = commutator_identity(s, t).f;
    worst = std::max(worst, g.distance_to(GroupElement(exp_su2(f * m.u(2).su2()), Vec3::Zero())));
  }
  return worst;
}

/// Reference-basis condition number of the canonical gram, per (v_i, f_i) block.
inline double reference_condition(const Parameters& p) {
  double worst = 1.0;
  for (int i = 0; i < 3; ++i) {
    const double trace = p.a[i] * p.a[i] + p.d * p.d + 1.0;
    worst = std::max(worst, trace * trace / (p.a[i] * p.a[i]));
  }
  return worst;
}

inline constexpr double kMaxRoundtripCondition = 1e12;

/// NaN when the reference gram is too ill-conditioned to be represented in doubles.
inline double roundtrip_error(const Parameters& p) {
  if (reference_condition(p) > kMaxRoundtripCondition) return std::numeric_limits<double>::quiet_NaN();
  const Parameters back = reduce_to_decoupled(from_parameters(p).tensor()).params();
  double worst = std::abs(back.d - p.d) / std::max(1.0, p.d);
  for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(back.a[i] - p.a[i]) / p.a[i]);
  return worst;
}

}  // namespace detail

inline SweepCell sweep_cell(const SweepConfig& cfg, std::size_t index, const Parameters& p, double r) {
  SweepCell cell;
  cell.index = index;
  cell.params = p;
  cell.r = r;
  try {
    const EstimatorInputs in{r, p, cfg.eta};
    const EstimatorInputs in2{2.0 * r, p, cfg.eta};
    cell.vbar = vbar_g(in);
    cell.vbar2 = vbar_g(in2);
    cell.calculus_bound = vbar_g_doubling_bound(p, cfg.eta);
    const ContainmentSet inner = containment_sets(in, ContainmentSide::Inner, cfg.outer_constant, cfg.iota);
    cell.inner_ratio = inner.chart_measure() / inner.vbar_product();
    VolumeOptions vo;
    vo.eta = cfg.eta;
    vo.outer_constant = cfg.outer_constant;
    vo.distance.word_level = cfg.word_level;
    vo.distance.optimizer_budget = cfg.optimizer_budget;
    vo.distance.starts = cfg.optimizer_starts;
    const DistanceModel model(p);
    cell.vol = ball_volume(model, r, cfg.samples, derive_seed(cfg.seed, 2 * index), vo);
    cell.vol2 = ball_volume(model, 2.0 * r, cfg.samples, derive_seed(cfg.seed, 2 * index + 1), vo);
    cell.identity_residual = detail::identity_spot_check(p, derive_seed(cfg.seed ^ 0x5bd1e995ULL, index));
    cell.roundtrip_error = detail::roundtrip_error(p);
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

inline SweepSummary summarize(const SweepConfig& cfg, const std::vector<SweepCell>& cells) {
  SweepSummary s;
  s.cells = cells.size();
  bool envelope = true;
  bool vbar = true;
  for (const auto& c : cells) {
    if (!c.ok()) {
      ++s.failed_cells;
      continue;
    }
    if (c.low_confidence()) ++s.low_confidence_cells;
    if (!c.vol.outer_regime) ++s.linear_regime_cells;
    for (double lo : {c.sandwich_lower(), c.sandwich2_lower()}) {
      envelope = envelope && std::isfinite(lo) && lo > 0.0;
      s.sandwich_min = std::min(s.sandwich_min, lo);
    }
    for (double hi : {c.sandwich_upper(), c.sandwich2_upper()}) {
      envelope = envelope && std::isfinite(hi) && hi > 0.0;
      s.sandwich_max = std::max(s.sandwich_max, hi);
    }
    s.sup_doubling = std::max(s.sup_doubling, c.doubling_upper());
    s.sup_vbar_ratio = std::max(s.sup_vbar_ratio, c.vbar_ratio());
    s.calculus_bound = std::max(s.calculus_bound, c.calculus_bound);
    vbar = vbar && c.vbar_ratio() <= c.calculus_bound;
    s.max_identity_residual = std::max(s.max_identity_residual, c.identity_residual);
    if (std::isnan(c.roundtrip_error)) {
      ++s.roundtrip_skipped;
    } else {
      s.max_roundtrip_error = std::max(s.max_roundtrip_error, c.roundtrip_error);
    }
  }
  s.envelope_ok = envelope && s.failed_cells < s.cells;
  s.doubling_ok = std::isfinite(s.sup_doubling) && s.envelope_ok &&
                  s.sup_doubling <= s.calculus_bound * s.spread();
  s.vbar_ok = vbar;
  s.identities_ok = s.max_identity_residual <= cfg.tolerance && s.max_roundtrip_error <= kRoundtripTolerance;
  return s;
}

/// Runs every cell (in parallel when threads > 1) and merges by index, so the
/// report depends only on the configuration.
inline SweepReport sweep(const SweepConfig& cfg) {
  const auto grid = sweep_grid(cfg);
  if (grid.empty()) throw Error(ErrorKind::InvalidParameters, "sweep grid is empty");
  SweepReport report;
  report.config = cfg;
  report.cells.resize(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      report.cells[k] = sweep_cell(cfg, k, grid[k].first, grid[k].second);
    }
  };
  const int threads = std::max(1, cfg.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  report.summary = summarize(cfg, report.cells);
  return report;
}

}  // namespace su2vol
