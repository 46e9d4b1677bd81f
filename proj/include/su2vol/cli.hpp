#pragma once

// Batch commands behind the `su2vol` executable. Each returns an exit code:
// 0 success, 1 a check failed, 2 usage or configuration error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "su2vol/balls.hpp"
#include "su2vol/identities.hpp"
#include "su2vol/io.hpp"
#include "su2vol/metrics.hpp"
#include "su2vol/sweep.hpp"
#include "su2vol/volumes.hpp"

namespace su2vol::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Config file (optional) followed by `key = value` overrides from flags.
struct ConfigSource {
  std::string path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

inline Config resolve_config(const ConfigSource& src) {
  Config c;
  if (!src.path.empty()) c = load_config(src.path);
  for (const auto& [k, v] : src.overrides) apply_config_entry(c, k, v);
  validate_config(c);
  return c;
}

inline const char* extension(OutputFormat f) { return f == OutputFormat::Json ? ".json" : ".csv"; }

/// Writes a file under the output directory and returns its path.
inline std::filesystem::path write_output(const Config& c, const std::string& name, const std::string& body) {
  const std::filesystem::path dir(c.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Parse, "cannot create output directory '" + c.out_dir + "': " + ec.message());
  const auto path = dir / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  if (!out) throw Error(ErrorKind::Parse, "cannot write '" + path.string() + "'");
  return path;
}

inline std::string config_comment_block(const Config& c) {
  std::string out;
  for (const auto& [k, v] : config_entries(c)) out += "# " + k + " = " + v + "\n";
  return out;
}

/// Table with the configuration as leading comments (CSV) or a `config` member (JSON).
inline std::string render_table(const Config& c, const std::vector<std::string>& cols,
                                const std::vector<std::vector<std::string>>& rows) {
  if (c.format == OutputFormat::Json) {
    Json j;
    j["config"] = config_json(c);
    Json arr = Json::array();
    for (const auto& row : rows) {
      Json item;
      for (std::size_t k = 0; k < cols.size(); ++k) item[cols[k]] = row[k];
      arr.push_back(item);
    }
    j["rows"] = arr;
    return j.dump(2) + "\n";
  }
  std::string out = config_comment_block(c);
  for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + csv_escape(row[k]);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// verify-identities

inline IdentitySuiteOptions identity_options(const Config& c) {
  IdentitySuiteOptions opt;
  opt.seed = c.sweep.seed;
  opt.word_tolerance = c.sweep.tolerance;
  opt.exact_tolerance = std::min(opt.exact_tolerance, c.sweep.tolerance);
  return opt;
}

inline int cmd_verify_identities(const Config& c, std::ostream& log) {
  const IdentityReport report = run_identity_suite(identity_options(c));
  std::vector<std::vector<std::string>> rows;
  for (const auto& chk : report.checks) {
    rows.push_back({chk.name, format_number(chk.residual), format_number(chk.tolerance),
                    std::to_string(chk.points), chk.pass() ? "pass" : "FAIL"});
    log << (chk.pass() ? "pass " : "FAIL ") << chk.name << " residual=" << format_number(chk.residual)
        << " tolerance=" << format_number(chk.tolerance) << "\n";
  }
  const auto path = write_output(c, std::string("identities") + extension(c.format),
                                 render_table(c, {"check", "residual", "tolerance", "points", "status"}, rows));
  log << "max residual " << format_number(report.max_residual()) << "; table written to " << path.string() << "\n";
  return report.pass() ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// reduce

inline Json reduce_json(const MetricTensor& g) {
  const DecoupledMetric m = reduce_to_decoupled(g);
  const DecoupledResiduals res = check_decoupled(m);
  const LiftResiduals lift = check_lift(g, lift_to_decoupled(g));
  Json j;
  j["a"] = {m.a(0), m.a(1), m.a(2)};
  j["d"] = m.d();
  j["center_dimension"] = g.n_center();
  j["min_eigenvalue"] = g.min_eigenvalue();
  j["residuals"] = {{"bracket", res.bracket},
                    {"orthogonality", res.orthogonality},
                    {"f_norm", res.f_norm},
                    {"f_central", res.f_central},
                    {"milnor_norm", res.milnor_norm},
                    {"a_norm", res.a_norm},
                    {"lift_frame_orthonormality", lift.frame_orthonormality},
                    {"lift_partial_isometry", lift.partial_isometry},
                    {"lift_homomorphism", lift.homomorphism}};
  return j;
}

/// Reads a Gram matrix from `path` ("-" for stdin) and prints its parameters as JSON.
inline int cmd_reduce(const std::string& path, std::ostream& out) {
  std::string text;
  if (path == "-") {
    text.assign(std::istreambuf_iterator<char>(std::cin), {});
  } else {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, "cannot open metric file '" + path + "'");
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  out << reduce_json(metric_from_text(text)).dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// estimate

inline int cmd_estimate(const Config& c, std::ostream& log) {
  const auto grid = sweep_grid(c.sweep);
  std::vector<std::vector<std::string>> rows;
  bool ok = true;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto& [p, r] = grid[k];
    const EstimatorInputs in{r, p, c.sweep.eta};
    const Vec3 f = vbar_g_factors(in);
    const double v = f.prod();
    const double v2 = vbar_g(EstimatorInputs{2.0 * r, p, c.sweep.eta});
    const double bound = vbar_g_doubling_bound(p, c.sweep.eta);
    ok = ok && v2 / v <= bound;
    const auto fmt = format_number;
    rows.push_back({std::to_string(k), fmt(p.a[0]), fmt(p.a[1]), fmt(p.a[2]), fmt(p.d), fmt(r), fmt(f(0)), fmt(f(1)),
                    fmt(f(2)), fmt(v), fmt(v2), fmt(v2 / v), fmt(bound),
                    r <= c.sweep.eta * p.a[1] ? "outer" : "linear"});
  }
  const auto path = write_output(c, std::string("estimate") + extension(c.format),
                                 render_table(c,
                                              {"index", "a1", "a2", "a3", "d", "r", "factor1", "factor2", "factor3",
                                               "vbarg", "vbarg_2r", "vbarg2r_ratio", "calculus_bound", "regime"},
                                              rows));
  log << grid.size() << " cells written to " << path.string() << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// ball-volume

inline Json bracket_json(const VolumeBracket& b) {
  return {{"lower", b.lower},
          {"upper", b.upper},
          {"lower_halfwidth", b.lower_halfwidth},
          {"upper_halfwidth", b.upper_halfwidth},
          {"lower_conservative", b.lower_conservative()},
          {"upper_conservative", b.upper_conservative()},
          {"ambiguous_mass", b.ambiguous_mass},
          {"samples", b.n_samples},
          {"inside_hits", b.n_inside},
          {"ambiguous_hits", b.n_ambiguous},
          {"regime", b.outer_regime ? "outer" : "linear"},
          {"outside_containment", b.outside_containment},
          {"low_confidence", b.low_confidence()}};
}

inline int cmd_ball_volume(const Config& c, const Parameters& p, double r, std::ostream& out) {
  const EstimatorInputs in{r, p, c.sweep.eta};
  in.validate();
  VolumeOptions vo;
  vo.eta = c.sweep.eta;
  vo.outer_constant = c.sweep.outer_constant;
  vo.distance.word_level = c.sweep.word_level;
  vo.distance.optimizer_budget = c.sweep.optimizer_budget;
  vo.distance.starts = c.sweep.optimizer_starts;
  const VolumeBracket b = ball_volume(DistanceModel(p), r, c.sweep.samples, c.sweep.seed, vo);
  Json j;
  j["config"] = config_json(c);
  j["a"] = {p.a[0], p.a[1], p.a[2]};
  j["d"] = p.d;
  j["r"] = r;
  j["vbarg"] = vbar_g(in);
  j["volume"] = bracket_json(b);
  const std::string body = j.dump(2) + "\n";
  write_output(c, "ball_volume.json", body);
  out << body;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

/// Report plus summary; wall time goes to a separate file so reports stay reproducible.
inline int cmd_sweep(const Config& c, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  const SweepReport report = sweep(c.sweep);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string body = c.format == OutputFormat::Json ? report_json(c, report).dump(2) + "\n" : report_csv(c, report);
  const auto report_path = write_output(c, std::string("sweep") + extension(c.format), body);
  Json summary;
  summary["config"] = config_json(c);
  summary["summary"] = summary_json(report.summary);
  write_output(c, "summary.json", summary.dump(2) + "\n");
  write_output(c, "runtime.json", Json{{"seconds", seconds}, {"cells", report.cells.size()}}.dump(2) + "\n");

  const SweepSummary& s = report.summary;
  log << s.cells << " cells, " << s.failed_cells << " failed, " << s.low_confidence_cells << " low confidence\n"
      << "sandwich envelope [" << format_number(s.sandwich_min) << ", " << format_number(s.sandwich_max) << "]\n"
      << "sup doubling " << format_number(s.sup_doubling) << " vs calculus bound x spread "
      << format_number(s.calculus_bound * s.spread()) << "\n"
      << "runtime " << format_number(seconds) << " s; report written to " << report_path.string() << "\n"
      << (s.pass() ? "pass" : "FAIL") << "\n";
  return s.pass() ? kExitOk : kExitCheckFailed;
}

}  // namespace su2vol::cli
