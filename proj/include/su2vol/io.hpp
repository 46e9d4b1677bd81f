#pragma once

// Configuration files and serialization of metrics, paths and reports.
//
// Config files hold one `key = value` per line; `#` starts a comment. Lists
// are comma separated, or `log:LO:HI:COUNT` for COUNT log-spaced values.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "su2vol/frames.hpp"
#include "su2vol/metrics.hpp"
#include "su2vol/sweep.hpp"

namespace su2vol {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips a double; fixed across runs.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// JSON has no infinities; they are written as strings.
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

// ---------------------------------------------------------------------------
// Config

enum class OutputFormat { Csv, Json };

struct Config {
  SweepConfig sweep;
  std::string out_dir = "su2vol_out";
  OutputFormat format = OutputFormat::Csv;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::Parse, "key '" + key + "': not a finite number: '" + t + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(ErrorKind::Parse, "key '" + key + "': not a non-negative integer: '" + t + "'");
  }
  try {
    return std::stoull(t);
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parse, "key '" + key + "': integer out of range");
  }
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::vector<double> out;
  if (t.rfind("log:", 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(t.substr(4));
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 3) throw Error(ErrorKind::Parse, "key '" + key + "': expected log:LO:HI:COUNT");
    const double lo = parse_double(key, parts[0]);
    const double hi = parse_double(key, parts[1]);
    const auto count = parse_uint(key, parts[2]);
    if (!(lo > 0.0) || !(hi >= lo) || count == 0) {
      throw Error(ErrorKind::Parse, "key '" + key + "': log range needs 0 < LO <= HI and COUNT >= 1");
    }
    for (std::uint64_t k = 0; k < count; ++k) {
      const double f = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
      out.push_back(lo * std::pow(hi / lo, f));
    }
    return out;
  }
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw Error(ErrorKind::Parse, "key '" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Checks documented ranges; violations are configuration errors.
inline void validate_config(const Config& c) {
  const SweepConfig& s = c.sweep;
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Parse, what); };
  if (s.a_values.empty() || s.d_values.empty() || s.r_values.empty()) fail("grid lists must be nonempty");
  for (double a : s.a_values)
    if (!(a > 0.0) || !std::isfinite(a)) fail("a values must be positive");
  for (double d : s.d_values)
    if (!(d >= 0.0) || !std::isfinite(d)) fail("d values must be >= 0");
  for (double r : s.r_values)
    if (!(r > 0.0) || !std::isfinite(r)) fail("r values must be positive");
  if (!(s.eta > 0.0) || s.eta > 0.5) fail("eta must lie in (0, 0.5]");
  if (!(s.iota > 0.0) || s.iota > kPi / 3.0 + 1e-15) fail("iota must lie in (0, pi/3]");
  if (!(s.outer_constant >= 1.0) || !std::isfinite(s.outer_constant)) fail("c_outer must be >= 1");
  if (s.samples < 2) fail("samples must be >= 2");
  if (s.threads < 1 || s.threads > 1024) fail("threads must lie in [1, 1024]");
  if (s.word_level < 0 || s.word_level > 2) fail("word_level must be 0, 1 or 2");
  if (s.optimizer_budget < 0) fail("optimizer_budget must be >= 0");
  if (s.optimizer_starts < 1) fail("optimizer_starts must be >= 1");
  if (!(s.tolerance > 0.0)) fail("tolerance must be positive");
}

inline void apply_config_entry(Config& c, const std::string& key, const std::string& value) {
  SweepConfig& s = c.sweep;
  if (key == "eta") s.eta = detail::parse_double(key, value);
  else if (key == "iota") s.iota = detail::parse_double(key, value);
  else if (key == "c_outer") s.outer_constant = detail::parse_double(key, value);
  else if (key == "seed") s.seed = detail::parse_uint(key, value);
  else if (key == "samples") s.samples = detail::parse_uint(key, value);
  else if (key == "threads") s.threads = static_cast<int>(detail::parse_uint(key, value));
  else if (key == "word_level") s.word_level = static_cast<int>(detail::parse_uint(key, value));
  else if (key == "optimizer_budget") s.optimizer_budget = static_cast<int>(detail::parse_uint(key, value));
  else if (key == "optimizer_starts") s.optimizer_starts = static_cast<int>(detail::parse_uint(key, value));
  else if (key == "tolerance") s.tolerance = detail::parse_double(key, value);
  else if (key == "a") s.a_values = detail::parse_list(key, value);
  else if (key == "d") s.d_values = detail::parse_list(key, value);
  else if (key == "r") s.r_values = detail::parse_list(key, value);
  else if (key == "out") c.out_dir = detail::trim(value);
  else if (key == "format") {
    const std::string v = detail::trim(value);
    if (v == "csv") c.format = OutputFormat::Csv;
    else if (v == "json") c.format = OutputFormat::Json;
    else throw Error(ErrorKind::Parse, "format must be csv or json");
  } else {
    throw Error(ErrorKind::Parse, "unknown config key '" + key + "'");
  }
}

inline Config parse_config(std::istream& in) {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_config_entry(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  validate_config(c);
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, "cannot open config file '" + path + "'");
  return parse_config(in);
}

inline std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_number(v[k]);
  return s;
}

/// The configuration as `key = value` lines in parse order.
inline std::vector<std::pair<std::string, std::string>> config_entries(const Config& c) {
  const SweepConfig& s = c.sweep;
  return {{"eta", format_number(s.eta)},
          {"iota", format_number(s.iota)},
          {"c_outer", format_number(s.outer_constant)},
          {"seed", std::to_string(s.seed)},
          {"samples", std::to_string(s.samples)},
          {"word_level", std::to_string(s.word_level)},
          {"optimizer_budget", std::to_string(s.optimizer_budget)},
          {"optimizer_starts", std::to_string(s.optimizer_starts)},
          {"tolerance", format_number(s.tolerance)},
          {"a", join_numbers(s.a_values)},
          {"d", join_numbers(s.d_values)},
          {"r", join_numbers(s.r_values)}};
}

inline Json config_json(const Config& c) {
  Json j;
  for (const auto& [k, v] : config_entries(c)) j[k] = v;
  j["note"] = "eta, iota and c_outer are working values chosen by this tool";
  return j;
}

// ---------------------------------------------------------------------------
// Metrics and paths

inline Json metric_to_json(const MetricTensor& g) {
  Json arr = Json::array();
  for (int i = 0; i < g.dim(); ++i)
    for (int j = 0; j < g.dim(); ++j) arr.push_back(g.gram()(i, j));
  return arr;
}

/// Square row-major array of (3 + n)^2 numbers, n >= 0.
inline MetricTensor metric_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, "metric must be a JSON array");
  const auto count = j.size();
  const auto dim = static_cast<int>(std::llround(std::sqrt(static_cast<double>(count))));
  if (dim < 3 || static_cast<std::size_t>(dim) * dim != count) {
    throw Error(ErrorKind::Parse, "metric must have (3+n)^2 entries");
  }
  MatX g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int k = 0; k < dim; ++k) {
      const Json& v = j[static_cast<std::size_t>(i * dim + k)];
      if (!v.is_number()) throw Error(ErrorKind::Parse, "metric entries must be numbers");
      g(i, k) = v.get<double>();
    }
  }
  return MetricTensor(g);
}

/// Accepts a JSON array, or whitespace/comma separated numbers.
inline MetricTensor metric_from_text(const std::string& text) {
  const std::string t = detail::trim(text);
  if (!t.empty() && t.front() == '[') {
    Json j;
    try {
      j = Json::parse(t);
    } catch (const std::exception& e) {
      throw Error(ErrorKind::Parse, std::string("invalid JSON: ") + e.what());
    }
    Json flat = Json::array();
    for (const auto& v : j) {
      if (v.is_array()) {
        for (const auto& w : v) flat.push_back(w);
      } else {
        flat.push_back(v);
      }
    }
    return metric_from_json(flat);
  }
  std::string cleaned = t;
  for (char& ch : cleaned)
    if (ch == ',' || ch == ';') ch = ' ';
  std::stringstream ss(cleaned);
  Json flat = Json::array();
  std::string tok;
  while (ss >> tok) flat.push_back(detail::parse_double("metric", tok));
  return metric_from_json(flat);
}

inline Json decoupled_to_json(const DecoupledMetric& m) {
  Json j;
  j["a"] = {m.a(0), m.a(1), m.a(2)};
  j["d"] = m.d();
  Json basis = Json::array();
  const Mat6 b = m.basis();
  for (int c = 0; c < 6; ++c) {
    Json row = Json::array();
    for (int r = 0; r < 6; ++r) row.push_back(b(r, c));
    basis.push_back(row);
  }
  j["basis"] = basis;  // rows: v1, v2, v3, f1, f2, f3 in reference coordinates
  return j;
}

inline Json path_to_json(const ControlPath& p) {
  Json arr = Json::array();
  for (const auto& s : p.segments) {
    arr.push_back({{"dt", s.dt},
                   {"alpha", {s.alpha(0), s.alpha(1), s.alpha(2)}},
                   {"beta", {s.beta(0), s.beta(1), s.beta(2)}}});
  }
  return arr;
}

inline ControlPath path_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Parse, "control path must be a JSON array");
  ControlPath p;
  for (const auto& item : j) {
    try {
      Segment s;
      s.dt = item.at("dt").get<double>();
      for (int i = 0; i < 3; ++i) {
        s.alpha(i) = item.at("alpha").at(i).get<double>();
        s.beta(i) = item.at("beta").at(i).get<double>();
      }
      p.segments.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("control path segment: ") + e.what());
    }
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Sweep reports

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{
      "index", "a1", "a2", "a3", "d", "r", "eta", "vbarg", "vbarg_2r", "vbarg2r_ratio", "calculus_bound",
      "regime", "vol_lower", "vol_upper", "vol_lower_hw", "vol_upper_hw", "vol_ambiguous",
      "vol2r_lower", "vol2r_upper", "vol2r_lower_hw", "vol2r_upper_hw", "vol2r_ambiguous",
      "sandwich_lower", "sandwich_upper", "sandwich2r_lower", "sandwich2r_upper", "doubling_upper",
      "inner_area_ratio", "outside_containment", "low_confidence", "identity_residual", "roundtrip_error",
      "error"};
  return cols;
}

inline std::vector<std::string> report_row(const SweepConfig& cfg, const SweepCell& c) {
  const auto f = format_number;
  return {std::to_string(c.index), f(c.params.a[0]), f(c.params.a[1]), f(c.params.a[2]), f(c.params.d),
          f(c.r), f(cfg.eta), f(c.vbar), f(c.vbar2), f(c.vbar_ratio()), f(c.calculus_bound),
          c.vol.outer_regime ? "outer" : "linear", f(c.vol.lower), f(c.vol.upper), f(c.vol.lower_halfwidth),
          f(c.vol.upper_halfwidth), f(c.vol.ambiguous_mass), f(c.vol2.lower), f(c.vol2.upper),
          f(c.vol2.lower_halfwidth), f(c.vol2.upper_halfwidth), f(c.vol2.ambiguous_mass),
          f(c.sandwich_lower()), f(c.sandwich_upper()), f(c.sandwich2_lower()), f(c.sandwich2_upper()),
          f(c.doubling_upper()), f(c.inner_ratio), f(c.vol.outside_containment + c.vol2.outside_containment),
          c.low_confidence() ? "1" : "0", f(c.identity_residual), f(c.roundtrip_error), c.error};
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

/// Header comments carry the configuration; then one header row and one row per cell.
inline std::string report_csv(const Config& config, const SweepReport& r) {
  std::string out;
  for (const auto& [k, v] : config_entries(config)) out += "# " + k + " = " + v + "\n";
  const auto& cols = report_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
  out += "\n";
  for (const auto& c : r.cells) {
    const auto row = report_row(config.sweep, c);
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + csv_escape(row[k]);
    out += "\n";
  }
  return out;
}

inline Json summary_json(const SweepSummary& s) {
  return {{"cells", s.cells},
          {"failed_cells", s.failed_cells},
          {"low_confidence_cells", s.low_confidence_cells},
          {"linear_regime_cells", s.linear_regime_cells},
          {"sandwich_min", json_number(s.sandwich_min)},
          {"sandwich_max", json_number(s.sandwich_max)},
          {"sandwich_spread", json_number(s.spread())},
          {"sup_doubling", json_number(s.sup_doubling)},
          {"sup_vbarg_ratio", json_number(s.sup_vbar_ratio)},
          {"calculus_bound", json_number(s.calculus_bound)},
          {"max_identity_residual", json_number(s.max_identity_residual)},
          {"max_roundtrip_error", json_number(s.max_roundtrip_error)},
          {"roundtrip_skipped", s.roundtrip_skipped},
          {"envelope_ok", s.envelope_ok},
          {"doubling_ok", s.doubling_ok},
          {"vbarg_ok", s.vbar_ok},
          {"identities_ok", s.identities_ok},
          {"pass", s.pass()}};
}

inline Json report_json(const Config& config, const SweepReport& r) {
  Json j;
  j["config"] = config_json(config);
  Json cells = Json::array();
  const auto& cols = report_columns();
  for (const auto& c : r.cells) {
    const auto row = report_row(config.sweep, c);
    Json cell;
    for (std::size_t k = 0; k < cols.size(); ++k) cell[cols[k]] = row[k];
    cells.push_back(cell);
  }
  j["cells"] = cells;
  j["summary"] = summary_json(r.summary);
  return j;
}

}  // namespace su2vol
