#pragma once

// Command-line front end: argument and config-file parsing, the six commands
// and their JSON / CSV reports.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbmilt/covkernel.hpp"
#include "fbmilt/errors.hpp"
#include "fbmilt/fbmgen.hpp"
#include "fbmilt/iltmc.hpp"
#include "fbmilt/lemmas.hpp"
#include "fbmilt/phasescan.hpp"
#include "fbmilt/quadmoments.hpp"
#include "fbmilt/version.hpp"

namespace fbmilt::cli {

using Json = nlohmann::ordered_json;

enum class Command { simulate, estimate, moments, sweep, phase, verify_lemmas };
enum class Format { json, csv };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::estimate: return "estimate";
    case Command::moments: return "moments";
    case Command::sweep: return "sweep";
    case Command::phase: return "phase";
    case Command::verify_lemmas: return "verify-lemmas";
  }
  return "?";
}

struct RunConfig {
  Command command = Command::moments;
  std::vector<double> hurst{0.5};
  std::vector<int> dim{2};
  double horizon = 1.0;
  double eps = 1.0;
  std::optional<double> eps0;  // default T^{2H}
  double factor = 0.5;
  int count = 12;
  std::int64_t reps = 10000;
  bool reps_given = false;     // sweep adds the MC column only when asked
  std::optional<int> grid_n;   // default: bias rule (simulate: 256)
  std::uint64_t seed = 1;
  SamplerMethod method = SamplerMethod::circulant;
  std::optional<double> tol;   // relative quadrature tolerance
  unsigned workers = 0;
  std::optional<std::string> config_file;
  std::optional<std::string> out;
  Format format = Format::json;
};

/// --help or --version; the text goes to stdout with exit status 0.
struct HelpRequested {
  std::string text;
};

namespace detail {

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> k{"hurst", "dim",  "horizon", "eps", "eps0",    "factor", "count", "reps",
                                          "grid-n", "seed", "method",  "tol", "workers", "out",    "format"};
  return k;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Flat `key = value` lines; `#` starts a comment.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParameterError("config", "cannot read '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParameterError("config", path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    for (auto& c : key)
      if (c == '_') c = '-';
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ParameterError(key, "unknown key in config file '" + path + "'");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty()) throw ParameterError(key, "cannot parse '" + text + "' as a number");
  return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v = 0;
  const auto* end = text.data() + text.size();
  const auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty())
    throw ParameterError(key, "cannot parse '" + text + "' as an integer");
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

inline Command command_from(const std::string& name) {
  for (auto c : {Command::simulate, Command::estimate, Command::moments, Command::sweep, Command::phase,
                 Command::verify_lemmas})
    if (name == to_string(c)) return c;
  throw ParameterError("command", "unknown command '" + name + "'");
}

}  // namespace detail

/// Flags override config-file values, which override the defaults.
/// `args` excludes the program name.
inline RunConfig parse_args(const std::vector<std::string>& args) {
  CLI::App app{"fbmilt: intersection local time of independent fractional Brownian motions", "fbmilt"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);
  std::map<std::string, std::string> flags;
  std::string config_path;
  const std::vector<std::pair<Command, const char*>> commands{
      {Command::simulate, "sample a path pair and write both paths as CSV"},
      {Command::estimate, "Monte Carlo estimate of the first two moments"},
      {Command::moments, "deterministic quadrature of the first two moments"},
      {Command::sweep, "quadrature (and optional MC) over an eps ladder"},
      {Command::phase, "classify every (H, d) of a grid"},
      {Command::verify_lemmas, "run the covariance lemma property suites"}};
  for (const auto& [cmd, help] : commands) {
    auto* sub = app.add_subcommand(to_string(cmd), help);
    for (const auto& key : detail::known_keys()) {
      sub->add_option_function<std::string>("--" + key, [&flags, key](const std::string& v) { flags[key] = v; });
    }
    sub->add_option("--config", config_path, "flat key = value file");
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested{std::string(kVersion) + "\n"};
  } catch (const CLI::ParseError& e) {
    throw ParameterError("arguments", e.what());
  }

  RunConfig rc;
  rc.command = detail::command_from(app.get_subcommands().front()->get_name());
  std::map<std::string, std::string> values;
  if (!config_path.empty()) {
    rc.config_file = config_path;
    values = detail::read_config_file(config_path);
  }
  for (const auto& [k, v] : flags) values[k] = v;

  for (const auto& [key, text] : values) {
    if (key == "hurst") {
      rc.hurst.clear();
      for (const auto& t : detail::split_list(text)) rc.hurst.push_back(detail::parse_double(key, t));
    } else if (key == "dim") {
      rc.dim.clear();
      for (const auto& t : detail::split_list(text)) rc.dim.push_back(detail::parse_int<int>(key, t));
    } else if (key == "horizon") {
      rc.horizon = detail::parse_double(key, text);
    } else if (key == "eps") {
      rc.eps = detail::parse_double(key, text);
    } else if (key == "eps0") {
      rc.eps0 = detail::parse_double(key, text);
    } else if (key == "factor") {
      rc.factor = detail::parse_double(key, text);
    } else if (key == "count") {
      rc.count = detail::parse_int<int>(key, text);
    } else if (key == "reps") {
      rc.reps = detail::parse_int<std::int64_t>(key, text);
      rc.reps_given = true;
    } else if (key == "grid-n") {
      rc.grid_n = detail::parse_int<int>(key, text);
    } else if (key == "seed") {
      rc.seed = detail::parse_int<std::uint64_t>(key, text);
    } else if (key == "method") {
      rc.method = sampler_method_from_string(text);
    } else if (key == "tol") {
      rc.tol = detail::parse_double(key, text);
    } else if (key == "workers") {
      rc.workers = detail::parse_int<unsigned>(key, text);
    } else if (key == "out") {
      rc.out = text;
    } else if (key == "format") {
      if (text == "json") {
        rc.format = Format::json;
      } else if (text == "csv") {
        rc.format = Format::csv;
      } else {
        throw ParameterError("format", "expected json or csv, got '" + text + "'");
      }
    }
  }

  // validation that does not need a run
  if (rc.hurst.empty()) throw ParameterError("hurst", "empty list");
  if (rc.dim.empty()) throw ParameterError("dim", "empty list");
  for (double h : rc.hurst)
    for (int d : rc.dim) ModelConfig(h, d, rc.horizon);
  const bool single = rc.command != Command::phase && rc.command != Command::verify_lemmas;
  if (single && rc.hurst.size() > 1) throw ParameterError("hurst", "only phase accepts a list");
  if (single && rc.dim.size() > 1) throw ParameterError("dim", "only phase accepts a list");
  if (!std::isfinite(rc.eps) || rc.eps < 0.0) throw ParameterError("eps", "must be finite and >= 0");
  if ((rc.command == Command::estimate) && !(rc.eps > 0.0))
    throw ParameterError("eps", "estimate needs eps > 0 (the kernel is a Dirac mass at eps = 0)");
  if (rc.command == Command::sweep || rc.command == Command::phase) {
    EpsSchedule(rc.eps0.value_or(1.0), rc.factor, rc.count);
  }
  if (rc.reps < 2) throw ParameterError("reps", "at least 2 replications are needed");
  if (rc.grid_n && (*rc.grid_n < 1 || *rc.grid_n > kMaxCholeskySteps))
    throw ParameterError("grid-n", "must lie in [1, " + std::to_string(kMaxCholeskySteps) + "]");
  if (rc.tol && !(*rc.tol > 0.0 && *rc.tol < 1.0)) throw ParameterError("tol", "must lie in (0, 1)");
  if (rc.command == Command::simulate && rc.format == Format::json)
    throw ParameterError("format", "simulate writes CSV paths only");
  return rc;
}

inline RunConfig parse_args(int argc, const char* const* argv) {
  return parse_args(std::vector<std::string>(argv + 1, argv + argc));
}

namespace detail {

inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <class T>
Json opt_num(const std::optional<T>& v) {
  return v ? num(static_cast<double>(*v)) : Json(nullptr);
}

inline Json to_json(const QuadratureResult& r) {
  Json j;
  j["value"] = num(r.value);
  j["error"] = num(r.error_estimate);
  j["diverged"] = r.diverged;
  j["divergence_evidence"] = r.divergence_evidence ? Json(*r.divergence_evidence) : Json(nullptr);
  j["evaluations"] = r.evaluations;
  j["subdivisions"] = r.subdivisions;
  return j;
}

inline Json to_json(const MomentEstimate& m) {
  Json j;
  j["mean"] = num(m.mean);
  j["se"] = num(m.se_mean);
  j["reps"] = m.replications;
  j["second_moment"] = num(m.second_moment);
  j["se_second"] = num(m.se_second);
  j["variance"] = num(m.variance);
  j["seed"] = m.seed;
  j["grid_n"] = m.grid_steps;
  j["method"] = fbmilt::to_string(m.method);
  j["warnings"] = m.warnings;
  return j;
}

inline Json to_json(const SweepRow& r) {
  Json j;
  j["eps"] = num(r.eps);
  j["m1"] = r.m1 ? to_json(*r.m1) : Json(nullptr);
  j["m2"] = r.m2 ? to_json(*r.m2) : Json(nullptr);
  j["variance"] = opt_num(r.variance);
  j["cauchy_gap"] = r.cauchy_gap ? to_json(*r.cauchy_gap) : Json(nullptr);
  j["mc"] = r.mc ? to_json(*r.mc) : Json(nullptr);
  j["complete"] = r.complete();
  j["notes"] = r.notes;
  return j;
}

inline Json to_json(const ClassifierThresholds& t) {
  Json j;
  j["slope_cutoff"] = t.slope_cutoff;
  j["min_r_squared"] = t.min_r_squared;
  j["m2_blowup"] = t.m2_blowup;
  j["critical_band"] = t.critical_band;
  j["gap_tail_rows"] = t.gap_tail_rows;
  return j;
}

inline Json to_json(const ClassifierEvidence& e) {
  Json j;
  j["increment_slope"] = opt_num(e.increment_slope);
  j["increment_r_squared"] = opt_num(e.increment_r_squared);
  j["raw_slope"] = opt_num(e.raw_slope);
  j["raw_r_squared"] = opt_num(e.raw_r_squared);
  j["log_rate"] = opt_num(e.log_rate);
  j["increments_decreasing"] = e.increments_decreasing;
  j["gap_tail_decreasing"] = e.gap_tail_decreasing ? Json(*e.gap_tail_decreasing) : Json(nullptr);
  j["last_gap_relative"] = opt_num(e.last_gap_relative);
  j["m2_relative_change"] = opt_num(e.m2_relative_change);
  j["m2_growth"] = opt_num(e.m2_growth);
  j["rows_used"] = e.rows_used;
  j["extended"] = e.extended;
  j["rule"] = e.rule;
  return j;
}

inline Json to_json(const LemmaCheck& c) {
  Json j;
  j["name"] = c.name;
  j["checked"] = c.checked;
  j["violations"] = c.violations;
  j["worst"] = num(c.worst);
  j["pass"] = c.pass();
  return j;
}

inline Json config_json(const RunConfig& rc) {
  Json j;
  j["command"] = to_string(rc.command);
  j["hurst"] = rc.hurst;
  j["dim"] = rc.dim;
  j["horizon"] = rc.horizon;
  j["eps"] = rc.eps;
  j["eps0"] = opt_num(rc.eps0);
  j["factor"] = rc.factor;
  j["count"] = rc.count;
  j["reps"] = rc.reps;
  j["grid_n"] = rc.grid_n ? Json(*rc.grid_n) : Json(nullptr);
  j["seed"] = rc.seed;
  j["method"] = fbmilt::to_string(rc.method);
  j["tol"] = opt_num(rc.tol);
  j["workers"] = rc.workers;
  j["config_file"] = rc.config_file ? Json(*rc.config_file) : Json(nullptr);
  j["out"] = rc.out ? Json(*rc.out) : Json(nullptr);
  j["format"] = rc.format == Format::json ? "json" : "csv";
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string g17(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
std::string g17(const std::optional<T>& v) {
  return v ? g17(static_cast<double>(*v)) : "";
}

inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline QuadOptions quad_options(const RunConfig& rc, QuadOptions q) {
  if (rc.tol) q.rel_tol = *rc.tol;
  q.workers = rc.workers;
  return q;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParameterError("out", "cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw ParameterError("out", "write to '" + path + "' failed");
}

}  // namespace detail

/// What a command produced: the report, its CSV form, the summary line and the exit status.
struct RunOutput {
  Json report;
  std::string csv;
  std::string summary;
  int exit_code = 0;
};

namespace detail {

inline Json skeleton(const RunConfig& rc) {
  Json j;
  j["version"] = kVersion;
  j["generated_at"] = utc_timestamp();
  j["config"] = config_json(rc);
  Json r;
  r["m1"] = nullptr;
  r["m2"] = nullptr;
  r["variance"] = nullptr;
  r["mc"] = nullptr;
  r["verdict"] = nullptr;
  r["rows"] = Json::array();
  j["results"] = r;
  return j;
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline RunOutput run_simulate(const RunConfig& rc) {
  RunOutput o;
  o.report = skeleton(rc);
  const ModelConfig cfg(rc.hurst[0], rc.dim[0], rc.horizon);
  const int n = rc.grid_n.value_or(256);
  const auto pair = sample_pair(TimeGrid::uniform(rc.horizon, n), cfg, rc.seed, rc.method);
  const std::filesystem::path out = rc.out.value_or("path.csv");
  const auto tilde = out.parent_path() / (out.stem().string() + "_tilde" + out.extension().string());
  write_path_csv(pair.first, out.string());
  write_path_csv(pair.second, tilde.string());
  o.report["results"]["paths"] = {out.string(), tilde.string()};
  o.summary = "simulate: H=" + fmt("%g", cfg.hurst()) + " d=" + std::to_string(cfg.dim()) + " n=" + std::to_string(n) +
              " wrote " + out.string() + " and " + tilde.string();
  return o;
}

inline RunOutput run_estimate(const RunConfig& rc) {
  RunOutput o;
  o.report = skeleton(rc);
  const ModelConfig cfg(rc.hurst[0], rc.dim[0], rc.horizon);
  const SmoothingEps eps(rc.eps);
  std::vector<std::string> notes;
  int n = 0;
  if (rc.grid_n) {
    n = *rc.grid_n;
  } else {
    const auto gc = grid_steps_for_bias_rule(cfg, eps);
    n = gc.n_steps;
    if (gc.capped) notes.push_back(gc.warning);
  }
  auto est = mc_moments(cfg, eps, TimeGrid::uniform(rc.horizon, n), rc.reps, rc.seed, rc.method, rc.workers);
  est.warnings.insert(est.warnings.end(), notes.begin(), notes.end());
  o.report["results"]["mc"] = to_json(est);
  o.report["results"]["variance"] = num(est.variance);
  o.csv = "mean,se_mean,second_moment,se_second,variance,reps,seed,grid_n,method\n" + g17(est.mean) + ',' +
          g17(est.se_mean) + ',' + g17(est.second_moment) + ',' + g17(est.se_second) + ',' + g17(est.variance) + ',' +
          std::to_string(est.replications) + ',' + std::to_string(est.seed) + ',' + std::to_string(est.grid_steps) +
          ',' + fbmilt::to_string(est.method) + '\n';
  o.summary = "estimate: mean " + fmt("%.6g", est.mean) + " +- " + fmt("%.2g", est.se_mean) + ", second moment " +
              fmt("%.6g", est.second_moment) + " +- " + fmt("%.2g", est.se_second) + " (R=" +
              std::to_string(est.replications) + ", n=" + std::to_string(n) + ")";
  return o;
}

inline RunOutput run_moments(const RunConfig& rc) {
  RunOutput o;
  o.report = skeleton(rc);
  const ModelConfig cfg(rc.hurst[0], rc.dim[0], rc.horizon);
  const auto q = quad_options(rc, QuadOptions{});
  const auto a = m1(rc.eps, cfg, q);
  o.report["results"]["m1"] = to_json(a);
  std::optional<QuadratureResult> b;
  if (rc.eps > 0.0) {
    b = m2(rc.eps, cfg, q);
    o.report["results"]["m2"] = to_json(*b);
    o.report["results"]["variance"] = num(b->value - a.value * a.value);
  }
  o.csv = "quantity,value,error,diverged\nm1," + g17(a.value) + ',' + g17(a.error_estimate) + ',' +
          (a.diverged ? "true" : "false") + '\n';
  if (b) {
    o.csv += "m2," + g17(b->value) + ',' + g17(b->error_estimate) + ",false\n";
    o.csv += "variance," + g17(b->value - a.value * a.value) + ",,false\n";
  }
  o.summary = "moments: m1 " + fmt("%.10g", a.value) + (a.diverged ? " (diverged, lower bound)" : "");
  if (b) o.summary += ", m2 " + fmt("%.10g", b->value);
  return o;
}

inline RunOutput run_sweep(const RunConfig& rc) {
  RunOutput o;
  o.report = skeleton(rc);
  const ModelConfig cfg(rc.hurst[0], rc.dim[0], rc.horizon);
  const EpsSchedule sched(rc.eps0.value_or(std::pow(rc.horizon, 2.0 * cfg.hurst())), rc.factor, rc.count);
  SweepOptions so;
  so.quad = quad_options(rc, sweep_quad_defaults());
  so.workers = rc.workers;
  so.with_mc = rc.reps_given;
  so.mc = {rc.reps, rc.seed, rc.method, rc.grid_n};
  const auto s = sweep(cfg, sched, so);
  int incomplete = 0;
  o.csv = "eps,m1,m1_err,m2,m2_err,variance,cauchy_gap,mc_mean,mc_se\n";
  for (const auto& r : s.rows) {
    o.report["results"]["rows"].push_back(to_json(r));
    if (!r.complete()) ++incomplete;
    auto val = [](const std::optional<QuadratureResult>& q) { return q ? g17(q->value) : std::string(); };
    auto err = [](const std::optional<QuadratureResult>& q) { return q ? g17(q->error_estimate) : std::string(); };
    o.csv += g17(r.eps) + ',' + val(r.m1) + ',' + err(r.m1) + ',' + val(r.m2) + ',' + err(r.m2) + ',' +
             g17(r.variance) + ',' + val(r.cauchy_gap) + ',' + (r.mc ? g17(r.mc->mean) : "") + ',' +
             (r.mc ? g17(r.mc->se_mean) : "") + '\n';
  }
  o.summary = "sweep: H=" + fmt("%g", cfg.hurst()) + " d=" + std::to_string(cfg.dim()) + ", " +
              std::to_string(s.rows.size()) + " rows";
  if (!s.rows.empty() && s.rows.back().m1) o.summary += ", last m1 " + fmt("%.8g", s.rows.back().m1->value);
  if (incomplete) o.summary += ", " + std::to_string(incomplete) + " incomplete";
  return o;
}

inline RunOutput run_phase(const RunConfig& rc) {
  RunOutput o;
  o.report = skeleton(rc);
  PhaseGridOptions po;
  po.eps0 = rc.eps0;
  po.factor = rc.factor;
  po.count = rc.count;
  po.horizon = rc.horizon;
  po.sweep.quad = quad_options(rc, sweep_quad_defaults());
  po.sweep.workers = rc.workers;
  const auto points = phase_grid(rc.hurst, rc.dim, po);
  Json arr = Json::array();
  o.csv = "hurst,dim,hd,verdict,fitted_rate,rule,error\n";
  std::string line = "phase:";
  bool indeterminate = false, failed = false;
  for (const auto& p : points) {
    Json j;
    j["hurst"] = p.hurst;
    j["dim"] = p.dim;
    j["hd"] = p.hurst * p.dim;
    j["verdict"] = p.verdict ? Json(fbmilt::to_string(*p.verdict)) : Json(nullptr);
    j["fitted_rate"] = opt_num(p.fitted_rate);
    j["evidence"] = to_json(p.evidence);
    j["error"] = p.error ? Json(*p.error) : Json(nullptr);
    j["rows"] = Json::array();
    if (p.series)
      for (const auto& r : p.series->rows) j["rows"].push_back(to_json(r));
    arr.push_back(j);
    indeterminate = indeterminate || p.indeterminate;
    failed = failed || (p.error && !p.indeterminate);
    o.csv += g17(p.hurst) + ',' + std::to_string(p.dim) + ',' + g17(p.hurst * p.dim) + ',' +
             (p.verdict ? fbmilt::to_string(*p.verdict) : "") + ',' + g17(p.fitted_rate) + ',' +
             csv_text(p.evidence.rule) + ',' + csv_text(p.error.value_or("")) + '\n';
    line += " (" + fmt("%g", p.hurst) + "," + std::to_string(p.dim) + ") " +
            (p.verdict ? fbmilt::to_string(*p.verdict) : (p.indeterminate ? "Indeterminate" : "error"));
  }
  o.report["results"]["points"] = arr;
  o.report["results"]["thresholds"] = to_json(po.thresholds);
  if (points.size() == 1 && points[0].verdict) {
    o.report["results"]["verdict"] = fbmilt::to_string(*points[0].verdict);
    if (points[0].series)
      for (const auto& r : points[0].series->rows) o.report["results"]["rows"].push_back(to_json(r));
  }
  o.summary = line;
  o.exit_code = indeterminate ? 4 : (failed ? 2 : 0);
  return o;
}

inline RunOutput run_verify_lemmas(const RunConfig& rc) {
  RunOutput o;
  o.report = skeleton(rc);
  const auto checks = verify_lemmas(rc.seed);
  Json arr = Json::array();
  o.csv = "name,checked,violations,worst,pass\n";
  std::string line = "verify-lemmas:";
  bool all = true;
  for (const auto& c : checks) {
    arr.push_back(to_json(c));
    o.csv += c.name + ',' + std::to_string(c.checked) + ',' + std::to_string(c.violations) + ',' + g17(c.worst) + ',' +
             (c.pass() ? "true" : "false") + '\n';
    line += " " + c.name + (c.pass() ? " PASS" : " FAIL");
    all = all && c.pass();
  }
  o.report["results"]["lemmas"] = arr;
  o.summary = line;
  o.exit_code = all ? 0 : 1;
  return o;
}

}  // namespace detail

/// Runs the command and writes the declared output file; exceptions propagate.
inline RunOutput execute(const RunConfig& rc) {
  RunOutput o;
  switch (rc.command) {
    case Command::simulate: return detail::run_simulate(rc);
    case Command::estimate: o = detail::run_estimate(rc); break;
    case Command::moments: o = detail::run_moments(rc); break;
    case Command::sweep: o = detail::run_sweep(rc); break;
    case Command::phase: o = detail::run_phase(rc); break;
    case Command::verify_lemmas: o = detail::run_verify_lemmas(rc); break;
  }
  if (rc.out) detail::write_file(*rc.out, rc.format == Format::json ? o.report.dump(2) + "\n" : o.csv);
  return o;
}

/// Exit status: 0 ok, 1 lemma failure or internal error, 2 parameter or
/// domain error, 3 quadrature budget exhausted, 4 indeterminate classification.
inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout,
                      std::ostream& err = std::cerr) {
  try {
    const RunConfig rc = parse_args(argc, argv);
    const auto o = execute(rc);
    out << o.summary << '\n';
    return o.exit_code;
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const IndeterminateError& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fbmilt::cli
