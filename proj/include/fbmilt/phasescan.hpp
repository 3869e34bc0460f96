#pragma once

// Eps ladders, per-(H, d) sweeps and the Convergent / Divergent / Critical
// classification with the evidence behind it.
//
// Decision rule. m1(eps) - m1(0) behaves like eps^{1/H - d/2} when Hd != 2, so
// the increments m1(eps_{k+1}) - m1(eps_k) between ladder rungs scale like
// eps_k^{1/H - d/2} (capped at eps^1 by the regular part when 1/H - d/2 > 1).
// Their log-log slope against eps therefore has the sign of 2 - Hd. The raw
// slope of log m1 is reported next to it but not used: it is biased toward
// zero by the finite part of m1 and takes many decades to settle.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmilt/covkernel.hpp"
#include "fbmilt/errors.hpp"
#include "fbmilt/fbmgen.hpp"
#include "fbmilt/iltmc.hpp"
#include "fbmilt/parallel.hpp"
#include "fbmilt/quadmoments.hpp"
#include "fbmilt/stats.hpp"

namespace fbmilt {

/// eps_k = eps0 * factor^k, k = 0..count-1.
class EpsSchedule {
 public:
  EpsSchedule(double eps0, double factor, int count) : eps0_(eps0), factor_(factor), count_(count) {
    if (!(eps0 > 0.0) || !std::isfinite(eps0)) throw ParameterError("eps0", "must be finite and > 0");
    if (!(factor > 0.0 && factor < 1.0)) throw ParameterError("factor", "must lie in (0,1)");
    if (count < 3) throw ParameterError("count", "must be >= 3");
  }

  /// eps0 = T^{2H}, factor 1/2, 12 rungs.
  static EpsSchedule defaults(const ModelConfig& cfg) {
    return {std::pow(cfg.horizon(), 2.0 * cfg.hurst()), 0.5, 12};
  }

  double eps0() const noexcept { return eps0_; }
  double factor() const noexcept { return factor_; }
  int count() const noexcept { return count_; }
  double eps(int k) const { return eps0_ * std::pow(factor_, k); }
  std::vector<double> ladder() const {
    std::vector<double> v(static_cast<std::size_t>(count_));
    for (int k = 0; k < count_; ++k) v[static_cast<std::size_t>(k)] = eps(k);
    return v;
  }
  EpsSchedule extended(int extra = 1) const { return {eps0_, factor_, count_ + extra}; }

 private:
  double eps0_;
  double factor_;
  int count_;
};

struct McParams {
  std::int64_t replications = 10000;
  std::uint64_t seed = 1;
  SamplerMethod method = SamplerMethod::circulant;
  std::optional<int> grid_steps;  // default: bias rule per eps
};

/// Relative tolerances by default: the swept quantities span many decades.
inline QuadOptions sweep_quad_defaults() {
  QuadOptions q;
  q.abs_tol_2d = 1e-14;
  q.abs_tol_4d = 1e-14;
  q.rel_tol = 1e-4;
  q.max_evals = 20'000'000;
  return q;
}

struct SweepOptions {
  QuadOptions quad = sweep_quad_defaults();
  bool with_m2 = true;
  bool with_mc = false;
  McParams mc;
  unsigned workers = 0;
};

struct SweepRow {
  double eps = 0.0;
  std::optional<QuadratureResult> m1;
  std::optional<QuadratureResult> m2;
  std::optional<double> variance;
  std::optional<QuadratureResult> cauchy_gap;  // E|I_{eps_prev} - I_eps|^2
  std::optional<MomentEstimate> mc;
  std::vector<std::string> notes;
  bool m2_requested = false;
  bool gap_requested = false;
  bool complete() const {
    return m1.has_value() && (!m2_requested || m2.has_value()) && (!gap_requested || cauchy_gap.has_value());
  }
};

struct SweepSeries {
  ModelConfig cfg;
  EpsSchedule schedule;
  std::vector<SweepRow> rows;
};

/// One ladder rung. Budget errors mark the affected quantity missing.
inline SweepRow sweep_row(const ModelConfig& cfg, double eps, std::optional<double> prev_eps,
                          const SweepOptions& opt) {
  SweepRow row;
  row.eps = eps;
  try {
    row.m1 = m1(eps, cfg, opt.quad);
  } catch (const BudgetError& e) {
    row.notes.push_back(std::string("m1 incomplete: ") + e.what());
  }
  if (opt.with_m2) {
    row.m2_requested = true;
    row.gap_requested = prev_eps.has_value();
    try {
      row.m2 = m2(eps, cfg, opt.quad);
      if (row.m1) row.variance = row.m2->value - row.m1->value * row.m1->value;
    } catch (const BudgetError& e) {
      row.notes.push_back(std::string("m2 incomplete: ") + e.what());
    }
    if (prev_eps) {
      QuadOptions g = opt.quad;
      // the gap is resolved relative to itself, or to 1e-3 rel_tol of m2
      if (row.m2) g.abs_tol_4d = std::max(g.abs_tol_4d, 1e-3 * g.rel_tol * row.m2->value);
      try {
        row.cauchy_gap = cauchy_gap_result(*prev_eps, eps, cfg, g);
      } catch (const BudgetError& e) {
        row.notes.push_back(std::string("cauchy_gap incomplete: ") + e.what());
      }
    }
  }
  if (opt.with_mc) {
    const SmoothingEps se(eps);
    int n = 0;
    if (opt.mc.grid_steps) {
      n = *opt.mc.grid_steps;
    } else {
      const auto gc = grid_steps_for_bias_rule(cfg, se);
      n = gc.n_steps;
      if (gc.capped) row.notes.push_back(gc.warning);
    }
    row.mc = mc_moments(cfg, se, TimeGrid::uniform(cfg.horizon(), n), opt.mc.replications, opt.mc.seed, opt.mc.method,
                        opt.workers);
  }
  return row;
}

inline SweepSeries sweep(const ModelConfig& cfg, const EpsSchedule& schedule, const SweepOptions& opt = {}) {
  SweepSeries s{cfg, schedule, {}};
  const auto eps = schedule.ladder();
  s.rows.resize(eps.size());
  // rows are independent; MC inside a row already uses the worker pool
  const unsigned outer = opt.with_mc ? 1u : opt.workers;
  SweepOptions inner = opt;
  if (resolve_workers(outer) > 1) inner.quad.workers = 1;
  parallel_for(eps.size(), outer, [&](std::size_t k, unsigned) {
    s.rows[k] = sweep_row(cfg, eps[k], k == 0 ? std::nullopt : std::optional<double>(eps[k - 1]), inner);
  });
  return s;
}

enum class Verdict { Convergent, Divergent, Critical };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Convergent: return "Convergent";
    case Verdict::Divergent: return "Divergent";
    case Verdict::Critical: return "Critical";
  }
  return "?";
}

/// Decision thresholds; every one of them is echoed in reports.
struct ClassifierThresholds {
  double slope_cutoff = 0.02;
  double min_r_squared = 0.99;
  double m2_blowup = 1e3;
  double critical_band = 1e-9;
  // the gap rises before it falls near Hd = 2, so only the last rungs count
  int gap_tail_rows = 2;
};

struct ClassifierEvidence {
  std::optional<double> increment_slope;  // d log(m1 increments) / d log eps
  std::optional<double> increment_r_squared;
  std::optional<double> raw_slope;  // d log m1 / d log eps
  std::optional<double> raw_r_squared;
  std::optional<double> log_rate;  // d m1 / d log(1/eps)
  bool increments_decreasing = false;
  std::optional<bool> gap_tail_decreasing;
  std::optional<double> last_gap_relative;  // last gap / last m2
  std::optional<double> m2_relative_change;  // over the last two rows
  std::optional<double> m2_growth;           // last m2 / first m2
  int rows_used = 0;
  bool extended = false;
  std::string rule;
};

struct PhasePoint {
  double hurst = 0.0;
  int dim = 0;
  std::optional<Verdict> verdict;
  std::optional<double> fitted_rate;
  ClassifierEvidence evidence;
  std::optional<SweepSeries> series;
  std::optional<std::string> error;
  bool indeterminate = false;  // error came from IndeterminateError
};

/// A sweep that supports neither verdict, even after one extra rung.
class IndeterminateError : public std::runtime_error {
 public:
  IndeterminateError(const std::string& what, SweepSeries series, ClassifierEvidence evidence)
      : std::runtime_error(what), series_(std::move(series)), evidence_(std::move(evidence)) {}
  const SweepSeries& series() const noexcept { return series_; }
  const ClassifierEvidence& evidence() const noexcept { return evidence_; }

 private:
  SweepSeries series_;
  ClassifierEvidence evidence_;
};

namespace detail {

struct Decision {
  std::optional<Verdict> verdict;
  std::optional<double> rate;
  ClassifierEvidence ev;
};

inline Decision decide(const SweepSeries& s, const ClassifierThresholds& th) {
  Decision out;
  auto& ev = out.ev;
  const ModelConfig& cfg = s.cfg;
  std::vector<double> eps, m1v;
  for (const auto& r : s.rows) {
    if (!r.m1 || r.m1->diverged || r.eps <= 0.0) continue;
    eps.push_back(r.eps);
    m1v.push_back(r.m1->value);
  }
  if (eps.size() < 3) throw ParameterError("series", "classification needs at least 3 complete rows");
  // last half of the ladder, at least 3 rows
  const std::size_t n = eps.size();
  const std::size_t first = std::min(n - 3, n / 2);
  ev.rows_used = static_cast<int>(n - first);

  std::vector<double> lx, ly, linv;
  for (std::size_t k = first; k < n; ++k) {
    lx.push_back(std::log(eps[k]));
    ly.push_back(std::log(m1v[k]));
    linv.push_back(-std::log(eps[k]));
  }
  const auto raw = stats::fit_line(lx, ly);
  ev.raw_slope = raw.slope;
  ev.raw_r_squared = raw.r_squared;
  std::vector<double> tail_m1(m1v.begin() + static_cast<std::ptrdiff_t>(first), m1v.end());
  ev.log_rate = stats::fit_line(linv, tail_m1).slope;

  std::vector<double> ix, iy;
  bool positive = true;
  ev.increments_decreasing = true;
  double prev_inc = INFINITY;
  for (std::size_t k = first; k + 1 < n; ++k) {
    const double inc = m1v[k + 1] - m1v[k];
    if (!(inc > 0.0)) {
      positive = false;
      break;
    }
    if (!(inc < prev_inc)) ev.increments_decreasing = false;
    prev_inc = inc;
    ix.push_back(0.5 * (std::log(eps[k]) + std::log(eps[k + 1])));
    iy.push_back(std::log(inc));
  }
  if (positive && ix.size() >= 2) {
    const auto f = stats::fit_line(ix, iy);
    ev.increment_slope = f.slope;
    ev.increment_r_squared = f.r_squared;
  } else {
    ev.increments_decreasing = false;
  }

  // second-moment and gap evidence from the rows where it converged
  std::vector<double> m2v, gaps;
  for (const auto& r : s.rows) {
    if (r.m2) m2v.push_back(r.m2->value);
  }
  for (const auto& r : s.rows)
    if (r.cauchy_gap) gaps.push_back(r.cauchy_gap->value);
  if (gaps.size() > static_cast<std::size_t>(th.gap_tail_rows))
    gaps.erase(gaps.begin(), gaps.end() - th.gap_tail_rows);
  if (m2v.size() >= 2) {
    ev.m2_growth = m2v.back() / m2v.front();
    ev.m2_relative_change = std::abs(m2v.back() - m2v[m2v.size() - 2]) / std::abs(m2v.back());
  }
  if (gaps.size() >= 2) {
    bool dec = true;
    for (std::size_t k = 1; k < gaps.size(); ++k) dec = dec && gaps[k] < gaps[k - 1];
    ev.gap_tail_decreasing = dec;
    if (!m2v.empty()) ev.last_gap_relative = gaps.back() / m2v.back();
  }

  if (std::abs(cfg.hd() - 2.0) < th.critical_band) {
    out.verdict = Verdict::Critical;
    out.rate = ev.log_rate;
    ev.rule = "Hd = 2 exactly; m1 grows like log(1/eps), rate is d m1 / d log(1/eps)";
    return out;
  }
  const bool slope_divergent = ev.increment_slope && *ev.increment_slope <= -th.slope_cutoff &&
                               ev.increment_r_squared && *ev.increment_r_squared >= th.min_r_squared;
  const bool slope_convergent = ev.increment_slope && *ev.increment_slope >= th.slope_cutoff;
  // near the boundary m2 can grow by orders of magnitude on its way to a finite
  // limit, so the blowup signal only counts when the slope is not convergent
  const bool blowup = ev.m2_growth && *ev.m2_growth >= th.m2_blowup && !slope_convergent;
  if (slope_divergent || blowup) {
    out.verdict = Verdict::Divergent;
    out.rate = ev.increment_slope;
    ev.rule = slope_divergent ? "m1 increment slope <= -cutoff with R^2 >= min_r_squared"
                              : "m2 grew beyond m2_blowup times its first value";
    return out;
  }
  const bool gap_ok = !ev.gap_tail_decreasing || *ev.gap_tail_decreasing;
  if (slope_convergent && ev.increments_decreasing && gap_ok) {
    out.verdict = Verdict::Convergent;
    out.rate = ev.increment_slope;
    ev.rule = "m1 increment slope >= cutoff, increments decreasing, cauchy gap tail decreasing";
    return out;
  }
  ev.rule = "undecided";
  return out;
}

}  // namespace detail

/// Classifies a sweep; an undecided sweep is extended by one rung and decided
/// again, then IndeterminateError is thrown.
inline PhasePoint classify(SweepSeries series, const SweepOptions& opt = {}, const ClassifierThresholds& th = {}) {
  const ModelConfig cfg = series.cfg;
  auto d = detail::decide(series, th);
  bool extended = false;
  if (!d.verdict) {
    const int k = series.schedule.count();
    const double prev = series.schedule.eps(k - 1);
    series.schedule = series.schedule.extended();
    series.rows.push_back(sweep_row(cfg, series.schedule.eps(k), prev, opt));
    d = detail::decide(series, th);
    extended = true;
  }
  d.ev.extended = extended;
  if (!d.verdict)
    throw IndeterminateError("no verdict for H=" + std::to_string(cfg.hurst()) + " d=" + std::to_string(cfg.dim()) +
                                 " after extending the ladder",
                             std::move(series), d.ev);
  PhasePoint p;
  p.hurst = cfg.hurst();
  p.dim = cfg.dim();
  p.verdict = d.verdict;
  p.fitted_rate = d.rate;
  p.evidence = std::move(d.ev);
  p.series = std::move(series);
  return p;
}

struct PhaseGridOptions {
  std::optional<double> eps0;  // default T^{2H} per point
  double factor = 0.5;
  int count = 12;
  double horizon = 1.0;
  SweepOptions sweep;
  ClassifierThresholds thresholds;
};

/// classify(sweep(...)) for every (h, d), in lexicographic input order.
/// Failures are recorded per point.
inline std::vector<PhasePoint> phase_grid(std::span<const double> hs, std::span<const int> ds,
                                          const PhaseGridOptions& opt = {}) {
  if (hs.empty()) throw ParameterError("hurst", "empty list");
  if (ds.empty()) throw ParameterError("dim", "empty list");
  std::vector<PhasePoint> out(hs.size() * ds.size());
  const unsigned workers = opt.sweep.workers;
  SweepOptions inner = opt.sweep;
  if (resolve_workers(workers) > 1 && out.size() > 1) {
    inner.workers = 1;
    inner.quad.workers = 1;
  }
  parallel_for(out.size(), out.size() > 1 ? workers : 1u, [&](std::size_t i, unsigned) {
    const double h = hs[i / ds.size()];
    const int d = ds[i % ds.size()];
    PhasePoint& p = out[i];
    p.hurst = h;
    p.dim = d;
    try {
      const ModelConfig cfg(h, d, opt.horizon);
      const EpsSchedule sched(opt.eps0.value_or(std::pow(opt.horizon, 2.0 * h)), opt.factor, opt.count);
      p = classify(sweep(cfg, sched, inner), inner, opt.thresholds);
    } catch (const IndeterminateError& e) {
      p.error = e.what();
      p.indeterminate = true;
      p.evidence = e.evidence();
      p.series = e.series();
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  });
  return out;
}

}  // namespace fbmilt
