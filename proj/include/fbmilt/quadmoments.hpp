#pragma once

// Deterministic evaluation of the moment integrals of I_eps.
//
// Every integrand here is homogeneous in the times: replacing (times, eps) by
// (c * times, c^{2H} eps) multiplies it by c^{-Hd} (two-time integrals) or
// c^{-2Hd} (four-time integrals). The cube [0,T]^n is therefore split into
// dyadic shells [0,T]^n \ [0,T/2]^n scaled by 2^{-k}, and shell k is the
// outermost shell with eps replaced by q^k eps and weight r^k, where
// q = 2^{2H} and r = 2^{Hd-2} (n = 2) or 2^{2Hd-4} (n = 4). At eps = 0 the
// shells are identical, the sum is S_0 / (1 - r) and it is finite exactly when
// r < 1, i.e. Hd < 2. For eps > 0 the shells are summed until the remaining
// tail is bounded below the tolerance; all shells share one adaptive queue.
//
// Four-time integrals are written in ratio coordinates: within each pair
// (t, v) and (s, u) the larger time o and the ratio y = smaller / larger. The
// remaining singular sets (diagonals, the origin of one pair, mixed zero sets)
// then sit on faces y in {0, 1} or o = 0 of the unit cells, and a polynomial
// grading map clustering nodes at both ends of every coordinate makes the
// transformed integrand bounded near them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmilt/covkernel.hpp"
#include "fbmilt/cubature.hpp"
#include "fbmilt/errors.hpp"

namespace fbmilt {

struct QuadOptions {
  double abs_tol_2d = 1e-6;
  double abs_tol_4d = 1e-4;
  double rel_tol = 1e-6;
  std::size_t max_evals = 10'000'000;
  unsigned workers = 0;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t subdivisions = 0;
  std::size_t evaluations = 0;
  bool diverged = false;
  std::optional<std::string> divergence_evidence;
};

/// The subdivision budget ran out before the tolerance was met.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(std::string what, QuadratureResult partial)
      : std::runtime_error(std::move(what)), partial_(std::move(partial)) {}
  const QuadratureResult& partial() const noexcept { return partial_; }

 private:
  QuadratureResult partial_;
};

enum class CrossTerm { keep, drop };

/// Radial exponent 3 - 2Hd of the four-time integrals near the origin;
/// the radial integral converges iff it exceeds -1.
inline double radial_rate(const ModelConfig& cfg) { return 3.0 - 2.0 * cfg.hd(); }

namespace detail {

inline void check_eps(double eps, const char* name, bool allow_zero) {
  if (!std::isfinite(eps) || eps < 0.0 || (!allow_zero && eps == 0.0))
    throw ParameterError(name, allow_zero ? "must be finite and >= 0" : "must be finite and > 0");
}

// x^{-d/2}
inline double inv_pow_half(double x, int d) {
  double r = 1.0;
  for (int i = 0; i < d / 2; ++i) r *= x;
  r = 1.0 / r;
  return d % 2 ? r / std::sqrt(x) : r;
}

struct Graded {
  double x;    // g(xi)
  double xm;   // 1 - g(xi), computed as g(1 - xi)
  double jac;  // g'(xi)
};

// g(xi) = xi^3 (10 - 15 xi + 6 xi^2): g' vanishes to second order at both ends.
inline Graded grade(double xi) {
  auto g = [](double z) { return z * z * z * (10.0 - 15.0 * z + 6.0 * z * z); };
  const double w = 1.0 - xi;
  return {g(xi), g(w), 30.0 * xi * xi * w * w};
}

inline double shell_ratio_2d(const ModelConfig& c) { return std::exp2(c.hd() - 2.0); }
inline double shell_ratio_4d(const ModelConfig& c) { return std::exp2(2.0 * c.hd() - 4.0); }
inline double eps_growth(const ModelConfig& c) { return std::exp2(2.0 * c.hurst()); }

inline std::string shell_evidence(const ModelConfig& cfg, double ratio, int n) {
  std::ostringstream os;
  os.precision(6);
  os << "dyadic shell ratio 2^(" << (n == 2 ? "Hd-2" : "2Hd-4") << ") = " << ratio
     << " >= 1 so the shell sum diverges; radial exponent 3-2Hd = " << radial_rate(cfg) << " <= -1";
  return os.str();
}

// Cells of the outer shell [0,T]^2 \ [0,T/2]^2 in (first, second); the two
// off-diagonal cells are listed separately.
struct OuterCell {
  double a_lo, a_hi, b_lo, b_hi;
};

inline std::array<OuterCell, 3> outer_shell(double T) {
  const double h = 0.5 * T;
  return {OuterCell{h, T, 0.0, h}, OuterCell{0.0, h, h, T}, OuterCell{h, T, h, T}};
}

// Time orderings within the pairs (t, v) and (s, u): whether t > v and s > u.
struct Ordering {
  bool t_outer;
  bool s_outer;
};

struct WeightedOrdering {
  Ordering ordering;
  double weight;
};

// The process swap (s,t,u,v) -> (t,s,v,u) leaves every integrand invariant and
// exchanges the two mixed orderings; the pair swap (s,t,u,v) -> (u,v,s,t)
// exchanges the two regularizers and maps {v<t, u<s} to {t<v, s<u}.
inline std::vector<WeightedOrdering> orderings_symmetric() {
  return {{{true, true}, 2.0}, {{true, false}, 2.0}};
}
inline std::vector<WeightedOrdering> orderings_asymmetric() {
  return {{{true, true}, 1.0}, {{false, false}, 1.0}, {{true, false}, 2.0}};
}
inline std::vector<WeightedOrdering> orderings_simplex() { return {{{true, true}, 1.0}}; }

struct Piece4 {
  OuterCell cell;
  Ordering ordering;
  double weight;
  double reg_scale;
};

struct Piece2 {
  OuterCell cell;
  double weight;
  double reg_scale;
};

inline CubatureOptions cubature_options(const QuadOptions& o, double abs_tol) {
  CubatureOptions c;
  c.abs_tol = abs_tol;
  c.rel_tol = o.rel_tol;
  c.max_evals = o.max_evals;
  c.workers = o.workers;
  return c;
}

inline QuadratureResult to_result(const CubatureResult& c, double scale, double extra_error) {
  QuadratureResult r;
  r.value = c.value * scale;
  r.error_estimate = c.error * std::abs(scale) + extra_error;
  r.subdivisions = c.regions;
  r.evaluations = c.evaluations;
  return r;
}

[[noreturn]] inline void throw_budget(const char* what, const QuadratureResult& partial) {
  std::ostringstream os;
  os.precision(6);
  os << what << ": tolerance not reached within the evaluation budget (partial value " << partial.value
     << ", error estimate " << partial.error_estimate << ")";
  throw BudgetError(os.str(), partial);
}

// kernel(A, B, reg_scale) on pair parts of (t, v) and (s, u).
template <class Kernel>
CubatureResult integrate_pieces4(const ModelConfig& cfg, const std::vector<Piece4>& pieces, Kernel&& kernel,
                                 const CubatureOptions& opt) {
  const double p = 2.0 * cfg.hurst();
  std::vector<Box<4>> boxes;
  boxes.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    Box<4> b;
    b.lo = {0, 0, 0, 0};
    b.hi = {1, 1, 1, 1};
    b.tag = static_cast<int>(i);
    boxes.push_back(b);
  }
  auto f = [&](int tag, const std::array<double, 4>& xi) {
    const Piece4& pc = pieces[static_cast<std::size_t>(tag)];
    const Graded g0 = grade(xi[0]), g1 = grade(xi[1]), g2 = grade(xi[2]), g3 = grade(xi[3]);
    const double wa = pc.cell.a_hi - pc.cell.a_lo, wb = pc.cell.b_hi - pc.cell.b_lo;
    const double oa = pc.cell.a_lo + wa * g0.x;
    const double ob = pc.cell.b_lo + wb * g1.x;
    const double jac = wa * g0.jac * wb * g1.jac * g2.jac * g3.jac * oa * ob;
    if (!(jac > 0.0) || !(g2.x > 0.0) || !(g2.xm > 0.0) || !(g3.x > 0.0) || !(g3.xm > 0.0)) return 0.0;
    const detail::PairParts a = detail::PairParts::from_ratio(oa, g2.x, g2.xm, p, pc.ordering.t_outer);
    const detail::PairParts b = detail::PairParts::from_ratio(ob, g3.x, g3.xm, p, pc.ordering.s_outer);
    const double k = kernel(a, b, pc.reg_scale);
    return std::isfinite(k) ? pc.weight * jac * k : 0.0;
  };
  return adaptive_cubature<4>(f, boxes, opt);
}

template <class Kernel>
CubatureResult integrate_pieces2(const ModelConfig& cfg, const std::vector<Piece2>& pieces, Kernel&& kernel,
                                 const CubatureOptions& opt) {
  const double p = 2.0 * cfg.hurst();
  std::vector<Box<2>> boxes;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    Box<2> b;
    b.lo = {0, 0};
    b.hi = {1, 1};
    b.tag = static_cast<int>(i);
    boxes.push_back(b);
  }
  auto f = [&](int tag, const std::array<double, 2>& xi) {
    const Piece2& pc = pieces[static_cast<std::size_t>(tag)];
    const Graded g0 = grade(xi[0]), g1 = grade(xi[1]);
    const double wa = pc.cell.a_hi - pc.cell.a_lo, wb = pc.cell.b_hi - pc.cell.b_lo;
    const double s = pc.cell.a_lo + wa * g0.x;
    const double t = pc.cell.b_lo + wb * g1.x;
    const double jac = wa * g0.jac * wb * g1.jac;
    if (!(jac > 0.0)) return 0.0;
    const double k = kernel(powp(s, p) + powp(t, p), pc.reg_scale);
    return std::isfinite(k) ? pc.weight * jac * k : 0.0;
  };
  return adaptive_cubature<2>(f, boxes, opt);
}

// Shell pieces 0..shells-1 over the given orderings.
inline std::vector<Piece4> shell_pieces4(const ModelConfig& cfg, const std::vector<WeightedOrdering>& ords,
                                         int shells) {
  const double r = shell_ratio_4d(cfg), q = eps_growth(cfg);
  std::vector<Piece4> out;
  for (int k = 0; k < shells; ++k) {
    for (const auto& o : ords)
      for (const auto& cell : outer_shell(cfg.horizon()))
        out.push_back({cell, o.ordering, o.weight * std::pow(r, k), std::pow(q, k)});
  }
  return out;
}

// Smallest shell count K with bound0 * base^{-K} <= target.
inline int shells_for_tail(double bound0, double target, int base = 16) {
  if (!(target > 0.0)) return 200;
  int k = 0;
  double b = bound0 / base;
  while (b > target && k < 200) {
    b /= base;
    ++k;
  }
  return k + 1;
}

// Integral over [0,T]^4 of a non-negative kernel whose value at a point is
// bounded by tail_bound_density(reg_scale) in shell k; regularizers scale by q^k.
template <class Kernel>
QuadratureResult regularized4(const ModelConfig& cfg, const std::vector<WeightedOrdering>& ords, Kernel&& kernel,
                              double density_bound, double value_guess, const QuadOptions& opt, const char* what) {
  const double T = cfg.horizon();
  const double pref = std::pow(2.0 * std::numbers::pi, -static_cast<double>(cfg.dim()));
  // Shells j >= K: sum r^j vol(shell) (q^{2j} reg)^{-d/2} <= T^4 bound 16^{-K}.
  const double bound0 = std::pow(T, 4) * density_bound * pref;
  auto target_for = [&](double value) { return 0.05 * std::max(opt.abs_tol_4d, opt.rel_tol * std::abs(value)); };
  int shells = shells_for_tail(bound0, target_for(value_guess));
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto pieces = shell_pieces4(cfg, ords, shells);
    const double tail = bound0 * std::pow(16.0, -shells);
    const CubatureResult c = integrate_pieces4(cfg, pieces, kernel, cubature_options(opt, opt.abs_tol_4d / pref));
    QuadratureResult r = to_result(c, pref, tail);
    const int needed = shells_for_tail(bound0, target_for(r.value));
    if (needed <= shells || attempt == 1) {
      if (!c.converged) throw_budget(what, r);
      return r;
    }
    shells = needed;
  }
  return {};
}

// Single outer shell at zero regularization, summed as a geometric series.
template <class Kernel>
QuadratureResult singular4(const ModelConfig& cfg, const std::vector<WeightedOrdering>& ords, Kernel&& kernel,
                           double prefactor, const QuadOptions& opt, const char* what) {
  const double r = shell_ratio_4d(cfg);
  const double scale = prefactor / (1.0 - r);
  const auto pieces = shell_pieces4(cfg, ords, 1);
  const CubatureResult c = integrate_pieces4(cfg, pieces, kernel, cubature_options(opt, opt.abs_tol_4d / scale));
  QuadratureResult res = to_result(c, scale, 0.0);
  if (!c.converged) throw_budget(what, res);
  return res;
}

inline QuadratureResult diverged_result(std::string evidence, double lower_bound) {
  QuadratureResult r;
  r.value = lower_bound;
  r.error_estimate = 0.0;
  r.diverged = true;
  r.divergence_evidence = std::move(evidence);
  return r;
}

// Unnormalized integral of (reg + lambda)^{-d/2} over the outer shells
// 0..shells-1 of [0,T]^2.
inline CubatureResult m1_shells(double eps, const ModelConfig& cfg, int shells, double abs_tol,
                                const QuadOptions& opt) {
  const double T = cfg.horizon(), h = 0.5 * T;
  const double r = shell_ratio_2d(cfg), q = eps_growth(cfg);
  std::vector<Piece2> pieces;
  for (int k = 0; k < shells; ++k) {
    pieces.push_back({{h, T, 0.0, h}, 2.0 * std::pow(r, k), std::pow(q, k)});
    pieces.push_back({{h, T, h, T}, std::pow(r, k), std::pow(q, k)});
  }
  const int d = cfg.dim();
  auto kernel = [eps, d](double lambda, double scale) { return inv_pow_half(lambda + eps * scale, d); };
  return integrate_pieces2(cfg, pieces, kernel, cubature_options(opt, abs_tol));
}

}  // namespace detail

/// E[I_eps] = (2 pi)^{-d/2} int_{[0,T]^2} (eps + s^{2H} + t^{2H})^{-d/2} ds dt.
inline QuadratureResult m1(double eps, const ModelConfig& cfg, const QuadOptions& opt = {}) {
  detail::check_eps(eps, "eps", true);
  const int d = cfg.dim();
  const double T = cfg.horizon();
  const double pref = std::pow(2.0 * std::numbers::pi, -0.5 * d);
  const double r = detail::shell_ratio_2d(cfg);
  if (eps == 0.0) {
    if (cfg.hd() >= 2.0) {
      constexpr int shown = 64;
      const auto c = detail::m1_shells(0.0, cfg, 1, opt.abs_tol_2d, opt);
      double partial = 0.0, rk = 1.0;
      for (int k = 0; k < shown; ++k, rk *= r) partial += rk * c.value;
      return detail::diverged_result(detail::shell_evidence(cfg, r, 2) + "; partial sum over 64 shells is a lower bound",
                                     pref * partial);
    }
    const double scale = pref / (1.0 - r);
    const auto c = detail::m1_shells(0.0, cfg, 1, opt.abs_tol_2d / scale, opt);
    auto res = detail::to_result(c, scale, 0.0);
    if (!c.converged) detail::throw_budget("m1", res);
    return res;
  }
  // shells j >= K contribute at most T^2 eps^{-d/2} 4^{-K}
  const double bound0 = T * T * std::pow(eps, -0.5 * d) * pref;
  const double guess = pref * T * T * std::pow(eps + 2.0 * std::pow(T, 2.0 * cfg.hurst()), -0.5 * d);
  auto target_for = [&](double v) { return 0.05 * std::max(opt.abs_tol_2d, opt.rel_tol * std::abs(v)); };
  int shells = detail::shells_for_tail(bound0, target_for(guess), 4);
  for (int attempt = 0;; ++attempt) {
    const auto c = detail::m1_shells(eps, cfg, shells, opt.abs_tol_2d / pref, opt);
    auto res = detail::to_result(c, pref, bound0 * std::pow(4.0, -shells));
    const int needed = detail::shells_for_tail(bound0, target_for(res.value), 4);
    if (needed <= shells || attempt == 1) {
      if (!c.converged) detail::throw_budget("m1", res);
      return res;
    }
    shells = needed;
  }
}

/// E[I_eps I_eta] = (2 pi)^{-d} int_{[0,T]^4} ((lambda+eps)(rho+eta) - mu^2)^{-d/2}.
inline QuadratureResult m_cross(double eps, double eta, const ModelConfig& cfg, const QuadOptions& opt = {}) {
  detail::check_eps(eps, "eps", false);
  detail::check_eps(eta, "eta", false);
  const int d = cfg.dim();
  auto kernel = [eps, eta, d](const detail::PairParts& a, const detail::PairParts& b, double s) {
    const double lambda = a.var_first + b.var_first;  // t, s
    const double rho = a.var_second + b.var_second;   // v, u
    const double e = eps * s, h = eta * s;
    return detail::inv_pow_half(detail::det_from_parts(a, b) + e * rho + h * lambda + e * h, d);
  };
  const double T = cfg.horizon(), lam_max = 2.0 * std::pow(T, 2.0 * cfg.hurst());
  const double guess = std::pow(2.0 * std::numbers::pi, -d) * std::pow(T, 4) *
                       detail::inv_pow_half((lam_max + eps) * (lam_max + eta), d);
  const auto ords = eps == eta ? detail::orderings_symmetric() : detail::orderings_asymmetric();
  return detail::regularized4(cfg, ords, kernel, detail::inv_pow_half(eps * eta, d), guess, opt, "m_cross");
}

/// E[I_eps^2]. CrossTerm::drop forces mu = 0, which factorizes the integrand into m1(eps)^2.
inline QuadratureResult m2(double eps, const ModelConfig& cfg, const QuadOptions& opt = {},
                           CrossTerm cross = CrossTerm::keep) {
  detail::check_eps(eps, "eps", false);
  if (cross == CrossTerm::keep) return m_cross(eps, eps, cfg, opt);
  const int d = cfg.dim();
  auto kernel = [eps, d](const detail::PairParts& a, const detail::PairParts& b, double s) {
    const double e = eps * s;
    return detail::inv_pow_half((a.var_first + b.var_first + e) * (a.var_second + b.var_second + e), d);
  };
  const double T = cfg.horizon(), lam_max = 2.0 * std::pow(T, 2.0 * cfg.hurst());
  const double guess =
      std::pow(2.0 * std::numbers::pi, -d) * std::pow(T, 4) * detail::inv_pow_half((lam_max + eps) * (lam_max + eps), d);
  return detail::regularized4(cfg, detail::orderings_symmetric(), kernel, detail::inv_pow_half(eps * eps, d), guess,
                              opt, "m2");
}

/// E|I_eps - I_eta|^2 = m2(eps) + m2(eta) - 2 m_cross(eps, eta), integrated as
/// one integral of the (pointwise non-negative) second difference of the integrand.
inline QuadratureResult cauchy_gap_result(double eps, double eta, const ModelConfig& cfg, const QuadOptions& opt = {}) {
  detail::check_eps(eps, "eps", false);
  detail::check_eps(eta, "eta", false);
  if (eps == eta) return {};
  const int d = cfg.dim();
  auto kernel = [eps, eta, d](const detail::PairParts& a, const detail::PairParts& b, double s) {
    const double lambda = a.var_first + b.var_first;
    const double rho = a.var_second + b.var_second;
    const double det = detail::det_from_parts(a, b);
    const double e = eps * s, h = eta * s;
    auto f = [&](double x, double y) { return detail::inv_pow_half(det + x * rho + y * lambda + x * y, d); };
    return std::max(0.0, f(e, e) + f(h, h) - f(e, h) - f(h, e));
  };
  const double lo = std::min(eps, eta);
  // gap values can be far below m2; the guess only seeds the shell count
  const double guess = 0.0;
  return detail::regularized4(cfg, detail::orderings_symmetric(), kernel, 2.0 * detail::inv_pow_half(lo * lo, d), guess,
                              opt, "cauchy_gap");
}

inline double cauchy_gap(double eps, double eta, const ModelConfig& cfg, const QuadOptions& opt = {}) {
  return cauchy_gap_result(eps, eta, cfg, opt).value;
}

/// (2 pi)^{-d} int_{[0,T]^4} (lambda rho - mu^2)^{-d/2} - (lambda rho)^{-d/2}: the eps -> 0 variance.
inline QuadratureResult var_limit(const ModelConfig& cfg, const QuadOptions& opt = {}) {
  const int d = cfg.dim();
  const double pref = std::pow(2.0 * std::numbers::pi, -d);
  if (cfg.hd() >= 2.0)
    return detail::diverged_result(detail::shell_evidence(cfg, detail::shell_ratio_4d(cfg), 4) +
                                       "; the integrand is non-negative, 0 is the reported lower bound",
                                   0.0);
  auto kernel = [d](const detail::PairParts& a, const detail::PairParts& b, double) {
    const double lr = (a.var_first + b.var_first) * (a.var_second + b.var_second);
    const double det = detail::det_from_parts(a, b);
    if (!(det > 0.0)) return 0.0;
    return std::max(0.0, detail::inv_pow_half(det, d) - detail::inv_pow_half(lr, d));
  };
  return detail::singular4(cfg, detail::orderings_symmetric(), kernel, pref, opt, "var_limit");
}

/// A_T = int_{[0,T]^4} (lambda rho - mu^2)^{-d/2}, without prefactor.
inline QuadratureResult a_t_integral(const ModelConfig& cfg, const QuadOptions& opt = {}) {
  const int d = cfg.dim();
  if (cfg.hd() >= 2.0) {
    // A_T >= (int (lambda)^{-d/2})^2 since det <= lambda rho
    const double pref1 = std::pow(2.0 * std::numbers::pi, -0.5 * d);
    const double m1_lower = m1(0.0, cfg, opt).value / pref1;
    return detail::diverged_result(detail::shell_evidence(cfg, detail::shell_ratio_4d(cfg), 4) +
                                       "; the value is the square of a partial two-time shell sum",
                                   m1_lower * m1_lower);
  }
  auto kernel = [d](const detail::PairParts& a, const detail::PairParts& b, double) {
    const double det = detail::det_from_parts(a, b);
    return det > 0.0 ? detail::inv_pow_half(det, d) : 0.0;
  };
  return detail::singular4(cfg, detail::orderings_symmetric(), kernel, 1.0, opt, "a_t_integral");
}

/// int over {0<v<t<T, 0<u<s<T} of (phi(t,v) + phi(s,u))^{-d/2} by direct 4D quadrature.
inline QuadratureResult reduction_direct(const ModelConfig& cfg, const QuadOptions& opt = {}) {
  if (cfg.hd() >= 2.0) throw DomainError("reduction integral is only finite for Hd < 2");
  const int d = cfg.dim();
  auto kernel = [d](const detail::PairParts& a, const detail::PairParts& b, double) {
    const double s = a.phi() + b.phi();
    return s > 0.0 ? detail::inv_pow_half(s, d) : 0.0;
  };
  return detail::singular4(cfg, detail::orderings_simplex(), kernel, 1.0, opt, "reduction_direct");
}

/// A(z) = int_0^T int_0^t exp(-phi(t,v) z) dv dt by 2D adaptive quadrature (v = t y).
inline double a_z(double z, const ModelConfig& cfg, const QuadOptions& opt = {}) {
  if (!(z >= 0.0) || std::isinf(z)) throw ParameterError("z", "must be finite and >= 0");
  const double T = cfg.horizon();
  if (z == 0.0) return 0.5 * T * T;
  const double p = 2.0 * cfg.hurst();
  auto f = [&](int, const std::array<double, 2>& xi) {
    const auto g0 = detail::grade(xi[0]), g1 = detail::grade(xi[1]);
    const double t = T * g0.x;
    const double jac = T * g0.jac * g1.jac * t;
    if (!(jac > 0.0) || !(g1.x > 0.0) || !(g1.xm > 0.0)) return 0.0;
    const double phi = detail::PairParts::from_ratio(t, g1.x, g1.xm, p, true).phi();
    return jac * std::exp(-z * phi);
  };
  const std::vector<Box<2>> boxes{Box<2>{{0, 0}, {1, 1}, 0}};
  const auto c = adaptive_cubature<2>(f, boxes, detail::cubature_options(opt, opt.abs_tol_2d * T * T));
  if (!c.converged) detail::throw_budget("a_z", detail::to_result(c, 1.0, 0.0));
  return c.value;
}

namespace detail {

// Dyadic breakpoints 0, 2^-J, ..., 1/4, 1/2 on [0, 1/2].
inline std::vector<double> dyadic_breaks(int levels) {
  std::vector<double> b{0.0};
  for (int j = levels; j >= 1; --j) b.push_back(std::ldexp(1.0, -j));
  return b;
}

// int_0^1 G(alpha, x phi(1,y)) dy with G(a, x) = x^{-a} gamma(a, x).
inline double gamma_profile(double x, const ModelConfig& cfg, double rel_tol) {
  const double p = 2.0 * cfg.hurst();
  const double alpha = 1.0 / p;
  // phi(1, y) ~ y^{2H} near both ends: refine down to y ~ x^{-1/(2H)}
  const int levels = std::clamp(static_cast<int>(std::ceil(std::log2(std::max(x, 2.0)) / p)) + 4, 4, 1000);
  const auto bp = dyadic_breaks(levels);
  CubatureOptions o;
  o.abs_tol = 1e-300;
  o.rel_tol = rel_tol;
  o.max_evals = 1'000'000;
  auto lower = [&](double y) {
    return lower_inc_gamma_scaled(alpha, x * detail::PairParts::from_ratio(1.0, y, 1.0 - y, p, true).phi());
  };
  auto upper = [&](double ym) {
    return lower_inc_gamma_scaled(alpha, x * detail::PairParts::from_ratio(1.0, 1.0 - ym, ym, p, true).phi());
  };
  return adaptive_gk(lower, std::span<const double>(bp), o).value + adaptive_gk(upper, std::span<const double>(bp), o).value;
}

}  // namespace detail

/// A(z) through the incomplete gamma function:
/// A(z) = T^2/(4H) int_0^1 G(1/(2H), z T^{4H} phi(1,y)) dy, G(a,x) = x^{-a} gamma(a,x).
inline double a_z_gamma(double z, const ModelConfig& cfg, double rel_tol = 1e-12) {
  if (!(z >= 0.0) || std::isinf(z)) throw ParameterError("z", "must be finite and >= 0");
  const double T = cfg.horizon(), h = cfg.hurst();
  if (z == 0.0) return 0.5 * T * T;
  return T * T / (4.0 * h) * detail::gamma_profile(z * std::pow(T, 4.0 * h), cfg, rel_tol);
}

/// (1 / Gamma(d/2)) int_0^inf z^{d/2-1} A(z)^2 dz, split at z = 1; the part
/// z > 1 is mapped to (0, 1] by z = 1/w.
inline QuadratureResult reduction_bound(const ModelConfig& cfg, const QuadOptions& opt = {}) {
  if (cfg.hd() >= 2.0) throw DomainError("reduction bound is only established for Hd < 2");
  const double half_d = 0.5 * cfg.dim();
  CubatureOptions o;
  o.abs_tol = 1e-300;
  o.rel_tol = std::max(opt.rel_tol, 1e-10);
  o.max_evals = opt.max_evals;
  auto head = [&](double z) {
    const double a = a_z_gamma(z, cfg);
    return std::pow(z, half_d - 1.0) * a * a;
  };
  auto tail = [&](double w) {
    const double a = a_z_gamma(1.0 / w, cfg);
    return std::pow(w, -half_d - 1.0) * a * a;
  };
  // beta = 1/H - d/2 > 0 is the algebraic decay of the tail integrand at w = 0
  const double beta = 1.0 / cfg.hurst() - half_d;
  const int levels = std::clamp(static_cast<int>(std::ceil(40.0 / beta)), 8, 400);
  const auto bp = detail::dyadic_breaks(levels);
  std::vector<double> head_bp{0.0, 0.5, 1.0};
  const auto h = adaptive_gk(head, std::span<const double>(head_bp), o);
  std::vector<double> tail_bp(bp.begin(), bp.end());
  tail_bp.push_back(1.0);
  const auto t = adaptive_gk(tail, std::span<const double>(tail_bp.data() + 1, tail_bp.size() - 1), o);
  // the remaining piece (0, 2^{-levels}] is bounded by the integrand there times w / beta
  const double w_end = std::ldexp(1.0, -levels);
  const double rest = tail(w_end) * w_end / beta * 2.0;
  const double g = std::tgamma(half_d);
  QuadratureResult r;
  r.value = (h.value + t.value + 0.5 * rest) / g;
  r.error_estimate = (h.error + t.error + 0.5 * rest) / g;
  r.subdivisions = h.regions + t.regions;
  r.evaluations = h.evaluations + t.evaluations;
  if (!h.converged || !t.converged) detail::throw_budget("reduction_bound", r);
  return r;
}

}  // namespace fbmilt
