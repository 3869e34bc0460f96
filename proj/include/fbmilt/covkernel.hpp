#pragma once

// Closed-form covariance algebra of two independent fractional Brownian
// motions: R_H, the variances lambda/rho, the cross covariance mu, the
// determinant of Var(B_t - B~_s, B_v - B~_u), the single-process determinant
// phi and the lower incomplete gamma function used to bound it.
//
// Every function is pure. Only the first coordinate of the processes enters;
// the dimension is validated by ModelConfig and never used here.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fbmilt/errors.hpp"

namespace fbmilt {

/// The (H, d, T) triple every computation is parameterized by.
class ModelConfig {
 public:
  ModelConfig(double hurst, int dim, double horizon = 1.0)
      : hurst_(hurst), dim_(dim), horizon_(horizon) {
    if (!(hurst > 0.0 && hurst < 1.0))
      throw ParameterError("hurst", "Hurst parameter must lie in (0,1), got " + std::to_string(hurst));
    if (dim < 2)
      throw ParameterError("dim", "dimension must satisfy d >= 2, got " + std::to_string(dim));
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw ParameterError("horizon", "horizon must be positive, got " + std::to_string(horizon));
  }

  double hurst() const noexcept { return hurst_; }
  int dim() const noexcept { return dim_; }
  double horizon() const noexcept { return horizon_; }
  double hd() const noexcept { return hurst_ * dim_; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;

 private:
  double hurst_;
  int dim_;
  double horizon_;
};

/// Times (s, t, u, v): t, v index B and s, u index B~.
struct TimeQuadruple {
  double s = 0.0;
  double t = 0.0;
  double u = 0.0;
  double v = 0.0;

  TimeQuadruple scaled(double c) const { return {c * s, c * t, c * u, c * v}; }
};

namespace detail {

inline void check_hurst(double h) {
  if (!(h > 0.0 && h < 1.0)) throw ParameterError("hurst", "Hurst parameter must lie in (0,1)");
}

inline void check_time(double x, const char* name) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw ParameterError(name, "time must be finite and nonnegative");
}

inline void check_quadruple(const TimeQuadruple& q) {
  check_time(q.s, "s");
  check_time(q.t, "t");
  check_time(q.u, "u");
  check_time(q.v, "v");
}

inline double powp(double x, double p) { return x > 0.0 ? std::pow(x, p) : 0.0; }

// x^p - (x - d)^p for 0 <= d <= x, accurate when d << x.
inline double pow_gap(double x, double d, double p) {
  if (d <= 0.0) return 0.0;
  if (d >= x) return powp(x, p);
  return -std::pow(x, p) * std::expm1(p * std::log1p(-d / x));
}

// hi^p - lo^p for 0 <= lo <= hi without losing digits when lo ~ hi.
inline double pow_diff(double hi, double lo, double p) {
  if (lo <= 0.5 * hi) return powp(hi, p) - powp(lo, p);
  return pow_gap(hi, hi - lo, p);
}

// Cov(B_a - B_b, B_b) = (a^p - b^p - |a-b|^p) / 2 for one fBm, p = 2H.
inline double increment_cross(double a, double b, double p, double c) {
  if (a >= b) {
    // (a^p - |a-b|^p) - b^p or (a^p - b^p) - |a-b|^p, whichever cancels less
    if (b <= 0.5 * a) return 0.5 * (pow_gap(a, b, p) - powp(b, p));
    return 0.5 * (pow_gap(a, a - b, p) - c);
  }
  return -0.5 * (pow_diff(b, a, p) + c);
}

// Covariance data of one process sampled at two times (first, second), with
// p = 2H: the variances, c = Var(B_first - B_second) and the two increment
// cross covariances. Everything the two-process determinant needs.
struct PairParts {
  double var_first = 0.0;
  double var_second = 0.0;
  double c = 0.0;
  double k_fs = 0.0;  // Cov(B_first - B_second, B_second)
  double k_sf = 0.0;  // Cov(B_second - B_first, B_first)

  static PairParts from_times(double first, double second, double p) {
    PairParts r;
    r.var_first = powp(first, p);
    r.var_second = powp(second, p);
    r.c = powp(std::abs(first - second), p);
    r.k_fs = increment_cross(first, second, p, r.c);
    r.k_sf = increment_cross(second, first, p, r.c);
    return r;
  }

  // Times o and o*y, 0 < y < 1, with ym = 1 - y supplied exactly by the
  // caller. first_outer selects which of the two times is o.
  static PairParts from_ratio(double o, double y, double ym, double p, bool first_outer) {
    const double op = powp(o, p);
    const double ly = y > 0.5 ? std::log1p(-ym) : std::log(y);
    const double lym = y > 0.5 ? std::log(ym) : std::log1p(-y);
    const double yp = std::exp(p * ly);
    const double ymp = std::exp(p * lym);
    const double om_yp = -std::expm1(p * ly);    // 1 - y^p
    const double om_ymp = -std::expm1(p * lym);  // 1 - (1-y)^p
    // 2 Cov(B_o - B_oy, B_oy) / o^p = 1 - y^p - (1-y)^p, formed without cancellation
    const double k_out = 0.5 * op * (y <= 0.5 ? om_ymp - yp : om_yp - ymp);
    // 2 Cov(B_oy - B_o, B_o) / o^p = y^p - 1 - (1-y)^p
    const double k_in = -0.5 * op * (om_yp + ymp);
    PairParts r;
    r.c = op * ymp;
    if (first_outer) {
      r.var_first = op;
      r.var_second = op * yp;
      r.k_fs = k_out;
      r.k_sf = k_in;
    } else {
      r.var_first = op * yp;
      r.var_second = op;
      r.k_fs = k_in;
      r.k_sf = k_out;
    }
    return r;
  }

  // det Var(B_first, B_second), anchored on the smaller variance.
  double phi() const {
    return var_second <= var_first ? std::max(0.0, var_second * c - k_fs * k_fs)
                                   : std::max(0.0, var_first * c - k_sf * k_sf);
  }
};

// det Var(B_t - B~_s, B_v - B~_u) from the parts of (t, v) and (s, u). Both
// 2x2 covariances are transformed by the same unimodular change of basis,
// anchored on the component with the smaller variance, so that the
// determinant is formed from small quantities near every degenerate set.
inline double det_from_parts(const PairParts& a, const PairParts& b) {
  const double sum_c = a.c + b.c;
  if (a.var_second + b.var_second <= a.var_first + b.var_first) {
    const double cross = a.k_fs + b.k_fs;
    return std::max(0.0, sum_c * (a.var_second + b.var_second) - cross * cross);
  }
  const double cross = a.k_sf + b.k_sf;
  return std::max(0.0, sum_c * (a.var_first + b.var_first) - cross * cross);
}

inline double phi_det_unchecked(double t, double v, double p) {
  if (std::min(t, v) <= 0.0 || t == v) return 0.0;
  return PairParts::from_times(t, v, p).phi();
}

inline double det_var_z_unchecked(const TimeQuadruple& q, double p) {
  return det_from_parts(PairParts::from_times(q.t, q.v, p), PairParts::from_times(q.s, q.u, p));
}

// e^{-x} sum_n x^n / (a (a+1) ... (a+n)) = x^{-a} gamma(a, x).
inline double gamma_series_scaled(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x);
}

// Upper incomplete gamma Gamma(a, x) by the modified Lentz continued fraction.
inline double gamma_upper_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x)) * h;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterError("alpha", "alpha must be positive");
}

}  // namespace detail

/// R_H(s,t) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
inline double cov_rh(double s, double t, double h) {
  detail::check_hurst(h);
  detail::check_time(s, "s");
  detail::check_time(t, "t");
  const double p = 2.0 * h;
  const double hi = std::max(s, t), lo = std::min(s, t);
  const double c = detail::powp(hi - lo, p);
  // R = lo^p + Cov(B_hi - B_lo, B_lo)
  return detail::powp(lo, p) + detail::increment_cross(hi, lo, p, c);
}

/// lambda(s,t) = s^{2H} + t^{2H}, the variance of B_t - B~_s in one coordinate.
inline double lambda_var(double s, double t, double h) {
  detail::check_hurst(h);
  detail::check_time(s, "s");
  detail::check_time(t, "t");
  return detail::powp(s, 2.0 * h) + detail::powp(t, 2.0 * h);
}

/// Covariance of B_t - B~_s and B_v - B~_u in one coordinate.
inline double mu_cov(const TimeQuadruple& q, double h) {
  detail::check_hurst(h);
  detail::check_quadruple(q);
  const double p = 2.0 * h;
  using detail::powp;
  return 0.5 * (powp(q.s, p) + powp(q.t, p) + powp(q.u, p) + powp(q.v, p) -
                powp(std::abs(q.t - q.v), p) - powp(std::abs(q.s - q.u), p));
}

/// lambda(s,t) rho(u,v) - mu^2 = det Var(B_t - B~_s, B_v - B~_u). Nonnegative.
inline double det_var_z(const TimeQuadruple& q, double h) {
  detail::check_hurst(h);
  detail::check_quadruple(q);
  return detail::det_var_z_unchecked(q, 2.0 * h);
}

/// phi(t,v) = det Var(B_t, B_v) = t^{2H} v^{2H} - R_H(t,v)^2.
inline double phi_det(double t, double v, double h) {
  detail::check_hurst(h);
  detail::check_time(t, "t");
  detail::check_time(v, "v");
  return detail::phi_det_unchecked(t, v, 2.0 * h);
}

/// phi(cos theta, sin theta) for theta in [0, pi/4].
inline double phi_angular(double theta, double h) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 4.0))
    throw ParameterError("theta", "angle must lie in [0, pi/4]");
  return phi_det(std::cos(theta), std::sin(theta), h);
}

/// Lower incomplete gamma function gamma(alpha, x) = int_0^x e^{-y} y^{alpha-1} dy.
inline double lower_inc_gamma(double alpha, double x) {
  detail::check_alpha(alpha);
  if (!(x >= 0.0) || std::isnan(x)) throw ParameterError("x", "argument must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return std::tgamma(alpha);
  if (x < alpha + 1.0) return detail::gamma_series_scaled(alpha, x) * std::pow(x, alpha);
  return std::max(0.0, std::tgamma(alpha) - detail::gamma_upper_cf(alpha, x));
}

/// x^{-alpha} gamma(alpha, x), finite at x = 0 where it equals 1/alpha.
inline double lower_inc_gamma_scaled(double alpha, double x) {
  detail::check_alpha(alpha);
  if (!(x >= 0.0) || std::isnan(x)) throw ParameterError("x", "argument must be nonnegative");
  if (x < alpha + 1.0) return detail::gamma_series_scaled(alpha, x);
  return lower_inc_gamma(alpha, x) * std::pow(x, -alpha);
}

/// K(alpha) = max(1/alpha, Gamma(alpha)).
inline double gamma_bound_k(double alpha) {
  detail::check_alpha(alpha);
  return std::max(1.0 / alpha, std::tgamma(alpha));
}

}  // namespace fbmilt
