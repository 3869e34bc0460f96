#pragma once

// Randomized and grid property suites for the covariance lemmas.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "fbmilt/covkernel.hpp"
#include "fbmilt/rng.hpp"

namespace fbmilt {

struct LemmaCheck {
  std::string name;
  std::int64_t checked = 0;
  std::int64_t violations = 0;
  double worst = 0.0;  // largest normalized violation (<= 0 when none)
  bool pass() const { return violations == 0; }
};

/// gamma(a, x) <= K(a) x^e for a in {1/4, 1/2, 1, 2, 4}, e in {a/4, a/2, 3a/4},
/// x on 241 log-spaced points of [1e-6, 1e6].
inline LemmaCheck verify_gamma_bound() {
  LemmaCheck c{"gamma_bound", 0, 0, -INFINITY};
  for (double a : {0.25, 0.5, 1.0, 2.0, 4.0})
    for (double f : {0.25, 0.5, 0.75})
      for (int i = 0; i <= 240; ++i) {
        const double x = std::pow(10.0, -6.0 + 0.05 * i);
        const double bound = gamma_bound_k(a) * std::pow(x, f * a);
        const double excess = lower_inc_gamma(a, x) / bound - 1.0;
        c.worst = std::max(c.worst, excess);
        ++c.checked;
        if (excess > 0.0) ++c.violations;
      }
  return c;
}

/// det_var_z(s,t,u,v) >= phi_det(t,v) + phi_det(s,u) on uniform quadruples with
/// 0 < v < t <= T, 0 < u < s <= T; a violation exceeds 1e-12 lambda rho.
inline LemmaCheck verify_superadditivity(std::int64_t samples_per_h = 1'000'000, std::uint64_t seed = 1,
                                         double horizon = 1.0) {
  LemmaCheck c{"superadditivity", 0, 0, -INFINITY};
  std::uint32_t stream = 0;
  for (double h : {0.25, 0.5, 0.75}) {
    PhiloxStream rng({seed, stream++, 0, 0});
    for (std::int64_t i = 0; i < samples_per_h; ++i) {
      const double t = horizon * rng.next_uniform(), s = horizon * rng.next_uniform();
      const double v = t * rng.next_uniform(), u = s * rng.next_uniform();
      if (!(v < t && u < s)) continue;
      const double scale = lambda_var(s, t, h) * lambda_var(u, v, h);
      const double slack = det_var_z({s, t, u, v}, h) - phi_det(t, v, h) - phi_det(s, u, h);
      const double excess = -slack / scale;
      c.worst = std::max(c.worst, excess);
      ++c.checked;
      if (excess > 1e-12) ++c.violations;
    }
  }
  return c;
}

/// phi_det(ct, cv) = c^{4H} phi_det(t, v) to relative 1e-10, c in (0, 10].
inline LemmaCheck verify_homogeneity(std::int64_t samples = 100'000, std::uint64_t seed = 2) {
  LemmaCheck c{"homogeneity", 0, 0, -INFINITY};
  PhiloxStream rng({seed, 0, 0, 0});
  for (std::int64_t i = 0; i < samples; ++i) {
    const double t = rng.next_uniform(), v = rng.next_uniform();
    const double h = 0.02 + 0.96 * rng.next_uniform();
    const double k = 10.0 * rng.next_uniform();
    const double base = std::pow(k, 4.0 * h) * phi_det(t, v, h);
    if (!(base > 0.0)) continue;
    const double rel = std::abs(phi_det(k * t, k * v, h) - base) / base;
    c.worst = std::max(c.worst, rel - 1e-10);
    ++c.checked;
    if (rel > 1e-10) ++c.violations;
  }
  return c;
}

/// phi(theta)/theta^{2H} and phi(pi/4 - theta)/theta^{2H} within [0.9, 1.1]
/// at theta = 1e-5 for H in {1/4, 1/2, 3/4}.
inline LemmaCheck verify_angular_asymptotics() {
  LemmaCheck c{"angular_asymptotics", 0, 0, -INFINITY};
  const double th = 1e-5;
  for (double h : {0.25, 0.5, 0.75}) {
    for (double ratio : {phi_angular(th, h) / std::pow(th, 2.0 * h),
                         phi_angular(std::numbers::pi / 4.0 - th, h) / std::pow(th, 2.0 * h)}) {
      const double dev = std::abs(ratio - 1.0);
      c.worst = std::max(c.worst, dev - 0.1);
      ++c.checked;
      if (dev > 0.1) ++c.violations;
    }
  }
  return c;
}

inline std::vector<LemmaCheck> verify_lemmas(std::uint64_t seed = 1) {
  return {verify_gamma_bound(), verify_superadditivity(1'000'000, seed), verify_homogeneity(100'000, seed + 1),
          verify_angular_asymptotics()};
}

}  // namespace fbmilt
