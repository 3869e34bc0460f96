#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <quadmath.h>

#include "fbmilt/covkernel.hpp"

using namespace fbmilt;

namespace {

// Naive formulas in binary128: the reference for the cancellation-avoiding
// double implementations.
__float128 qpow(__float128 x, __float128 p) { return x > 0 ? powq(x, p) : 0; }

__float128 naive_det(double s, double t, double u, double v, double h) {
  const __float128 p = 2 * static_cast<__float128>(h);
  const __float128 qs = s, qt = t, qu = u, qv = v;
  const __float128 lambda = qpow(qs, p) + qpow(qt, p);
  const __float128 rho = qpow(qu, p) + qpow(qv, p);
  const __float128 mu =
      (lambda + rho - qpow(fabsq(qt - qv), p) - qpow(fabsq(qs - qu), p)) / 2;
  return lambda * rho - mu * mu;
}

__float128 naive_phi(double t, double v, double h) {
  const __float128 p = 2 * static_cast<__float128>(h);
  const __float128 qt = t, qv = v;
  const __float128 r = (qpow(qt, p) + qpow(qv, p) - qpow(fabsq(qt - qv), p)) / 2;
  return qpow(qt, p) * qpow(qv, p) - r * r;
}

}  // namespace

TEST(ModelConfig, RejectsInvalidParameters) {
  EXPECT_THROW(ModelConfig(0.0, 2), ParameterError);
  EXPECT_THROW(ModelConfig(1.0, 2), ParameterError);
  EXPECT_THROW(ModelConfig(0.5, 2, -1.0), ParameterError);
  try {
    ModelConfig(0.5, 1);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_EQ(e.field(), "dim");
    EXPECT_NE(std::string(e.what()).find("d >= 2"), std::string::npos);
  }
}

TEST(CovRh, Examples) {
  EXPECT_DOUBLE_EQ(cov_rh(1.0, 1.0, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(cov_rh(0.0, 2.0, 0.7), 0.0);
  EXPECT_NEAR(cov_rh(1.0, 2.0, 0.5), 1.0, 1e-15);
  // 0.5 (1 + 4 - 1) at H = 1/2 with p = 1... and a rough case by hand
  EXPECT_NEAR(cov_rh(1.0, 3.0, 0.25), 0.5 * (std::sqrt(3.0) + 1.0 - std::sqrt(2.0)), 1e-15);
  EXPECT_THROW(cov_rh(-1.0, 1.0, 0.5), ParameterError);
  EXPECT_THROW(cov_rh(1.0, 1.0, 1.5), ParameterError);
}

TEST(LambdaMu, Examples) {
  EXPECT_DOUBLE_EQ(lambda_var(1.0, 1.0, 0.5), 2.0);
  EXPECT_NEAR(mu_cov({1, 1, 2, 2}, 0.5), 2.0, 1e-15);
  EXPECT_NEAR(mu_cov({0.3, 0.7, 0.3, 0.7}, 0.4), lambda_var(0.3, 0.7, 0.4), 1e-15);
  EXPECT_DOUBLE_EQ(mu_cov({0.3, 0.7, 0.0, 0.0}, 0.4), 0.0);
}

TEST(DetVarZ, Examples) {
  EXPECT_NEAR(det_var_z({1, 1, 2, 2}, 0.5), 4.0, 1e-14);
  EXPECT_NEAR(det_var_z({0.4, 0.9, 0.4, 0.9}, 0.3), 0.0, 1e-15);
  EXPECT_THROW(det_var_z({-0.1, 1, 1, 1}, 0.5), ParameterError);
}

TEST(DetVarZ, MatchesQuadPrecisionNearDegenerateSets) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (double h : {0.1, 0.25, 0.5, 0.75, 0.95}) {
    for (int i = 0; i < 20000; ++i) {
      const double s = U(rng), t = U(rng);
      // cluster around the diagonal {s=u, t=v} at random depths
      const double depth = std::pow(10.0, -12.0 * U(rng));
      const double u = std::clamp(s + depth * (U(rng) - 0.5), 0.0, 1.0);
      const double v = std::clamp(t + depth * (U(rng) - 0.5), 0.0, 1.0);
      const double ref = static_cast<double>(naive_det(s, t, u, v, h));
      const double got = det_var_z({s, t, u, v}, h);
      const double sum = lambda_var(s, t, h) + lambda_var(u, v, h);
      const double scale = sum * sum;
      // the naive form itself cancels to about 1e-34 * scale in binary128
      EXPECT_NEAR(got, ref, 1e-13 * std::abs(ref) + 1e-30 * scale) << s << ' ' << t << ' ' << u << ' ' << v << ' ' << h;
    }
  }
}

TEST(DetVarZ, HomogeneityOfOrder4H) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const TimeQuadruple q{U(rng), U(rng), U(rng), U(rng)};
    const double h = 0.05 + 0.9 * U(rng);
    const double c = 10.0 * U(rng) + 1e-3;
    EXPECT_NEAR(det_var_z(q.scaled(c), h), std::pow(c, 4 * h) * det_var_z(q, h),
                1e-11 * std::pow(c, 4 * h) * lambda_var(q.s, q.t, h) * lambda_var(q.u, q.v, h));
  }
}

TEST(DetVarZ, NonNegativeOnUniformSample) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (double h : {0.25, 0.5, 0.75}) {
    for (int i = 0; i < 1'000'000; ++i) {
      const TimeQuadruple q{U(rng), U(rng), U(rng), U(rng)};
      const double scale = std::max(1.0, lambda_var(q.s, q.t, h) * lambda_var(q.u, q.v, h));
      ASSERT_GE(det_var_z(q, h), -1e-12 * scale);
    }
  }
}

TEST(PhiDet, Examples) {
  EXPECT_DOUBLE_EQ(phi_det(0.7, 0.7, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(phi_det(0.7, 0.0, 0.3), 0.0);
  EXPECT_NEAR(phi_det(2.0, 1.0, 0.5), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(phi_det(0.2, 0.9, 0.35), phi_det(0.9, 0.2, 0.35));
}

TEST(PhiDet, MatchesQuadPrecisionNearDiagonal) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (double h : {0.1, 0.3, 0.5, 0.8}) {
    for (int i = 0; i < 20000; ++i) {
      const double t = U(rng);
      const double v = std::clamp(t * (1.0 - std::pow(10.0, -14.0 * U(rng))), 0.0, 1.0);
      const double ref = static_cast<double>(naive_phi(t, v, h));
      EXPECT_NEAR(phi_det(t, v, h), ref, 1e-12 * ref + 1e-31);
    }
  }
}

TEST(PhiDet, HomogeneityOfOrder4H) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double t = U(rng), v = U(rng), h = 0.05 + 0.9 * U(rng);
    const double c = 10.0 * U(rng) + 1e-6;
    const double base = phi_det(t, v, h);
    EXPECT_NEAR(phi_det(c * t, c * v, h), std::pow(c, 4 * h) * base, 1e-10 * std::pow(c, 4 * h) * base + 1e-300);
  }
}

TEST(PhiAngular, ExamplesAndDomain) {
  // cos and sin of pi/4 differ by one ulp, which phi sees as |t - v|^{2H}
  EXPECT_NEAR(phi_angular(std::numbers::pi / 4.0, 0.4), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(phi_angular(0.0, 0.4), 0.0);
  EXPECT_NEAR(phi_angular(std::numbers::pi / 6.0, 0.5), std::sqrt(3.0) / 4.0 - 0.25, 1e-15);
  EXPECT_THROW(phi_angular(-0.01, 0.5), ParameterError);
  EXPECT_THROW(phi_angular(1.0, 0.5), ParameterError);
}

TEST(PhiAngular, PowerLawAtBothEnds) {
  for (double h : {0.25, 0.5, 0.75}) {
    const double th = 1e-5;
    EXPECT_NEAR(phi_angular(th, h) / std::pow(th, 2 * h), 1.0, 0.1) << h;
    EXPECT_NEAR(phi_angular(std::numbers::pi / 4.0 - th, h) / std::pow(th, 2 * h), 1.0, 0.1) << h;
  }
}

TEST(Superadditivity, DeterminantDominatesSingleProcessDeterminants) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (double h : {0.25, 0.5, 0.75}) {
    for (int i = 0; i < 200000; ++i) {
      const double t = U(rng), s = U(rng);
      const double v = t * U(rng), u = s * U(rng);
      const double scale = lambda_var(s, t, h) * lambda_var(u, v, h);
      ASSERT_GE(det_var_z({s, t, u, v}, h) - phi_det(t, v, h) - phi_det(s, u, h), -1e-12 * scale);
    }
  }
}

TEST(Symmetry, SampledTuples) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double s = U(rng), t = U(rng), u = U(rng), v = U(rng), h = 0.05 + 0.9 * U(rng);
    EXPECT_DOUBLE_EQ(cov_rh(s, t, h), cov_rh(t, s, h));
    EXPECT_DOUBLE_EQ(phi_det(t, v, h), phi_det(v, t, h));
    EXPECT_NEAR(mu_cov({s, t, u, v}, h), mu_cov({u, v, s, t}, h), 1e-15);
  }
}

TEST(PairParts, RatioFormMatchesTimeForm) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double o = U(rng) + 1e-3, y = U(rng), p = 0.1 + 1.8 * U(rng);
    for (bool first_outer : {true, false}) {
      const auto r = detail::PairParts::from_ratio(o, y, 1.0 - y, p, first_outer);
      const auto t = first_outer ? detail::PairParts::from_times(o, o * y, p)
                                 : detail::PairParts::from_times(o * y, o, p);
      const double sc = std::pow(o, p);
      EXPECT_NEAR(r.var_first, t.var_first, 1e-13 * sc);
      EXPECT_NEAR(r.var_second, t.var_second, 1e-13 * sc);
      EXPECT_NEAR(r.c, t.c, 1e-12 * sc);
      EXPECT_NEAR(r.k_fs, t.k_fs, 1e-12 * sc);
      EXPECT_NEAR(r.k_sf, t.k_sf, 1e-12 * sc);
    }
  }
}

TEST(LowerIncGamma, Examples) {
  EXPECT_DOUBLE_EQ(lower_inc_gamma(0.7, 0.0), 0.0);
  EXPECT_NEAR(lower_inc_gamma(1.0, 1.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(lower_inc_gamma(2.5, 1e3), std::tgamma(2.5), 1e-14);
  EXPECT_DOUBLE_EQ(lower_inc_gamma(2.5, INFINITY), std::tgamma(2.5));
  // gamma(1/2, x) = sqrt(pi) erf(sqrt(x))
  for (double x : {1e-8, 0.01, 0.3, 1.0, 1.5, 4.0, 30.0})
    EXPECT_NEAR(lower_inc_gamma(0.5, x), std::sqrt(std::numbers::pi) * std::erf(std::sqrt(x)),
                1e-13 * std::sqrt(std::numbers::pi) * std::erf(std::sqrt(x)))
        << x;
  // gamma(2, x) = 1 - (1 + x) e^{-x}
  for (double x : {1e-4, 0.5, 2.9, 3.1, 10.0})
    EXPECT_NEAR(lower_inc_gamma(2.0, x), -std::expm1(-x) - x * std::exp(-x), 1e-13) << x;
  EXPECT_THROW(lower_inc_gamma(0.0, 1.0), ParameterError);
  EXPECT_THROW(lower_inc_gamma(-1.0, 1.0), ParameterError);
  EXPECT_THROW(lower_inc_gamma(1.0, -1.0), ParameterError);
}

TEST(LowerIncGamma, MonotoneAcrossTheBranchSwitch) {
  for (double a : {0.25, 0.5, 1.0, 2.0, 4.0, 9.5}) {
    double prev = 0.0;
    for (double x = 1e-6; x < 1e3; x *= 1.01) {
      const double g = lower_inc_gamma(a, x);
      EXPECT_GE(g, prev * (1 - 1e-14)) << a << ' ' << x;
      prev = g;
    }
    // across x = a + 1 the two branches agree to 1e-12
    const double x0 = a + 1.0;
    EXPECT_NEAR(lower_inc_gamma(a, std::nextafter(x0, 0.0)), lower_inc_gamma(a, x0), 1e-12 * lower_inc_gamma(a, x0));
  }
}

TEST(LowerIncGamma, ScaledFormIsFiniteAtZero) {
  for (double a : {0.25, 1.0, 4.0}) {
    EXPECT_DOUBLE_EQ(lower_inc_gamma_scaled(a, 0.0), 1.0 / a);
    EXPECT_NEAR(lower_inc_gamma_scaled(a, 50.0), lower_inc_gamma(a, 50.0) * std::pow(50.0, -a), 1e-15);
  }
}

TEST(GammaBoundK, ExamplesAndLemmaGrid) {
  EXPECT_DOUBLE_EQ(gamma_bound_k(1.0), 1.0);
  EXPECT_DOUBLE_EQ(gamma_bound_k(2.0), 1.0);
  EXPECT_DOUBLE_EQ(gamma_bound_k(0.5), 2.0);
  EXPECT_THROW(gamma_bound_k(0.0), ParameterError);
  int violations = 0;
  for (double a : {0.25, 0.5, 1.0, 2.0, 4.0})
    for (double f : {0.25, 0.5, 0.75})
      for (int i = 0; i <= 240; ++i) {
        const double x = std::pow(10.0, -6.0 + 0.05 * i);
        if (lower_inc_gamma(a, x) > gamma_bound_k(a) * std::pow(x, f * a)) ++violations;
      }
  EXPECT_EQ(violations, 0);
}
