#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fbmilt/phasescan.hpp"

using namespace fbmilt;

namespace {

SweepOptions m1_only() {
  SweepOptions o;
  o.with_m2 = false;
  return o;
}

}  // namespace

TEST(EpsSchedule, LadderAndValidation) {
  const EpsSchedule s(0.8, 0.5, 4);
  const auto l = s.ladder();
  ASSERT_EQ(l.size(), 4u);
  EXPECT_DOUBLE_EQ(l[0], 0.8);
  EXPECT_DOUBLE_EQ(l[3], 0.1);
  EXPECT_EQ(s.extended().count(), 5);
  EXPECT_DOUBLE_EQ(EpsSchedule::defaults(ModelConfig(0.25, 2, 16.0)).eps0(), 4.0);
  EXPECT_EQ(EpsSchedule::defaults(ModelConfig(0.5, 2)).count(), 12);
  EXPECT_THROW(EpsSchedule(0.0, 0.5, 4), ParameterError);
  EXPECT_THROW(EpsSchedule(1.0, 1.0, 4), ParameterError);
  EXPECT_THROW(EpsSchedule(1.0, 0.5, 2), ParameterError);
}

TEST(Sweep, BrownianPlaneColumnIsBoundedByTheLimit) {
  const ModelConfig cfg(0.5, 2);
  const auto s = sweep(cfg, EpsSchedule(1.0, 0.5, 12), m1_only());
  const double limit = std::numbers::ln2 / std::numbers::pi;
  double prev = 0.0;
  for (const auto& r : s.rows) {
    ASSERT_TRUE(r.complete());
    EXPECT_GT(r.m1->value, prev);
    EXPECT_LT(r.m1->value, limit);
    prev = r.m1->value;
  }
  EXPECT_NEAR(prev, limit, 2e-3);
}

TEST(Sweep, DivergentIncrementsGrowByFactorToTheRate) {
  // m1(eps_{k+1}) - m1(eps_k) ~ eps^{1/H - d/2}: ratio 2^{1/6} per halving at (0.75, 3)
  const ModelConfig cfg(0.75, 3);
  const auto s = sweep(cfg, EpsSchedule(std::ldexp(1.0, -6), 0.5, 7), m1_only());
  const auto& r = s.rows;
  const double inc_a = r[5].m1->value - r[4].m1->value, inc_b = r[6].m1->value - r[5].m1->value;
  EXPECT_NEAR(inc_b / inc_a, std::pow(2.0, 1.0 / 6.0), 0.01);
}

TEST(Sweep, RowsCarryNonNegativeGapsAndVariances) {
  const ModelConfig cfg(0.4, 2);
  const auto s = sweep(cfg, EpsSchedule(1.0, 0.5, 4));
  ASSERT_EQ(s.rows.size(), 4u);
  EXPECT_FALSE(s.rows[0].cauchy_gap.has_value());
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    const auto& r = s.rows[k];
    ASSERT_TRUE(r.complete());
    EXPECT_GE(*r.variance, -r.m2->error_estimate);
    if (k > 0) {
      EXPECT_GE(r.cauchy_gap->value, 0.0);
      EXPECT_LT(r.eps, s.rows[k - 1].eps);
    }
  }
}

TEST(Sweep, OptionalMonteCarloColumn) {
  SweepOptions o = m1_only();
  o.with_mc = true;
  o.mc.replications = 500;
  o.mc.seed = 3;
  const auto s = sweep(ModelConfig(0.5, 2), EpsSchedule(1.0, 0.5, 3), o);
  for (const auto& r : s.rows) {
    ASSERT_TRUE(r.mc.has_value());
    EXPECT_EQ(r.mc->replications, 500);
    EXPECT_NEAR(r.mc->mean, r.m1->value, 4.0 * r.mc->se_mean);
  }
  EXPECT_EQ(s.rows[1].mc->grid_steps, 32);
}

TEST(Classify, ExamplesFromTheThreeRegimes) {
  {
    const ModelConfig cfg(0.5, 2);
    const auto p = classify(sweep(cfg, EpsSchedule::defaults(cfg)));
    EXPECT_EQ(p.verdict, Verdict::Convergent);
    EXPECT_TRUE(p.series.has_value());
  }
  {
    const ModelConfig cfg(0.75, 3);
    const auto p = classify(sweep(cfg, EpsSchedule::defaults(cfg)));
    ASSERT_EQ(p.verdict, Verdict::Divergent);
    ASSERT_TRUE(p.fitted_rate.has_value());
    EXPECT_NEAR(*p.fitted_rate, -1.0 / 6.0, 0.1 / 6.0);
    EXPECT_FALSE(p.evidence.rule.empty());
  }
  {
    const ModelConfig cfg(0.5, 4);
    const auto p = classify(sweep(cfg, EpsSchedule::defaults(cfg)));
    EXPECT_EQ(p.verdict, Verdict::Critical);
    ASSERT_TRUE(p.fitted_rate.has_value());
    EXPECT_GT(*p.fitted_rate, 0.0);
  }
}

TEST(Classify, CriticalOnlyAtExactBoundary) {
  // Hd = 2 - 1e-6 is not the special case; it must not come out Critical
  const ModelConfig cfg(0.5 - 2.5e-7, 4);
  try {
    const auto p = classify(sweep(cfg, EpsSchedule::defaults(cfg)));
    EXPECT_NE(p.verdict, Verdict::Critical);
  } catch (const IndeterminateError&) {
    SUCCEED();
  }
}

TEST(Classify, TooFewRowsAndIndeterminate) {
  const ModelConfig cfg(0.5, 2);
  SweepSeries short_series{cfg, EpsSchedule(1.0, 0.5, 3), {}};
  short_series.rows.push_back(sweep_row(cfg, 1.0, std::nullopt, m1_only()));
  EXPECT_THROW(classify(short_series, m1_only()), ParameterError);

  // a flat m1 column supports no verdict, and the real extra rung does not fix it
  SweepSeries flat{cfg, EpsSchedule(1.0, 0.5, 4), {}};
  for (double e : flat.schedule.ladder()) {
    SweepRow r;
    r.eps = e;
    r.m1 = QuadratureResult{1.0, 0.0, 1, 1, false, std::nullopt};
    flat.rows.push_back(r);
  }
  try {
    classify(flat, m1_only());
    FAIL();
  } catch (const IndeterminateError& e) {
    EXPECT_EQ(e.series().rows.size(), 5u);
    EXPECT_TRUE(e.evidence().extended);
  }
}

TEST(PhaseGrid, SingletonMatchesClassifyAndOrderIsLexicographic) {
  PhaseGridOptions o;
  o.count = 6;
  o.sweep = m1_only();
  const std::vector<double> hs{0.25};
  const std::vector<int> ds{3};
  const auto grid = phase_grid(hs, ds, o);
  ASSERT_EQ(grid.size(), 1u);
  const ModelConfig cfg(0.25, 3);
  const auto direct = classify(sweep(cfg, EpsSchedule(1.0, 0.5, 6), o.sweep), o.sweep);
  EXPECT_EQ(grid[0].verdict, direct.verdict);
  EXPECT_EQ(grid[0].fitted_rate, direct.fitted_rate);

  const std::vector<double> hs2{0.25, 0.75};
  const std::vector<int> ds2{4, 2};
  const auto g2 = phase_grid(hs2, ds2, o);
  ASSERT_EQ(g2.size(), 4u);
  EXPECT_EQ(g2[0].hurst, 0.25);
  EXPECT_EQ(g2[0].dim, 4);
  EXPECT_EQ(g2[1].dim, 2);
  EXPECT_EQ(g2[3].hurst, 0.75);
  EXPECT_EQ(g2[2].verdict, Verdict::Divergent);
  const std::vector<double> bad{1.5};
  const auto g3 = phase_grid(bad, ds, o);
  ASSERT_TRUE(g3[0].error.has_value());
  EXPECT_FALSE(g3[0].verdict.has_value());
  EXPECT_THROW(phase_grid(std::vector<double>{}, ds, o), ParameterError);
}

TEST(PhaseGrid, IdenticalAcrossWorkerCounts) {
  PhaseGridOptions o;
  o.count = 5;
  const std::vector<double> hs{0.25, 0.6};
  const std::vector<int> ds{2};
  o.sweep.workers = 1;
  const auto a = phase_grid(hs, ds, o);
  o.sweep.workers = 3;
  const auto b = phase_grid(hs, ds, o);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].verdict, b[i].verdict);
    EXPECT_EQ(a[i].fitted_rate, b[i].fitted_rate);
    ASSERT_TRUE(a[i].series && b[i].series);
    for (std::size_t k = 0; k < a[i].series->rows.size(); ++k) {
      EXPECT_EQ(a[i].series->rows[k].m1->value, b[i].series->rows[k].m1->value);
      EXPECT_EQ(a[i].series->rows[k].m2->value, b[i].series->rows[k].m2->value);
    }
  }
}
