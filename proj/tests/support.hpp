#pragma once

// Shared oracles for the unit tests and the acceptance runner.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "fbmilt/covkernel.hpp"
#include "fbmilt/fbmgen.hpp"
#include "fbmilt/stats.hpp"

namespace fbmilt::oracle {

struct CovarianceZTest {
  double max_abs_z = 0.0;
  double critical = 0.0;
  int tests = 0;
  int failures = 0;
};

// Entrywise z-tests of E[B_{t_i} B_{t_j}] = R_H(t_i, t_j) over i <= j with a
// Bonferroni correction at family level `level`. Every coordinate of every
// path is an independent draw.
inline CovarianceZTest covariance_ztest(const PathSampler& sampler, int replications, double level,
                                        std::uint64_t seed) {
  const TimeGrid& grid = sampler.grid();
  const ModelConfig& cfg = sampler.config();
  const int n = grid.n_steps();
  const int d = cfg.dim();
  const auto& t = grid.times();
  const std::size_t m = static_cast<std::size_t>(n) * (n + 1) / 2;
  std::vector<double> sum(m, 0.0), sum2(m, 0.0);
  Eigen::MatrixXd x;
  CirculantWorkspace ws;
  for (int r = 0; r < replications; ++r) {
    sampler.fill({seed, static_cast<std::uint32_t>(r), 0, 0}, x, ws);
    for (int k = 0; k < d; ++k) {
      std::size_t idx = 0;
      for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j, ++idx) {
          const double prod = x(i, k) * x(j, k);
          sum[idx] += prod;
          sum2[idx] += prod * prod;
        }
    }
  }
  CovarianceZTest out;
  out.tests = static_cast<int>(m);
  out.critical = stats::normal_critical(level / static_cast<double>(m));
  const double N = static_cast<double>(replications) * d;
  std::size_t idx = 0;
  for (int i = 1; i <= n; ++i)
    for (int j = i; j <= n; ++j, ++idx) {
      const double mean = sum[idx] / N;
      const double var = (sum2[idx] / N - mean * mean) * N / (N - 1.0);
      const double z = (mean - cov_rh(t[i], t[j], cfg.hurst())) / std::sqrt(var / N);
      out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
      if (std::abs(z) > out.critical) ++out.failures;
    }
  return out;
}

// Sample of a scalar path functional (value at the horizon plus the path
// mean of the first coordinate) for the two-sample comparison of samplers.
inline std::vector<double> path_functional_sample(const PathSampler& sampler, int replications, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(replications));
  Eigen::MatrixXd x;
  CirculantWorkspace ws;
  for (int r = 0; r < replications; ++r) {
    sampler.fill({seed, static_cast<std::uint32_t>(r), 0, 0}, x, ws);
    out.push_back(x(x.rows() - 1, 0) + x.col(0).mean());
  }
  return out;
}

}  // namespace fbmilt::oracle
