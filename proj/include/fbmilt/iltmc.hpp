#pragma once

// Heat kernel, the discretized smoothed intersection local time of a path
// pair and Monte Carlo estimates of its first two moments.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fbmilt/covkernel.hpp"
#include "fbmilt/errors.hpp"
#include "fbmilt/fbmgen.hpp"
#include "fbmilt/parallel.hpp"

namespace fbmilt {

/// Mollifier bandwidth eps (squared process units); always > 0.
class SmoothingEps {
 public:
  explicit SmoothingEps(double eps) : eps_(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterError("eps", "smoothing eps must be finite and > 0");
  }
  double value() const noexcept { return eps_; }

 private:
  double eps_;
};

/// p_eps(x) = (2 pi eps)^{-d/2} exp(-|x|^2 / (2 eps)).
inline double heat_kernel(std::span<const double> x, SmoothingEps eps, int d) {
  if (d < 1 || static_cast<std::size_t>(d) != x.size())
    throw ParameterError("dim", "vector length does not match the dimension");
  double r2 = 0.0;
  for (double c : x) r2 += c * c;
  const double e = eps.value();
  return std::pow(2.0 * std::numbers::pi * e, -0.5 * d) * std::exp(-r2 / (2.0 * e));
}

namespace detail {

inline void check_pair(const FbmPath& a, const FbmPath& b) {
  if (!(a.grid == b.grid)) throw ParameterError("grid", "the two paths live on different time grids");
  if (a.dim != b.dim || a.values.cols() != a.dim || b.values.cols() != b.dim)
    throw ParameterError("dim", "the two paths have different dimensions");
  if (a.values.rows() != a.grid.n_steps() + 1 || b.values.rows() != b.grid.n_steps() + 1)
    throw ParameterError("grid", "path values do not match the grid size");
}

// Reusable buffers for the O(n^2 d) kernel sum.
struct IltWorkspace {
  std::vector<double> r2;
  std::vector<double> row;
  std::vector<double> outer;
};

// sum_ij w_i w_j exp(-|x_i - y_j|^2 / 2 eps), without the normalization.
inline double ilt_kernel_sum(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::span<const double> w,
                             double eps, IltWorkspace& ws) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto m = static_cast<std::size_t>(y.rows());
  const int d = static_cast<int>(x.cols());
  const double scale = -0.5 / eps;
  ws.r2.resize(m);
  ws.row.resize(m);
  ws.outer.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(ws.r2.begin(), ws.r2.end(), 0.0);
    for (int k = 0; k < d; ++k) {
      const double xi = x(static_cast<Eigen::Index>(i), k);
      const double* col = y.col(k).data();
      double* r2 = ws.r2.data();
      for (std::size_t j = 0; j < m; ++j) {
        const double dlt = xi - col[j];
        r2[j] += dlt * dlt;
      }
    }
    const double* r2 = ws.r2.data();
    double* row = ws.row.data();
    for (std::size_t j = 0; j < m; ++j) row[j] = w[j] * std::exp(scale * r2[j]);
    ws.outer[i] = w[i] * pairwise_sum(ws.row);
  }
  return pairwise_sum(ws.outer);
}

}  // namespace detail

/// Tensor trapezoid approximation of int_0^T int_0^T p_eps(B_t - B~_s) ds dt.
inline double ilt_epsilon(const FbmPathPair& pair, SmoothingEps eps) {
  detail::check_pair(pair.first, pair.second);
  const auto w = pair.first.grid.trapezoid_weights();
  detail::IltWorkspace ws;
  const double e = eps.value();
  return std::pow(2.0 * std::numbers::pi * e, -0.5 * pair.first.dim) *
         detail::ilt_kernel_sum(pair.first.values, pair.second.values, w, e, ws);
}

struct GridChoice {
  int n_steps = 0;
  bool capped = false;
  std::string warning;
};

/// Smallest n with (T/n)^H <= sqrt(eps)/4, i.e. n >= T (16/eps)^{1/(2H)},
/// capped at kMaxCholeskySteps.
inline GridChoice grid_steps_for_bias_rule(const ModelConfig& cfg, SmoothingEps eps) {
  const double n = std::ceil(cfg.horizon() * std::pow(16.0 / eps.value(), 1.0 / (2.0 * cfg.hurst())) - 1e-9);
  GridChoice g;
  if (!(n <= kMaxCholeskySteps)) {
    g.n_steps = kMaxCholeskySteps;
    g.capped = true;
    g.warning = "bias rule asks for " + std::to_string(n) + " steps; capped at " + std::to_string(kMaxCholeskySteps) +
                ", the discretization bias may exceed the statistical error";
  } else {
    g.n_steps = std::max(1, static_cast<int>(n));
  }
  return g;
}

struct MomentEstimate {
  double mean = 0.0;
  double second_moment = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double se_second = 0.0;
  std::int64_t replications = 0;
  std::uint64_t seed = 0;
  int grid_steps = 0;
  SamplerMethod method = SamplerMethod::cholesky;
  std::vector<std::string> warnings;
};

/// Replication r uses the pair of streams (seed, r, path 0|1); the values are
/// reduced in replication order, so the result does not depend on workers.
inline MomentEstimate mc_moments(const ModelConfig& cfg, SmoothingEps eps, const TimeGrid& grid,
                                 std::int64_t replications, std::uint64_t seed, SamplerMethod method,
                                 unsigned workers = 0) {
  if (replications < 2) throw ParameterError("reps", "at least 2 replications are needed");
  if (replications > static_cast<std::int64_t>(UINT32_MAX)) throw ParameterError("reps", "too many replications");
  if (std::abs(grid.horizon() - cfg.horizon()) > 1e-12 * cfg.horizon())
    throw ParameterError("horizon", "grid horizon differs from the model horizon");
  const PathSampler sampler(grid, cfg, method);
  const auto w = grid.trapezoid_weights();
  const double e = eps.value();
  const double norm = std::pow(2.0 * std::numbers::pi * e, -0.5 * cfg.dim());
  const auto R = static_cast<std::size_t>(replications);
  const unsigned nw = std::min<std::size_t>(resolve_workers(workers), R);

  struct WorkerState {
    Eigen::MatrixXd x, y;
    CirculantWorkspace cws;
    detail::IltWorkspace iws;
  };
  std::vector<WorkerState> states(nw);
  std::vector<double> values(R);
  parallel_for(R, nw, [&](std::size_t r, unsigned wk) {
    WorkerState& st = states[wk];
    const auto rep = static_cast<std::uint32_t>(r);
    sampler.fill({seed, rep, 0, 0}, st.x, st.cws);
    sampler.fill({seed, rep, 1, 0}, st.y, st.cws);
    values[r] = norm * detail::ilt_kernel_sum(st.x, st.y, w, e, st.iws);
  });

  std::vector<double> sq(R);
  for (std::size_t r = 0; r < R; ++r) sq[r] = values[r] * values[r];
  const double Rd = static_cast<double>(R);
  MomentEstimate m;
  m.mean = pairwise_sum(values) / Rd;
  m.second_moment = pairwise_sum(sq) / Rd;
  m.variance = m.second_moment - m.mean * m.mean;
  // centered sums for the standard errors
  std::vector<double> dev(R);
  for (std::size_t r = 0; r < R; ++r) dev[r] = (values[r] - m.mean) * (values[r] - m.mean);
  const double var1 = pairwise_sum(dev) / (Rd - 1.0);
  for (std::size_t r = 0; r < R; ++r) dev[r] = (sq[r] - m.second_moment) * (sq[r] - m.second_moment);
  const double var2 = pairwise_sum(dev) / (Rd - 1.0);
  m.se_mean = std::sqrt(var1 / Rd);
  m.se_second = std::sqrt(var2 / Rd);
  m.replications = replications;
  m.seed = seed;
  m.grid_steps = grid.n_steps();
  m.method = sampler.effective();
  m.warnings = sampler.warnings();
  return m;
}

}  // namespace fbmilt
