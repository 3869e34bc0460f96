#pragma once

// Exact sampling of d-dimensional fractional Brownian motion on a time grid.
//
// Two samplers realize the same Gaussian law: a dense Cholesky factor of the
// covariance R_H on the grid (any grid, the correctness reference) and a
// circulant embedding of fractional Gaussian noise (uniform grids, O(n log n)).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fbmilt/covkernel.hpp"
#include "fbmilt/errors.hpp"
#include "fbmilt/rng.hpp"

namespace fbmilt {

inline constexpr int kMaxCholeskySteps = 4096;

/// Discretization 0 = t_0 < t_1 < ... < t_n = horizon.
class TimeGrid {
 public:
  static TimeGrid uniform(double horizon, int n_steps) {
    if (n_steps < 1) throw ParameterError("grid-n", "grid needs at least one step");
    if (!(horizon > 0.0)) throw ParameterError("horizon", "horizon must be positive");
    std::vector<double> t(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i) t[i] = horizon * i / n_steps;
    t.back() = horizon;
    return TimeGrid(std::move(t), true);
  }

  explicit TimeGrid(std::vector<double> times) : TimeGrid(std::move(times), false) {}

  double horizon() const noexcept { return times_.back(); }
  int n_steps() const noexcept { return static_cast<int>(times_.size()) - 1; }
  const std::vector<double>& times() const noexcept { return times_; }
  bool is_uniform() const noexcept { return uniform_; }

  /// Trapezoid weights for int_0^T f(t) dt on this grid.
  std::vector<double> trapezoid_weights() const {
    const int n = n_steps();
    std::vector<double> w(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
      const double h = times_[i + 1] - times_[i];
      w[i] += 0.5 * h;
      w[i + 1] += 0.5 * h;
    }
    return w;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  TimeGrid(std::vector<double> times, bool flagged_uniform) : times_(std::move(times)), uniform_(flagged_uniform) {
    if (times_.size() < 2) throw ParameterError("grid", "grid needs at least two times");
    if (times_.front() != 0.0) throw ParameterError("grid", "grid must start at time 0");
    for (std::size_t i = 1; i < times_.size(); ++i)
      if (!(times_[i] > times_[i - 1])) throw ParameterError("grid", "grid times must be strictly increasing");
    if (!uniform_) {
      const double h = horizon() / n_steps();
      uniform_ = true;
      for (std::size_t i = 0; i < times_.size(); ++i)
        if (std::abs(times_[i] - h * static_cast<double>(i)) > 1e-12 * horizon()) uniform_ = false;
    }
  }

  std::vector<double> times_;
  bool uniform_ = false;
};

/// One d-dimensional sample path; row i holds B at grid time i.
struct FbmPath {
  TimeGrid grid;
  int dim = 0;
  Eigen::MatrixXd values;
};

/// Two independent paths (B, B~) on a shared grid.
struct FbmPathPair {
  FbmPath first;
  FbmPath second;
  std::uint64_t seed = 0;
};

enum class SamplerMethod { cholesky, circulant };

inline const char* to_string(SamplerMethod m) { return m == SamplerMethod::cholesky ? "cholesky" : "circulant"; }

inline SamplerMethod sampler_method_from_string(const std::string& s) {
  if (s == "cholesky") return SamplerMethod::cholesky;
  if (s == "circulant") return SamplerMethod::circulant;
  throw ParameterError("method", "unknown sampler '" + s + "' (expected cholesky|circulant)");
}

/// Dense lower Cholesky factor of Cov(B_{t_1}, ..., B_{t_n}).
class CholeskySampler {
 public:
  CholeskySampler(const TimeGrid& grid, const ModelConfig& cfg) : grid_(grid), cfg_(cfg) {
    const int n = grid.n_steps();
    if (n > kMaxCholeskySteps)
      throw ParameterError("grid-n", "Cholesky sampler supports at most " + std::to_string(kMaxCholeskySteps) + " steps");
    const auto& t = grid.times();
    Eigen::MatrixXd cov(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) cov(i, j) = cov(j, i) = cov_rh(t[i + 1], t[j + 1], cfg.hurst());
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw FactorizationError("covariance factorization failed; grid has (near-)duplicate times");
    factor_ = llt.matrixL();
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  const ModelConfig& config() const noexcept { return cfg_; }

  /// Fills out ((n+1) x d) from the streams (address.lane = coordinate).
  void fill(StreamAddress address, Eigen::MatrixXd& out) const {
    const int n = grid_.n_steps();
    const int d = cfg_.dim();
    out.resize(n + 1, d);
    Eigen::VectorXd z(n);
    for (int k = 0; k < d; ++k) {
      address.lane = static_cast<std::uint16_t>(k);
      PhiloxStream stream(address);
      for (int i = 0; i < n; ++i) z[i] = stream.next_normal();
      out(0, k) = 0.0;
      out.col(k).tail(n).noalias() = factor_.triangularView<Eigen::Lower>() * z;
    }
  }

 private:
  TimeGrid grid_;
  ModelConfig cfg_;
  Eigen::MatrixXd factor_;
};

/// Scratch buffers for one worker using a CirculantSampler.
struct CirculantWorkspace {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in;
  std::vector<std::complex<double>> out;
};

/// Circulant embedding of the fractional Gaussian noise autocovariance
/// c(k) = (|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2.
class CirculantSampler {
 public:
  CirculantSampler(const TimeGrid& grid, const ModelConfig& cfg) : grid_(grid), cfg_(cfg) {
    if (!grid.is_uniform()) throw ParameterError("grid", "circulant sampler needs a uniform grid");
    const int n = grid.n_steps();
    half_ = 1;
    while (half_ < n) half_ <<= 1;
    const int size = 2 * half_;
    const double p = 2.0 * cfg.hurst();
    auto acov = [p](double k) {
      return 0.5 * (std::pow(k + 1.0, p) + std::pow(std::abs(k - 1.0), p) - 2.0 * std::pow(k, p));
    };
    std::vector<std::complex<double>> row(size);
    for (int k = 0; k <= half_; ++k) row[k] = acov(k);
    for (int k = 1; k < half_; ++k) row[size - k] = row[k];
    std::vector<std::complex<double>> eig(size);
    Eigen::FFT<double> fft;
    fft.fwd(eig, row);
    double max_eig = 0.0;
    min_eigenvalue_ = eig[0].real();
    for (const auto& e : eig) {
      max_eig = std::max(max_eig, e.real());
      min_eigenvalue_ = std::min(min_eigenvalue_, e.real());
    }
    embedding_ok_ = min_eigenvalue_ >= -1e-10 * max_eig;
    scale_.resize(size);
    for (int k = 0; k < size; ++k) scale_[k] = std::sqrt(std::max(eig[k].real(), 0.0) / size);
    step_scale_ = std::pow(grid.horizon() / n, cfg.hurst());
  }

  bool embedding_ok() const noexcept { return embedding_ok_; }
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }
  const TimeGrid& grid() const noexcept { return grid_; }

  /// Fills out ((n+1) x d). One FFT yields two independent coordinates
  /// (real and imaginary parts); address.lane = coordinate pair index.
  void fill(StreamAddress address, Eigen::MatrixXd& out, CirculantWorkspace& ws) const {
    const int n = grid_.n_steps();
    const int d = cfg_.dim();
    const int size = 2 * half_;
    out.resize(n + 1, d);
    ws.in.resize(size);
    for (int pair = 0; 2 * pair < d; ++pair) {
      address.lane = static_cast<std::uint16_t>(pair);
      PhiloxStream stream(address);
      for (int k = 0; k < size; ++k) {
        const double re = stream.next_normal();
        const double im = stream.next_normal();
        ws.in[k] = {scale_[k] * re, scale_[k] * im};
      }
      ws.fft.fwd(ws.out, ws.in);
      const int k0 = 2 * pair;
      const bool has_second = k0 + 1 < d;
      out(0, k0) = 0.0;
      if (has_second) out(0, k0 + 1) = 0.0;
      double acc0 = 0.0, acc1 = 0.0;
      for (int i = 0; i < n; ++i) {
        acc0 += ws.out[i].real();
        out(i + 1, k0) = step_scale_ * acc0;
        if (has_second) {
          acc1 += ws.out[i].imag();
          out(i + 1, k0 + 1) = step_scale_ * acc1;
        }
      }
    }
  }

 private:
  TimeGrid grid_;
  ModelConfig cfg_;
  int half_ = 1;
  std::vector<double> scale_;
  double step_scale_ = 1.0;
  double min_eigenvalue_ = 0.0;
  bool embedding_ok_ = true;
};

/// Sampler chosen by method, with the Cholesky fallback when the circulant
/// embedding is not nonnegative.
class PathSampler {
 public:
  PathSampler(const TimeGrid& grid, const ModelConfig& cfg, SamplerMethod method)
      : grid_(grid), cfg_(cfg), requested_(method) {
    if (method == SamplerMethod::circulant) {
      circulant_.emplace(grid, cfg);
      if (!circulant_->embedding_ok()) {
        warnings_.push_back("circulant embedding has a negative eigenvalue (" +
                            std::to_string(circulant_->min_eigenvalue()) + "); falling back to cholesky");
        circulant_.reset();
      }
    }
    if (!circulant_) cholesky_.emplace(grid, cfg);
  }

  SamplerMethod requested() const noexcept { return requested_; }
  SamplerMethod effective() const noexcept { return circulant_ ? SamplerMethod::circulant : SamplerMethod::cholesky; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  const ModelConfig& config() const noexcept { return cfg_; }

  void fill(const StreamAddress& address, Eigen::MatrixXd& out, CirculantWorkspace& ws) const {
    if (circulant_)
      circulant_->fill(address, out, ws);
    else
      cholesky_->fill(address, out);
  }

  FbmPath sample(const StreamAddress& address) const {
    FbmPath path{grid_, cfg_.dim(), {}};
    CirculantWorkspace ws;
    fill(address, path.values, ws);
    return path;
  }

  /// Independent pair for one replication: paths 0 and 1 of (seed, replication).
  FbmPathPair sample_pair(std::uint64_t seed, std::uint32_t replication = 0) const {
    return {sample({seed, replication, 0, 0}), sample({seed, replication, 1, 0}), seed};
  }

 private:
  TimeGrid grid_;
  ModelConfig cfg_;
  SamplerMethod requested_;
  std::optional<CholeskySampler> cholesky_;
  std::optional<CirculantSampler> circulant_;
  std::vector<std::string> warnings_;
};

/// Exact sample from the covariance delta_ij R_H on any grid.
inline FbmPath sample_cholesky(const TimeGrid& grid, const ModelConfig& cfg, const StreamAddress& stream) {
  return PathSampler(grid, cfg, SamplerMethod::cholesky).sample(stream);
}

/// Same law as sample_cholesky on a uniform grid. Falls back to Cholesky when
/// the embedding fails; the reason is appended to *warnings when given.
inline FbmPath sample_circulant(const TimeGrid& grid, const ModelConfig& cfg, const StreamAddress& stream,
                                std::vector<std::string>* warnings = nullptr) {
  PathSampler sampler(grid, cfg, SamplerMethod::circulant);
  if (warnings) warnings->insert(warnings->end(), sampler.warnings().begin(), sampler.warnings().end());
  return sampler.sample(stream);
}

/// Deterministic in (seed, method, grid, cfg); the two paths use disjoint streams.
inline FbmPathPair sample_pair(const TimeGrid& grid, const ModelConfig& cfg, std::uint64_t seed,
                               SamplerMethod method) {
  return PathSampler(grid, cfg, method).sample_pair(seed);
}

/// Debug dump: header `time,x1,...,xd`, one row per grid time.
inline void write_path_csv(const FbmPath& path, const std::string& file) {
  std::ofstream os(file);
  if (!os) throw ParameterError("out", "cannot open '" + file + "' for writing");
  os.precision(17);
  os << "time";
  for (int k = 0; k < path.dim; ++k) os << ",x" << (k + 1);
  os << '\n';
  const auto& t = path.grid.times();
  for (int i = 0; i <= path.grid.n_steps(); ++i) {
    os << t[i];
    for (int k = 0; k < path.dim; ++k) os << ',' << path.values(i, k);
    os << '\n';
  }
}

}  // namespace fbmilt
