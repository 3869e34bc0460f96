#pragma once

// Globally adaptive cubature.
//
// adaptive_cubature<N> integrates over a list of boxes with the degree-7
// Genz-Malik rule and its embedded degree-5 rule as error estimator. The cell
// with the largest error is bisected along the axis with the largest fourth
// difference. Cells are refined in fixed-size batches so that the sequence of
// subdivisions, and therefore the result, does not depend on the number of
// workers evaluating a batch.
//
// adaptive_gk<F> is the one-dimensional analogue with the 21-point
// Gauss-Kronrod pair.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <tuple>
#include <utility>
#include <span>
#include <vector>

#include "fbmilt/parallel.hpp"

namespace fbmilt {

struct CubatureOptions {
  double abs_tol = 1e-6;
  double rel_tol = 0.0;
  std::size_t max_evals = 10'000'000;
  unsigned workers = 1;
  std::size_t batch = 32;
};

struct CubatureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  std::size_t regions = 0;
  bool converged = false;
};

template <std::size_t N>
struct Box {
  std::array<double, N> lo{};
  std::array<double, N> hi{};
  int tag = 0;
};

namespace detail {

template <std::size_t N>
struct Cell {
  std::array<double, N> center{};
  std::array<double, N> half{};
  int tag = 0;
  double value = 0.0;
  double error = 0.0;
  int split = 0;
};

template <std::size_t N>
constexpr std::size_t genz_malik_points() {
  return 1 + 4 * N + 2 * N * (N - 1) + (std::size_t{1} << N);
}

// Degree-7 Genz-Malik rule with embedded degree-5 rule on one cell.
template <std::size_t N, class F>
void genz_malik(F& f, Cell<N>& c) {
  static_assert(N >= 2, "Genz-Malik rule needs dimension >= 2");
  constexpr double l2 = 0.35856858280031809199064515390793749545406372969943;  // sqrt(9/70)
  constexpr double l4 = 0.94868329805051379959966806332981556011586654179756;  // sqrt(9/10)
  constexpr double l5 = 0.68824720161168529772162873429362352512689535661565;  // sqrt(9/19)
  constexpr double n = static_cast<double>(N);
  constexpr double w1 = (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0;
  constexpr double w2 = 980.0 / 6561.0;
  constexpr double w3 = (1820.0 - 400.0 * n) / 19683.0;
  constexpr double w4 = 200.0 / 19683.0;
  constexpr double w5 = 6859.0 / 19683.0 / static_cast<double>(std::size_t{1} << N);
  constexpr double e1 = (729.0 - 950.0 * n + 50.0 * n * n) / 729.0;
  constexpr double e2 = 245.0 / 486.0;
  constexpr double e3 = (265.0 - 100.0 * n) / 1458.0;
  constexpr double e4 = 25.0 / 729.0;
  constexpr double ratio = (l2 * l2) / (l4 * l4);

  double vol = 1.0;
  for (std::size_t i = 0; i < N; ++i) vol *= 2.0 * c.half[i];

  std::array<double, N> x = c.center;
  const double f0 = f(c.tag, x);
  double sum2 = 0, sum3 = 0, sum4 = 0, sum5 = 0;
  std::array<double, N> diff{};
  for (std::size_t i = 0; i < N; ++i) {
    x[i] = c.center[i] - l2 * c.half[i];
    const double a = f(c.tag, x);
    x[i] = c.center[i] + l2 * c.half[i];
    const double b = f(c.tag, x);
    x[i] = c.center[i] - l4 * c.half[i];
    const double cc = f(c.tag, x);
    x[i] = c.center[i] + l4 * c.half[i];
    const double d = f(c.tag, x);
    x[i] = c.center[i];
    sum2 += a + b;
    sum3 += cc + d;
    diff[i] = std::abs(a + b - 2.0 * f0 - ratio * (cc + d - 2.0 * f0));
  }
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i + 1; j < N; ++j) {
      for (int si = -1; si <= 1; si += 2) {
        for (int sj = -1; sj <= 1; sj += 2) {
          x[i] = c.center[i] + si * l4 * c.half[i];
          x[j] = c.center[j] + sj * l4 * c.half[j];
          sum4 += f(c.tag, x);
        }
      }
      x[i] = c.center[i];
      x[j] = c.center[j];
    }
  }
  for (std::size_t corner = 0; corner < (std::size_t{1} << N); ++corner) {
    for (std::size_t i = 0; i < N; ++i) x[i] = c.center[i] + ((corner >> i) & 1 ? l5 : -l5) * c.half[i];
    sum5 += f(c.tag, x);
  }
  const double r7 = vol * (w1 * f0 + w2 * sum2 + w3 * sum3 + w4 * sum4 + w5 * sum5);
  const double r5 = vol * (e1 * f0 + e2 * sum2 + e3 * sum3 + e4 * sum4);
  c.value = r7;
  c.error = std::abs(r7 - r5);
  if (!std::isfinite(c.value) || !std::isfinite(c.error)) {
    c.value = std::isfinite(c.value) ? c.value : 0.0;
    c.error = std::numeric_limits<double>::max() / 1e10;
  }
  // split the widest axis among those whose fourth difference is (nearly) maximal
  double best = -1.0;
  int split = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (diff[i] > best * (1.0 + 1e-12) ||
        (diff[i] >= best * (1.0 - 1e-12) && c.half[i] > c.half[static_cast<std::size_t>(split)])) {
      best = std::max(best, diff[i]);
      split = static_cast<int>(i);
    }
  }
  c.split = split;
}

template <std::size_t N>
struct ByError {
  bool operator()(const Cell<N>& a, const Cell<N>& b) const { return a.error < b.error; }
};

inline bool within_tolerance(double err, double value, double abs_tol, double rel_tol) {
  return err <= std::max(abs_tol, rel_tol * std::abs(value));
}

}  // namespace detail

/// Integrates f(tag, x) over the union of boxes; a box's tag is passed back to
/// the integrand for every point inside it.
template <std::size_t N, class F>
CubatureResult adaptive_cubature(F&& f, std::span<const Box<N>> boxes, const CubatureOptions& opt) {
  using Cell = detail::Cell<N>;
  constexpr std::size_t pts = detail::genz_malik_points<N>();
  std::vector<Cell> initial(boxes.size());
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    for (std::size_t i = 0; i < N; ++i) {
      initial[b].center[i] = 0.5 * (boxes[b].lo[i] + boxes[b].hi[i]);
      initial[b].half[i] = 0.5 * (boxes[b].hi[i] - boxes[b].lo[i]);
    }
    initial[b].tag = boxes[b].tag;
  }
  parallel_for(initial.size(), opt.workers, [&](std::size_t i, unsigned) { detail::genz_malik<N>(f, initial[i]); });

  std::vector<Cell> heap = std::move(initial);
  const detail::ByError<N> less{};
  std::make_heap(heap.begin(), heap.end(), less);
  CubatureResult res;
  res.evaluations = boxes.size() * pts;

  std::vector<double> scratch;
  auto totals = [&]() {
    scratch.resize(heap.size());
    for (std::size_t i = 0; i < heap.size(); ++i) scratch[i] = heap[i].value;
    const double v = pairwise_sum(scratch);
    for (std::size_t i = 0; i < heap.size(); ++i) scratch[i] = heap[i].error;
    return std::pair{v, pairwise_sum(scratch)};
  };

  double value = 0.0, error = 0.0;
  std::tie(value, error) = totals();
  std::vector<Cell> batch;
  std::vector<Cell> children;
  std::size_t iter = 0;
  while (!detail::within_tolerance(error, value, opt.abs_tol, opt.rel_tol)) {
    if (res.evaluations >= opt.max_evals || heap.empty()) break;
    batch.clear();
    const std::size_t take = std::max<std::size_t>(1, std::min(opt.batch, heap.size()));
    for (std::size_t i = 0; i < take; ++i) {
      std::pop_heap(heap.begin(), heap.end(), less);
      batch.push_back(heap.back());
      heap.pop_back();
    }
    children.resize(2 * batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Cell& p = batch[i];
      const auto s = static_cast<std::size_t>(p.split);
      for (int side = 0; side < 2; ++side) {
        Cell c = p;
        c.half[s] = 0.5 * p.half[s];
        c.center[s] = p.center[s] + (side == 0 ? -1.0 : 1.0) * c.half[s];
        children[2 * i + side] = c;
      }
    }
    parallel_for(children.size(), opt.workers,
                 [&](std::size_t i, unsigned) { detail::genz_malik<N>(f, children[i]); });
    res.evaluations += children.size() * pts;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      value += children[2 * i].value + children[2 * i + 1].value - batch[i].value;
      error += children[2 * i].error + children[2 * i + 1].error - batch[i].error;
      for (int side = 0; side < 2; ++side) {
        heap.push_back(children[2 * i + side]);
        std::push_heap(heap.begin(), heap.end(), less);
      }
    }
    if (++iter % 64 == 0) std::tie(value, error) = totals();
  }
  std::tie(value, error) = totals();
  res.value = value;
  res.error = error;
  res.regions = heap.size();
  res.converged = detail::within_tolerance(error, value, opt.abs_tol, opt.rel_tol);
  return res;
}

template <std::size_t N, class F>
CubatureResult adaptive_cubature(F&& f, const std::vector<Box<N>>& boxes, const CubatureOptions& opt) {
  return adaptive_cubature<N>(std::forward<F>(f), std::span<const Box<N>>(boxes), opt);
}

namespace detail {

struct Interval {
  double a = 0.0, b = 0.0, value = 0.0, error = 0.0;
  bool operator<(const Interval& o) const { return error < o.error; }
};

template <class F>
void gauss_kronrod21(F& f, Interval& iv) {
  static constexpr double xgk[11] = {
      0.995657163025808080735527280689003, 0.973906528517171720077964012084452, 0.930157491355708226001207180059508,
      0.865063366688984510732096688423493, 0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
      0.562757134668604683339000099272694, 0.433395394129247190799265943165784, 0.294392862701460198131126603103866,
      0.148874338981631210884826001129720, 0.000000000000000000000000000000000};
  static constexpr double wgk[11] = {
      0.011694638867371874278064396062192, 0.032558162307964727478818972459390, 0.054755896574351996031381300244580,
      0.075039674810919952767043140916190, 0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
      0.123491976262065851077527194318658, 0.134709217311473325928054001771707, 0.142775938577060080797094273138717,
      0.147739104901338491374841515972068, 0.149445554002916905664936468389821};
  static constexpr double wg[5] = {0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
                                   0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
                                   0.295524224714752870173892994651338};
  const double c = 0.5 * (iv.a + iv.b), h = 0.5 * (iv.b - iv.a);
  const double fc = f(c);
  double rk = wgk[10] * fc, rg = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double x = h * xgk[j];
    const double s = f(c - x) + f(c + x);
    rk += wgk[j] * s;
    if (j % 2 == 1) rg += wg[j / 2] * s;
  }
  iv.value = rk * h;
  iv.error = std::abs((rk - rg) * h);
  if (!std::isfinite(iv.value)) {
    iv.value = 0.0;
    iv.error = std::numeric_limits<double>::max() / 1e10;
  }
}

}  // namespace detail

/// Adaptive 21-point Gauss-Kronrod quadrature over the consecutive intervals
/// defined by the sorted breakpoints (at least two). Endpoints are never sampled.
template <class F>
CubatureResult adaptive_gk(F&& f, std::span<const double> breakpoints, const CubatureOptions& opt) {
  std::priority_queue<detail::Interval> heap;
  CubatureResult res;
  double value = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    detail::Interval iv{breakpoints[i], breakpoints[i + 1]};
    if (!(iv.b > iv.a)) continue;
    detail::gauss_kronrod21(f, iv);
    res.evaluations += 21;
    value += iv.value;
    error += iv.error;
    heap.push(iv);
  }
  while (!detail::within_tolerance(error, value, opt.abs_tol, opt.rel_tol) && res.evaluations < opt.max_evals &&
         !heap.empty()) {
    const detail::Interval p = heap.top();
    if (p.b - p.a <= 1e-15 * std::max(std::abs(p.a), std::abs(p.b))) break;
    heap.pop();
    const double m = 0.5 * (p.a + p.b);
    detail::Interval l{p.a, m}, r{m, p.b};
    detail::gauss_kronrod21(f, l);
    detail::gauss_kronrod21(f, r);
    res.evaluations += 42;
    value += l.value + r.value - p.value;
    error += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
  }
  value = 0.0;
  error = 0.0;
  res.regions = heap.size();
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  res.value = value;
  res.error = error;
  res.converged = detail::within_tolerance(error, value, opt.abs_tol, opt.rel_tol);
  return res;
}

template <class F>
CubatureResult adaptive_gk(F&& f, double a, double b, const CubatureOptions& opt) {
  const double bp[2] = {a, b};
  return adaptive_gk(std::forward<F>(f), std::span<const double>(bp, 2), opt);
}

}  // namespace fbmilt
