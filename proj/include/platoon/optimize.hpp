#pragma once

/**
 * @file optimize.hpp
 * @brief Nelder-Mead simplex search with restart, and a seeded multi-start
 *        driver around it.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/parallel.hpp"

namespace platoon {

struct OptimizerOptions {
  int max_iters = 2000;
  double x_tol = 1e-10;
  double f_tol = 1e-10;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  /// Initial simplex step on axis i is max(step_floor, step_scale * |x0_i|).
  double step_floor = 0.05;
  double step_scale = 0.05;
  int restarts = 1;
  std::uint64_t seed = 0;

  friend bool operator==(const OptimizerOptions&, const OptimizerOptions&) = default;

  void validate() const {
    if (!(reflection > 0.0)) throw ConfigError("reflection coefficient must be > 0");
    if (!(expansion > 1.0)) throw ConfigError("expansion coefficient must be > 1");
    if (!(contraction > 0.0 && contraction < 1.0)) throw ConfigError("contraction coefficient must be in (0, 1)");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("shrink coefficient must be in (0, 1)");
    if (max_iters < 1) throw ConfigError("max_iters must be positive");
    if (restarts < 0) throw ConfigError("restarts must be non-negative");
  }
};

struct OptimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  std::size_t evaluations = 0;
  bool budget_exhausted = false;
  /// Best vertex value after every iteration, across restarts.
  std::vector<double> trace;
};

namespace detail {

struct Vertex {
  std::vector<double> x;
  double f;
};

// NaN sorts last so a failing evaluation never becomes the best vertex.
inline bool vertex_less(const Vertex& a, const Vertex& b) {
  if (std::isnan(a.f)) return false;
  if (std::isnan(b.f)) return true;
  return a.f < b.f;
}

template <class F>
bool simplex_run(const F& f, std::vector<double> x0, double f0, const OptimizerOptions& opts,
                 OptimizeResult& out, int& iter_budget) {
  const std::size_t n = x0.size();
  std::vector<Vertex> simplex;
  simplex.reserve(n + 1);
  simplex.push_back({x0, f0});
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> xi = x0;
    xi[i] += std::max(opts.step_floor, opts.step_scale * std::abs(x0[i]));
    const double fi = f(std::span<const double>(xi));
    ++out.evaluations;
    simplex.push_back({std::move(xi), fi});
  }

  auto eval = [&](const std::vector<double>& x) {
    ++out.evaluations;
    return f(std::span<const double>(x));
  };
  auto affine = [&](const std::vector<double>& base, const std::vector<double>& toward, double t) {
    std::vector<double> r(n);
    for (std::size_t j = 0; j < n; ++j) r[j] = base[j] + t * (toward[j] - base[j]);
    return r;
  };

  std::vector<double> centroid(n);
  while (true) {
    std::stable_sort(simplex.begin(), simplex.end(), vertex_less);
    const Vertex& best = simplex.front();
    Vertex& worst = simplex.back();

    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(simplex[i].x[j] - best.x[j]));
    const double spread = worst.f - best.f;
    if (diameter <= opts.x_tol && spread <= opts.f_tol) return true;
    if (iter_budget <= 0) return false;
    --iter_budget;
    ++out.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i].x[j];
    for (double& c : centroid) c /= static_cast<double>(n);

    std::vector<double> xr = affine(centroid, worst.x, -opts.reflection);
    const double fr = eval(xr);
    const double f_second_worst = simplex[n - 1].f;
    bool do_shrink = false;
    if (fr < best.f) {
      std::vector<double> xe = affine(centroid, xr, opts.expansion);
      const double fe = eval(xe);
      worst = (fe < fr) ? Vertex{std::move(xe), fe} : Vertex{std::move(xr), fr};
    } else if (fr < f_second_worst) {
      worst = {std::move(xr), fr};
    } else if (fr < worst.f) {
      std::vector<double> xc = affine(centroid, xr, opts.contraction);
      const double fc = eval(xc);
      if (fc <= fr) worst = {std::move(xc), fc};
      else do_shrink = true;
    } else {
      std::vector<double> xcc = affine(centroid, worst.x, opts.contraction);
      const double fcc = eval(xcc);
      if (fcc < worst.f) worst = {std::move(xcc), fcc};
      else do_shrink = true;
    }
    if (do_shrink) {
      for (std::size_t i = 1; i <= n; ++i) {
        simplex[i].x = affine(simplex[0].x, simplex[i].x, opts.shrink);
        simplex[i].f = eval(simplex[i].x);
      }
    }
    auto it = std::min_element(simplex.begin(), simplex.end(), vertex_less);
    if (vertex_less(*it, {out.x, out.f})) {
      out.x = it->x;
      out.f = it->f;
    }
    out.trace.push_back(out.f);
  }
}

}  // namespace detail

/// Minimize f from x0. Converges when both the simplex diameter (max-norm to
/// the best vertex) is below x_tol and the value spread is below f_tol, then
/// restarts `restarts` times from the best point with a fresh simplex.
/// The best point found is never worse than x0.
template <class F>
[[nodiscard]] OptimizeResult nelder_mead(const F& f, std::vector<double> x0, const OptimizerOptions& opts = {}) {
  opts.validate();
  if (x0.empty()) throw ConfigError("nelder_mead needs at least one dimension");
  OptimizeResult out;
  out.x = x0;
  out.f = f(std::span<const double>(x0));
  out.evaluations = 1;
  int budget = opts.max_iters;
  bool converged = detail::simplex_run(f, out.x, out.f, opts, out, budget);
  for (int r = 0; r < opts.restarts && converged; ++r) {
    const double before = out.f;
    converged = detail::simplex_run(f, out.x, out.f, opts, out, budget);
    if (!(out.f < before - opts.f_tol)) break;
  }
  out.budget_exhausted = !converged;
  return out;
}

/// Best of n_starts Nelder-Mead runs from points drawn by sampler(rng).
/// Starting points are drawn sequentially from one engine seeded with
/// opts.seed, and ties are broken by lexicographic x, so the result does not
/// depend on how runs are scheduled.
template <class F, class Sampler>
[[nodiscard]] OptimizeResult multi_start(const F& f, Sampler&& sampler, int n_starts,
                                         const OptimizerOptions& opts = {}) {
  if (n_starts < 1) throw ConfigError("multi_start needs at least one start");
  std::mt19937_64 rng(opts.seed);
  std::vector<std::vector<double>> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));
  for (int i = 0; i < n_starts; ++i) starts.push_back(sampler(rng));

  std::vector<OptimizeResult> runs(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { runs[i] = nelder_mead(f, starts[i], opts); });

  auto better = [](const OptimizeResult& a, const OptimizeResult& b) {
    if (detail::vertex_less({a.x, a.f}, {b.x, b.f})) return true;
    if (detail::vertex_less({b.x, b.f}, {a.x, a.f})) return false;
    return a.x < b.x;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (better(runs[i], runs[best])) best = i;
  OptimizeResult out = runs[best];
  out.evaluations = 0;
  out.iterations = 0;
  for (const auto& r : runs) {
    out.evaluations += r.evaluations;
    out.iterations += r.iterations;
  }
  return out;
}

}  // namespace platoon
