#pragma once

/**
 * @file norms.hpp
 * @brief Peak-gain (H-infinity) computation for scalar magnitude functions.
 *
 * Works on any callable omega -> |G(j omega)|, so the same code serves the
 * exact delay magnitude (not rational) and the Pade surrogate. The search is a
 * coarse scan on a mixed linear/log grid followed by golden-section refinement
 * of every bracketed local maximum.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"

namespace platoon {

template <class F>
concept MagnitudeFunction = std::regular_invocable<const F&, double> &&
                            std::convertible_to<std::invoke_result_t<const F&, double>, double>;

struct PeakOptions {
  std::size_t grid_points = 4000;   ///< coarse scan size, half linear and half logarithmic
  double refine_rel_width = 1e-10;  ///< golden-section stop width relative to the band

  friend bool operator==(const PeakOptions&, const PeakOptions&) = default;
};

struct PeakResult {
  double omega_star = 0.0;
  double peak = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

[[nodiscard]] inline std::vector<double> mixed_grid(double w1, double w2, std::size_t points) {
  const std::size_t half = std::max<std::size_t>(points / 2, 2);
  std::vector<double> grid;
  grid.reserve(2 * half);
  const double lw1 = std::log(w1), lw2 = std::log(w2);
  for (std::size_t i = 0; i < half; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(half - 1);
    grid.push_back(w1 + t * (w2 - w1));
    grid.push_back(std::exp(lw1 + t * (lw2 - lw1)));
  }
  grid.front() = w1;
  for (double& w : grid) w = std::clamp(w, w1, w2);
  grid.push_back(w2);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

/// Maximize f on [a, b] by golden-section search down to width `tol`.
template <class F>
PeakResult golden_max(const F& f, double a, double b, double tol) {
  constexpr double invphi = 0.6180339887498949;
  PeakResult r;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  r.evaluations = 2;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    ++r.evaluations;
  }
  if (fc >= fd) {
    r.omega_star = c;
    r.peak = fc;
  } else {
    r.omega_star = d;
    r.peak = fd;
  }
  return r;
}

}  // namespace detail

/// sup of mag over [w1, w2].
template <MagnitudeFunction F>
[[nodiscard]] PeakResult peak_on_band(const F& mag, double w1, double w2, const PeakOptions& opts = {}) {
  if (!(w1 > 0.0) || !(w2 > w1))
    throw ConfigError("band requires 0 < w1 < w2, got [" + std::to_string(w1) + ", " + std::to_string(w2) + "]");
  const auto grid = detail::mixed_grid(w1, w2, opts.grid_points);
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = mag(grid[i]);

  PeakResult best;
  best.evaluations = grid.size();
  const auto best_it = std::max_element(vals.begin(), vals.end());
  best.peak = *best_it;
  best.omega_star = grid[static_cast<std::size_t>(best_it - vals.begin())];

  const double tol = opts.refine_rel_width * (w2 - w1);
  const std::size_t n = grid.size();
  auto refine = [&](std::size_t lo, std::size_t hi) {
    const PeakResult r = detail::golden_max(mag, grid[lo], grid[hi], tol);
    best.evaluations += r.evaluations;
    if (r.peak > best.peak) {
      best.peak = r.peak;
      best.omega_star = r.omega_star;
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = (i == 0) || vals[i] >= vals[i - 1];
    const bool right_ok = (i + 1 == n) || vals[i] >= vals[i + 1];
    if (!(left_ok && right_ok)) continue;
    refine(i == 0 ? 0 : i - 1, i + 1 == n ? n - 1 : i + 1);
  }
  return best;
}

/// Lower edge of the search used for the global norm; the limit w -> 0+ is
/// handled analytically (|F| -> 1).
inline constexpr double kGlobalLowFrequency = 1e-6;

/// Upper search frequency: max(1e3, 1e3 * max(1/T, 1/theta, w2)).
[[nodiscard]] inline double global_upper_frequency(const VehicleParams& p, double omega2) {
  double scale = std::max(1.0 / p.T, omega2);
  if (p.theta > 0.0) scale = std::max(scale, 1.0 / p.theta);
  return std::max(1e3, 1e3 * scale);
}

/// sup over w in (0, inf) of mag for a strictly proper magnitude with unit DC
/// limit. Returns max(1, band peak); omega_star = 0 marks the DC limit.
template <MagnitudeFunction F>
[[nodiscard]] PeakResult hinf_global(const F& mag, double omega_max, const PeakOptions& opts = {}) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    PeakResult r = peak_on_band(mag, kGlobalLowFrequency, omega_max, opts);
    if (r.peak < 1.0) {
      r.peak = 1.0;
      r.omega_star = 0.0;
    }
    const double t1 = mag(2.0 * omega_max);
    const double t2 = mag(4.0 * omega_max);
    r.evaluations += 2;
    if (t1 <= r.peak && t2 <= t1) return r;
    omega_max *= 100.0;
  }
  throw InternalError("magnitude tail above peak beyond the widened search range");
}

/// 100 * (exact - approx) / exact on a uniform grid of `npoints` over [lo, hi].
template <MagnitudeFunction E, MagnitudeFunction A>
[[nodiscard]] std::vector<std::pair<double, double>> relative_error_profile(const E& exact, const A& approx,
                                                                            double lo, double hi,
                                                                            std::size_t npoints) {
  if (npoints < 2 || !(hi > lo)) throw ConfigError("error profile needs npoints >= 2 and hi > lo");
  std::vector<std::pair<double, double>> out;
  out.reserve(npoints);
  for (std::size_t i = 0; i < npoints; ++i) {
    const double w = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(npoints - 1);
    const double e = exact(w);
    out.emplace_back(w, 100.0 * (e - approx(w)) / e);
  }
  return out;
}

[[nodiscard]] inline double max_abs_percent(const std::vector<std::pair<double, double>>& profile) {
  double m = 0.0;
  for (const auto& [w, pct] : profile) m = std::max(m, std::abs(pct));
  return m;
}

}  // namespace platoon
