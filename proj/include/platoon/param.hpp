#pragma once

/**
 * @file param.hpp
 * @brief Charts from unconstrained coordinates onto box-constrained, locally
 *        stabilizing gains.
 *
 * The gains are written through positive intermediates (x, y, z, w):
 *
 *   k1 = x
 *   k2 = -tau x + y
 *   k3 = (y - T x) / (K y) - z
 *   k4 = tau^2 x / 2 - tau y + T x / (K y) + z + w     (constrained chart)
 *
 * x, y, z > 0 is exactly the Routh-Hurwitz region of the closed-loop cubic and
 * w >= 0 is the zero-frequency curvature condition eta >= 0. Each intermediate
 * is a convex combination of a lower and upper bound that depends on the
 * intermediates before it, so the chart is sequential: x, then y(x), then
 * z(x, y), then w(x, y, z).
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"

namespace platoon {

inline constexpr double kDefaultEpsilon = 1e-9;
inline constexpr double kDefaultZeta = 5.0;
inline constexpr double kDefaultNu = 5.0;

/// Extraction clamps the sigmoid preimage argument into [delta, 1 - delta].
inline constexpr double kExtractClamp = 1e-12;
/// Relative (to the interval width) overshoot tolerated before extraction fails.
inline constexpr double kExtractTolerance = 1e-9;
/// Relative interval width below which a coordinate is treated as fixed.
inline constexpr double kCollapsedWidth = 64.0 * std::numeric_limits<double>::epsilon();

struct BoxBounds {
  std::array<double, 4> lower{};
  std::array<double, 4> upper{};

  /// Box [scale * [0, -1, -1, -1], scale * 1].
  static BoxBounds symmetric(double scale) {
    return {{0.0, -scale, -scale, -scale}, {scale, scale, scale, scale}};
  }

  void validate() const {
    for (std::size_t i = 0; i < 4; ++i)
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
        throw ConfigError("box bounds must be finite (k" + std::to_string(i + 1) + ")");
    if (!(upper[0] > 0.0)) throw InfeasibleBox("k1 upper bound must be positive for local stability");
    for (std::size_t i = 0; i < 4; ++i)
      if (lower[i] > upper[i])
        throw ConfigError("box lower bound exceeds upper bound for k" + std::to_string(i + 1));
  }

  [[nodiscard]] bool contains(const Gains& k, double tol = 0.0) const {
    const auto a = k.as_array();
    for (std::size_t i = 0; i < 4; ++i)
      if (a[i] < lower[i] - tol || a[i] > upper[i] + tol) return false;
    return true;
  }

  friend bool operator==(const BoxBounds&, const BoxBounds&) = default;
};

/// Unit-interval chart coordinates.
struct PsiVector {
  std::array<double, 4> v{};
  friend bool operator==(const PsiVector&, const PsiVector&) = default;
};

/// Unconstrained coordinates of the sigmoid charts.
struct KappaVector {
  std::array<double, 4> v{};
  friend bool operator==(const KappaVector&, const KappaVector&) = default;
};

/// Unconstrained coordinates of the simple box-only chart.
struct MuVector {
  std::array<double, 4> v{};
  friend bool operator==(const MuVector&, const MuVector&) = default;
};

struct XYZW {
  double x = 0.0, y = 0.0, z = 0.0, w = 0.0;
};

[[nodiscard]] inline double sigmoid(double beta, double zeta = kDefaultZeta) {
  return 1.0 / (1.0 + std::exp(-zeta * beta));
}

/// Inverse logistic; arguments outside (0, 1) are clamped to [delta, 1 - delta].
[[nodiscard]] inline double sigmoid_inverse(double psi, double zeta = kDefaultZeta) {
  psi = std::clamp(psi, kExtractClamp, 1.0 - kExtractClamp);
  return std::log(psi / (1.0 - psi)) / zeta;
}

[[nodiscard]] inline double rho(double beta, double nu = kDefaultNu) { return 1.0 / (1.0 + nu * beta * beta); }

namespace detail {

[[nodiscard]] inline double lerp01(double lo, double hi, double psi) { return (1.0 - psi) * lo + psi * hi; }

}  // namespace detail

/// Interval bounds of each intermediate, as functions of the ones before it.
/// `with_eta` selects the constrained chart (extra y, z clamps and w).
namespace chart {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline void require_nonempty(const Interval& iv, const char* name) {
  if (iv.lo > iv.hi)
    throw InfeasibleBox(std::string("empty ") + name + " interval: lower " + std::to_string(iv.lo) +
                        " > upper " + std::to_string(iv.hi));
}

[[nodiscard]] inline Interval x_bounds(const BoxBounds& b, double eps) {
  return {std::max(eps, b.lower[0]), b.upper[0]};
}

/// Positive root of tau y^2 - xi y - T x / K with xi = tau^2 x / 2 + eps - k4u,
/// in a cancellation-free form. Returns +inf when no positive y satisfies the
/// polynomial (tau = 0 and xi >= 0).
[[nodiscard]] inline double eta_root(double x, const VehicleParams& p, const BoxBounds& b, double eps) {
  const double xi = p.tau * p.tau * x / 2.0 + eps - b.upper[3];
  const double c = p.T * x / p.K;
  const double disc = std::sqrt(xi * xi + 4.0 * p.tau * c);
  if (xi >= 0.0) {
    if (p.tau == 0.0) return std::numeric_limits<double>::infinity();
    return (xi + disc) / (2.0 * p.tau);
  }
  return 2.0 * c / (disc - xi);
}

[[nodiscard]] inline Interval y_bounds(double x, const VehicleParams& p, const BoxBounds& b, double eps,
                                       bool with_eta) {
  // y (1 - K k3l - K eps) >= T x is what keeps room for z >= eps below k3l.
  const double room = 1.0 - p.K * b.lower[2] - p.K * eps;
  if (!(room > 0.0)) throw InfeasibleBox("k3 lower bound leaves no stabilizing acceleration gain");
  Interval iv{std::max({eps, p.tau * x + b.lower[1], p.T * x / room}), p.tau * x + b.upper[1]};
  if (with_eta) iv.lo = std::max(iv.lo, eta_root(x, p, b, eps));
  return iv;
}

/// (y - T x) / (K y), the value of k3 + z.
[[nodiscard]] inline double z_base(double x, double y, const VehicleParams& p) { return (y - p.T * x) / (p.K * y); }

/// -tau^2 x / 2 + tau y - T x / (K y); k4 = z + w - this.
[[nodiscard]] inline double w_base(double x, double y, const VehicleParams& p) {
  return -p.tau * p.tau * x / 2.0 + p.tau * y - p.T * x / (p.K * y);
}

[[nodiscard]] inline Interval z_bounds(double x, double y, const VehicleParams& p, const BoxBounds& b, double eps,
                                       bool with_eta) {
  const double base = z_base(x, y, p);
  Interval iv{std::max(eps, base - b.upper[2]), base - b.lower[2]};
  if (with_eta) iv.hi = std::min(iv.hi, w_base(x, y, p) + b.upper[3]);
  return iv;
}

[[nodiscard]] inline Interval w_bounds(double x, double y, double z, const VehicleParams& p, const BoxBounds& b) {
  const double c = w_base(x, y, p) - z;
  return {std::max(0.0, c + b.lower[3]), c + b.upper[3]};
}

}  // namespace chart

/// x, y, z from the first three unit coordinates (w left at 0).
[[nodiscard]] inline XYZW prop1_map(const PsiVector& psi, const VehicleParams& p, const BoxBounds& b,
                                    double eps = kDefaultEpsilon) {
  XYZW out;
  const auto xi = chart::x_bounds(b, eps);
  chart::require_nonempty(xi, "x");
  out.x = detail::lerp01(xi.lo, xi.hi, psi.v[0]);
  const auto yi = chart::y_bounds(out.x, p, b, eps, false);
  chart::require_nonempty(yi, "y");
  out.y = detail::lerp01(yi.lo, yi.hi, psi.v[1]);
  const auto zi = chart::z_bounds(out.x, out.y, p, b, eps, false);
  chart::require_nonempty(zi, "z");
  out.z = detail::lerp01(zi.lo, zi.hi, psi.v[2]);
  return out;
}

/// x, y, z, w of the constrained chart; also enforces eta >= 0 through w >= 0.
[[nodiscard]] inline XYZW prop2_map(const PsiVector& psi, const VehicleParams& p, const BoxBounds& b,
                                    double eps = kDefaultEpsilon) {
  XYZW out;
  const auto xi = chart::x_bounds(b, eps);
  chart::require_nonempty(xi, "x");
  out.x = detail::lerp01(xi.lo, xi.hi, psi.v[0]);
  const auto yi = chart::y_bounds(out.x, p, b, eps, true);
  chart::require_nonempty(yi, "y");
  out.y = detail::lerp01(yi.lo, yi.hi, psi.v[1]);
  const auto zi = chart::z_bounds(out.x, out.y, p, b, eps, true);
  chart::require_nonempty(zi, "z");
  out.z = detail::lerp01(zi.lo, zi.hi, psi.v[2]);
  const auto wi = chart::w_bounds(out.x, out.y, out.z, p, b);
  chart::require_nonempty(wi, "w");
  out.w = detail::lerp01(wi.lo, wi.hi, psi.v[3]);
  return out;
}

/// k1..k3 from (x, y, z).
[[nodiscard]] inline Gains feedback_from_xyz(const XYZW& q, const VehicleParams& p) {
  Gains k;
  k.k1 = q.x;
  k.k2 = -p.tau * q.x + q.y;
  k.k3 = chart::z_base(q.x, q.y, p) - q.z;
  return k;
}

/// All four gains from (x, y, z, w) using the eta-preserving feedforward form.
[[nodiscard]] inline Gains gains_from_xyzw(const XYZW& q, const VehicleParams& p) {
  Gains k = feedback_from_xyz(q, p);
  k.k4 = -chart::w_base(q.x, q.y, p) + q.z + q.w;
  return k;
}

[[nodiscard]] inline PsiVector psi_of(const KappaVector& kappa, double zeta) {
  PsiVector psi;
  for (std::size_t i = 0; i < 4; ++i) psi.v[i] = sigmoid(kappa.v[i], zeta);
  return psi;
}

/// Locally stabilizing, box-feasible gains with k4 an independent convex
/// combination of its bounds.
[[nodiscard]] inline Gains corollary1_map(const KappaVector& kappa, const VehicleParams& p, const BoxBounds& b,
                                          double zeta = kDefaultZeta, double eps = kDefaultEpsilon) {
  const PsiVector psi = psi_of(kappa, zeta);
  Gains k = feedback_from_xyz(prop1_map(psi, p, b, eps), p);
  k.k4 = detail::lerp01(b.lower[3], b.upper[3], psi.v[3]);
  return k;
}

/// Locally stabilizing, box-feasible gains that also satisfy eta >= 0.
[[nodiscard]] inline Gains corollary2_map(const KappaVector& kappa, const VehicleParams& p, const BoxBounds& b,
                                          double zeta = kDefaultZeta, double eps = kDefaultEpsilon) {
  return gains_from_xyzw(prop2_map(psi_of(kappa, zeta), p, b, eps), p);
}

namespace detail {

[[nodiscard]] inline double extract_coordinate(double phi, const chart::Interval& iv, double zeta, int coord) {
  const double width = iv.hi - iv.lo;
  const double scale = std::max({1.0, std::abs(iv.lo), std::abs(iv.hi)});
  if (!(width > kCollapsedWidth * scale)) {
    if (std::abs(phi - iv.lo) <= kExtractTolerance * scale) return 0.0;
    throw NotInManifold(coord, "coordinate " + std::to_string(coord) + " outside a collapsed interval");
  }
  const double ratio = (phi - iv.lo) / width;
  const double slack = std::max(kExtractTolerance * width, kCollapsedWidth * scale);
  if (!(phi >= iv.lo - slack && phi <= iv.hi + slack))
    throw NotInManifold(coord, "coordinate " + std::to_string(coord) + " at relative position " +
                                   std::to_string(ratio) + " outside its interval");
  return sigmoid_inverse(std::clamp(ratio, 0.0, 1.0), zeta);
}

}  // namespace detail

/// Inverse of corollary2_map, solved sequentially kappa1 -> kappa4 because
/// each interval depends on the earlier intermediates.
[[nodiscard]] inline KappaVector corollary3_extract(const Gains& k, const VehicleParams& p, const BoxBounds& b,
                                                    double zeta = kDefaultZeta, double eps = kDefaultEpsilon) {
  KappaVector kappa;
  const double x = k.k1;
  if (!(x > 0.0)) throw NotInManifold(1, "k1 must be positive");
  kappa.v[0] = detail::extract_coordinate(x, chart::x_bounds(b, eps), zeta, 1);

  const double y = p.tau * k.k1 + k.k2;
  if (!(y > 0.0)) throw NotInManifold(2, "tau*k1 + k2 must be positive");
  chart::Interval yi;
  try {
    yi = chart::y_bounds(x, p, b, eps, true);
  } catch (const InfeasibleBox& e) {
    throw NotInManifold(2, e.what());
  }
  kappa.v[1] = detail::extract_coordinate(y, yi, zeta, 2);

  const double z = chart::z_base(x, y, p) - k.k3;
  if (!(z > 0.0)) throw NotInManifold(3, "acceleration gain outside the Hurwitz region");
  kappa.v[2] = detail::extract_coordinate(z, chart::z_bounds(x, y, p, b, eps, true), zeta, 3);

  // w = tau^2 k1 / 2 + tau k2 + k3 + k4 - 1/K.
  const double w = p.tau * p.tau * k.k1 / 2.0 + p.tau * k.k2 + k.k3 + k.k4 - 1.0 / p.K;
  kappa.v[3] = detail::extract_coordinate(w, chart::w_bounds(x, y, z, p, b), zeta, 4);
  return kappa;
}

/// Box-only chart used for the feasibility search:
/// k_i = (1 - rho(mu_i)) l_i + rho(mu_i) u_i with l_1 = max(eps, k1l).
[[nodiscard]] inline Gains kpr_map(const MuVector& mu, const BoxBounds& b, double nu = kDefaultNu,
                                   double eps = kDefaultEpsilon) {
  std::array<double, 4> k{};
  for (std::size_t i = 0; i < 4; ++i) {
    const double lo = (i == 0) ? std::max(eps, b.lower[0]) : b.lower[i];
    k[i] = detail::lerp01(lo, b.upper[i], rho(mu.v[i], nu));
  }
  return Gains::from_array(k);
}

}  // namespace platoon
