#pragma once

/**
 * @file model.hpp
 * @brief Longitudinal CAV plant, decentralized control law and the analytic
 *        stability conditions that act on it.
 *
 * State layout is chi = [sigma, dv, a]: deviation from equilibrium spacing (m),
 * speed difference to the predecessor (m/s) and realized acceleration (m/s^2).
 * The predecessor acceleration a_{i-1} enters as an exogenous disturbance.
 */

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "platoon/errors.hpp"

namespace platoon {

/// Plant constants shared by every vehicle of one transfer function.
struct VehicleParams {
  double tau = 1.0;    ///< constant time gap (s)
  double T = 0.45;     ///< actuation lag (s)
  double K = 1.0;      ///< realized-acceleration ratio
  double theta = 0.1;  ///< V2V/V2I communication delay (s)

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("actuation lag T must be positive");
    if (!(K > 0.0) || !std::isfinite(K)) throw ConfigError("acceleration ratio K must be positive");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("time gap tau must be non-negative");
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw ConfigError("delay theta must be non-negative");
  }

  friend bool operator==(const VehicleParams&, const VehicleParams&) = default;
};

/// Feedback gains on [sigma, dv, a] plus the feedforward gain on the delayed
/// predecessor acceleration.
struct Gains {
  double k1 = 0.0;  ///< spacing gain (1/s^2)
  double k2 = 0.0;  ///< speed-difference gain (1/s)
  double k3 = 0.0;  ///< acceleration gain
  double k4 = 0.0;  ///< feedforward gain

  [[nodiscard]] std::array<double, 4> as_array() const { return {k1, k2, k3, k4}; }
  static Gains from_array(const std::array<double, 4>& k) { return {k[0], k[1], k[2], k[3]}; }
  [[nodiscard]] double operator[](std::size_t i) const { return as_array()[i]; }

  friend bool operator==(const Gains&, const Gains&) = default;
};

struct StateSpace {
  Eigen::Matrix3d A;
  Eigen::Vector3d B;
  Eigen::Vector3d D;

  /// A + B * [k1 k2 k3]; k4 only scales the delayed disturbance.
  [[nodiscard]] Eigen::Matrix3d closed_loop(const Gains& k) const {
    Eigen::RowVector3d fb(k.k1, k.k2, k.k3);
    return A + B * fb;
  }
};

[[nodiscard]] inline StateSpace build_state_space(const VehicleParams& p) {
  StateSpace ss;
  ss.A << 0.0, 1.0, -p.tau,
          0.0, 0.0, -1.0,
          0.0, 0.0, -1.0 / p.T;
  ss.B << 0.0, 0.0, p.K / p.T;
  ss.D << 0.0, 1.0, 0.0;
  return ss;
}

/// Exact delay transfer function a_i(s)/a_{i-1}(s):
///   K (k4 s^2 e^{-theta s} + k2 s + k1) / (c3 s^3 + c2 s^2 + c1 s + c0).
struct DelayTF {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0, c3 = 0.0;
  double num_k1 = 0.0;       ///< K*k1, constant numerator term
  double num_k2 = 0.0;       ///< K*k2, coefficient of s
  double num_delayed = 0.0;  ///< K*k4, coefficient of s^2 e^{-theta s}
  double theta = 0.0;

  [[nodiscard]] static DelayTF from(const VehicleParams& p, const Gains& k) {
    DelayTF tf;
    tf.c3 = p.T;
    tf.c2 = 1.0 - p.K * k.k3;
    tf.c1 = p.K * (p.tau * k.k1 + k.k2);
    tf.c0 = p.K * k.k1;
    tf.num_k1 = p.K * k.k1;
    tf.num_k2 = p.K * k.k2;
    tf.num_delayed = p.K * k.k4;
    tf.theta = p.theta;
    return tf;
  }

  // Magnitude-squared coefficients; |den(jw)|^2 = d6 w^6 + d4 w^4 + d2 w^2 + d0.
  [[nodiscard]] double n4() const { return num_delayed * num_delayed; }
  [[nodiscard]] double n2() const { return num_k2 * num_k2; }
  [[nodiscard]] double n0() const { return num_k1 * num_k1; }
  [[nodiscard]] double d6() const { return c3 * c3; }
  [[nodiscard]] double d4() const { return c2 * c2 - 2.0 * c1 * c3; }
  [[nodiscard]] double d2() const { return c1 * c1 - 2.0 * c0 * c2; }
  [[nodiscard]] double d0() const { return c0 * c0; }

  /// Delay cross term g_theta(w) = 2 K^2 k4 (-k1 cos(theta w) + k2 w sin(theta w)).
  [[nodiscard]] double g_theta(double omega) const {
    return cross_term(omega, std::cos(theta * omega), std::sin(theta * omega));
  }

  [[nodiscard]] double cross_term(double omega, double cos_tw, double sin_tw) const {
    return 2.0 * num_delayed * (-num_k1 * cos_tw + num_k2 * omega * sin_tw);
  }

  [[nodiscard]] double den_sq(double omega) const {
    const double w2 = omega * omega;
    return ((d6() * w2 + d4()) * w2 + d2()) * w2 + d0();
  }
};

namespace detail {

inline double magnitude_from_parts(const DelayTF& tf, double omega, double cross) {
  const double w2 = omega * omega;
  const double num = (tf.n4() * w2 + tf.n2() + cross) * w2 + tf.n0();
  const double den = tf.den_sq(omega);
  if (!(den > 0.0)) {
    throw DomainError("transfer-function denominator vanishes at omega = " + std::to_string(omega));
  }
  return std::sqrt(std::max(num, 0.0) / den);
}

}  // namespace detail

/// |F(jw)| from the closed-form magnitude-squared expression.
[[nodiscard]] inline double exact_magnitude(const DelayTF& tf, double omega) {
  return detail::magnitude_from_parts(tf, omega, tf.g_theta(omega));
}

/// Same expression with cos/sin of theta*w replaced by their low-order Taylor
/// truncations. Diagnostic only.
[[nodiscard]] inline double taylor_magnitude(const DelayTF& tf, double omega) {
  const double tw = tf.theta * omega;
  const double cos_t = 1.0 - tw * tw / 2.0;
  const double sin_t = tw - tw * tw * tw / 6.0;
  return detail::magnitude_from_parts(tf, omega, tf.cross_term(omega, cos_t, sin_t));
}

// ---------------------------------------------------------------------------
// Local stability

inline constexpr double kMarginTolerance = 1e-12;

struct StabilityReport {
  std::array<double, 4> margins{};
  bool hurwitz = false;
  std::array<std::complex<double>, 3> eigenvalues{};

  friend bool operator==(const StabilityReport&, const StabilityReport&) = default;

  [[nodiscard]] double spectral_abscissa() const {
    double sa = -std::numeric_limits<double>::infinity();
    for (const auto& ev : eigenvalues) sa = std::max(sa, ev.real());
    return sa;
  }
};

/// Roots of a3 s^3 + a2 s^2 + a1 s + a0 by safeguarded Newton on one real
/// root followed by deflation to a quadratic.
[[nodiscard]] inline std::array<std::complex<double>, 3> cubic_roots_newton(double a3, double a2,
                                                                            double a1, double a0) {
  const double b2 = a2 / a3, b1 = a1 / a3, b0 = a0 / a3;
  auto p = [&](double s) { return ((s + b2) * s + b1) * s + b0; };
  auto dp = [&](double s) { return (3.0 * s + 2.0 * b2) * s + b1; };

  // Cauchy bound brackets every real root.
  const double bound = 1.0 + std::max({std::abs(b2), std::abs(b1), std::abs(b0)});
  double lo = -bound, hi = bound;  // p(lo) < 0 < p(hi) for a monic cubic
  double s = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double f = p(s);
    if (f == 0.0) break;
    if (f < 0.0) lo = s; else hi = s;
    const double d = dp(s);
    double next = (d != 0.0) ? s - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * std::max(1.0, std::abs(s))) {
      s = next;
      break;
    }
    s = next;
  }
  // Deflate: s^3 + b2 s^2 + b1 s + b0 = (s - r)(s^2 + q1 s + q0).
  const double r = s;
  const double q1 = b2 + r;
  const double q0 = b1 + r * q1;
  const double disc = q1 * q1 - 4.0 * q0;
  std::array<std::complex<double>, 3> roots;
  roots[0] = r;
  if (disc >= 0.0) {
    const double sq = std::sqrt(disc);
    const double t = -0.5 * (q1 + std::copysign(sq, q1));
    roots[1] = t;
    roots[2] = (t != 0.0) ? q0 / t : 0.0;
  } else {
    const double im = 0.5 * std::sqrt(-disc);
    roots[1] = {-0.5 * q1, -im};
    roots[2] = {-0.5 * q1, im};
  }
  return roots;
}

/// Roots of the cubic via eigenvalues of the companion matrix of its monic
/// normalization; falls back to cubic_roots_newton if Eigen does not converge.
[[nodiscard]] inline std::array<std::complex<double>, 3> cubic_roots(double a3, double a2, double a1,
                                                                     double a0) {
  Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
  companion(0, 0) = -a2 / a3;
  companion(0, 1) = -a1 / a3;
  companion(0, 2) = -a0 / a3;
  companion(1, 0) = 1.0;
  companion(2, 1) = 1.0;
  Eigen::EigenSolver<Eigen::Matrix3d> solver(companion, false);
  if (solver.info() != Eigen::Success) return cubic_roots_newton(a3, a2, a1, a0);
  const auto ev = solver.eigenvalues();
  return {ev(0), ev(1), ev(2)};
}

/// Routh-Hurwitz margins of the closed-loop characteristic cubic
/// (T/K) s^3 + (1/K - k3) s^2 + (tau k1 + k2) s + k1, plus its roots.
[[nodiscard]] inline StabilityReport local_stability(const VehicleParams& p, const Gains& k) {
  StabilityReport rep;
  const double a3 = p.T / p.K;
  const double a2 = 1.0 / p.K - k.k3;
  const double a1 = p.tau * k.k1 + k.k2;
  const double a0 = k.k1;
  rep.margins = {a0, a1, a2, a2 * a1 - a3 * a0};
  rep.hurwitz = true;
  for (double m : rep.margins) rep.hurwitz = rep.hurwitz && m > kMarginTolerance;
  rep.eigenvalues = cubic_roots(a3, a2, a1, a0);
  return rep;
}

[[nodiscard]] inline bool is_locally_stable(const VehicleParams& p, const Gains& k) {
  const double a2 = 1.0 / p.K - k.k3;
  const double a1 = p.tau * k.k1 + k.k2;
  return k.k1 > kMarginTolerance && a1 > kMarginTolerance && a2 > kMarginTolerance &&
         a2 * a1 - (p.T / p.K) * k.k1 > kMarginTolerance;
}

// ---------------------------------------------------------------------------
// String-stability conditions

/// Coefficients of the quartic p w^4 + q w^2 + r obtained with the small-delay
/// Taylor truncation, and which of the two sign patterns certifies it.
struct TaylorStringStability {
  double p = 0.0, q = 0.0, r = 0.0;
  bool case1_ok = false;  ///< p, q, r all non-negative
  bool case2_ok = false;  ///< q < 0 but the quadratic in w^2 has no positive root

  [[nodiscard]] bool ok() const { return case1_ok || case2_ok; }

  friend bool operator==(const TaylorStringStability&, const TaylorStringStability&) = default;
};

/// eta = 2 K k1 (K (k4 + k3 + tau k2 + tau^2 k1 / 2) - 1). eta >= 0 is
/// necessary for ||F||_inf <= 1.
[[nodiscard]] inline double lemma1_eta(const VehicleParams& p, const Gains& k) {
  const double s = k.k4 + k.k3 + p.tau * k.k2 + p.tau * p.tau * k.k1 / 2.0;
  return 2.0 * p.K * k.k1 * (p.K * s - 1.0);
}

/// Limit of d^2|F(jw)|/dw^2 as w -> 0+, equal to -eta / (K k1)^2.
[[nodiscard]] inline double zero_frequency_curvature(const VehicleParams& p, const Gains& k) {
  const double kk1 = p.K * k.k1;
  return -lemma1_eta(p, k) / (kk1 * kk1);
}

[[nodiscard]] inline TaylorStringStability taylor_string_stability(const VehicleParams& p, const Gains& k) {
  const double K = p.K, T = p.T, th = p.theta;
  TaylorStringStability out;
  out.p = T * T + K * K * k.k4 * k.k2 * th * th * th / 3.0;
  out.q = -2.0 * K * T * (p.tau * k.k1 + k.k2) + (K * k.k3 - 1.0) * (K * k.k3 - 1.0) -
          K * K * k.k4 * (k.k1 * th * th + 2.0 * k.k2 * th + k.k4);
  out.r = lemma1_eta(p, k);
  out.case1_ok = out.p >= 0.0 && out.q >= 0.0 && out.r >= 0.0;
  out.case2_ok = out.p >= 0.0 && out.q < 0.0 && out.r >= 0.0 && out.q * out.q - 4.0 * out.p * out.r <= 0.0;
  return out;
}

}  // namespace platoon
