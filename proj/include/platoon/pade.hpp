#pragma once

// Diagonal Pade approximation of e^{-theta s} and the rational surrogate of
// the delay transfer function built from it.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"

namespace platoon {

inline constexpr int kDefaultPadeOrder = 5;
inline constexpr int kMaxPadeOrder = 12;

/// Real-coefficient rational function, coefficients in ascending powers of s.
struct RationalTF {
  std::vector<double> num;
  std::vector<double> den;

  [[nodiscard]] std::size_t num_degree() const { return num.empty() ? 0 : num.size() - 1; }
  [[nodiscard]] std::size_t den_degree() const { return den.empty() ? 0 : den.size() - 1; }

  friend bool operator==(const RationalTF&, const RationalTF&) = default;
};

namespace detail {

/// Horner evaluation of an ascending-coefficient polynomial at s = j*omega.
/// Multiplication by j*omega is done component-wise: (re + j im) j w = -im w + j re w.
[[nodiscard]] inline std::complex<double> eval_jw(std::span<const double> c, double omega) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    const double nre = -im * omega + c[i];
    im = re * omega;
    re = nre;
  }
  return {re, im};
}

[[nodiscard]] inline std::vector<double> poly_mul(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

[[nodiscard]] inline std::vector<double> poly_add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

}  // namespace detail

/// Order-N diagonal Pade approximant P(s)/Q(s) of e^{-theta s}.
/// Coefficients c_k = (2N-k)! N! / ((2N)! k! (N-k)!) via the ratio
/// c_{k+1} / c_k = (N-k) / ((2N-k)(k+1)); P carries (-theta)^k, Q (+theta)^k.
[[nodiscard]] inline RationalTF pade_exp(double theta, int order) {
  if (order < 1 || order > kMaxPadeOrder)
    throw ConfigError("Pade order must be in [1, " + std::to_string(kMaxPadeOrder) + "], got " +
                      std::to_string(order));
  if (!(theta >= 0.0)) throw ConfigError("Pade delay must be non-negative");
  const auto n = static_cast<std::size_t>(order);
  RationalTF tf;
  tf.num.assign(n + 1, 0.0);
  tf.den.assign(n + 1, 0.0);
  double c = 1.0;
  double pow_theta = 1.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    tf.num[k] = sign * c * pow_theta;
    tf.den[k] = c * pow_theta;
    const double kk = static_cast<double>(k), nn = static_cast<double>(n);
    c *= (nn - kk) / ((2.0 * nn - kk) * (kk + 1.0));
    pow_theta *= theta;
  }
  return tf;
}

/// F_hat(s) = [K k4 s^2 P(s) + (K k2 s + K k1) Q(s)] / [(c3 s^3 + c2 s^2 + c1 s + c0) Q(s)].
[[nodiscard]] inline RationalTF approx_tf(const DelayTF& tf, int order = kDefaultPadeOrder) {
  const RationalTF delay = pade_exp(tf.theta, order);
  const std::vector<double> s2_term{0.0, 0.0, tf.num_delayed};
  const std::vector<double> pd_term{tf.num_k1, tf.num_k2};
  const std::vector<double> cubic{tf.c0, tf.c1, tf.c2, tf.c3};
  RationalTF out;
  out.num = detail::poly_add(detail::poly_mul(s2_term, delay.num), detail::poly_mul(pd_term, delay.den));
  out.den = detail::poly_mul(cubic, delay.den);
  // Drop a vanishing leading numerator coefficient (k4 = 0) so degrees stay honest.
  while (out.num.size() > 1 && out.num.back() == 0.0) out.num.pop_back();
  return out;
}

[[nodiscard]] inline std::complex<double> freq_response(const RationalTF& tf, double omega) {
  const auto den = detail::eval_jw(tf.den, omega);
  if (den == std::complex<double>{0.0, 0.0})
    throw DomainError("rational transfer function has a pole at j*" + std::to_string(omega));
  return detail::eval_jw(tf.num, omega) / den;
}

[[nodiscard]] inline double rational_magnitude(const RationalTF& tf, double omega) {
  const auto den = detail::eval_jw(tf.den, omega);
  const double dn = std::norm(den);
  if (!(dn > 0.0))
    throw DomainError("rational transfer function has a pole at j*" + std::to_string(omega));
  return std::sqrt(std::norm(detail::eval_jw(tf.num, omega)) / dn);
}

}  // namespace platoon
