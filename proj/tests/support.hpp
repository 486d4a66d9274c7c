#pragma once

// Independent oracles and reference designs shared by the test binaries.
// Nothing here calls into the library's numeric code paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "platoon/model.hpp"
#include "platoon/param.hpp"

namespace platoon::test {

using cd = std::complex<double>;

inline const VehicleParams kCase1Params{1.0, 0.45, 1.0, 0.1};
inline const VehicleParams kCase2Params{1.0, 0.45, 1.0, 1.5};
inline const BoxBounds kCase1Box{{0.0, -1.32, -1.32, -1.32}, {1.32, 1.32, 1.32, 1.32}};
inline const BoxBounds kCase2Box{{0.0, -2.0, -2.0, -2.0}, {2.0, 2.0, 2.0, 2.0}};

// Published designs.
inline const Gains kUnc{0.92, 1.32, -0.92, 0.72};
inline const Gains kStar1{0.4212, 0.4775, -1.0078, 1.3197};
inline const Gains kStar2{1.9696, 1.9953, -0.2273, 0.0234};
inline const Gains kZero1{0.8089, 0.3191, 0.3611, 0.3492};
inline const KappaVector kKappaStar1{{-0.1516, -0.0237, 1.7065, -0.7647}};
inline const KappaVector kKappa01{{0.0918, -0.0378, -0.2983, -0.1611}};
inline const MuVector kMu01{{0.3555, 0.3495, 0.3377, 0.3411}};

/// F(jw) by direct complex evaluation of the delay transfer function.
inline cd direct_response(const VehicleParams& p, const Gains& k, double w) {
  const cd s(0.0, w);
  const cd num = p.K * (k.k4 * s * s * std::exp(-p.theta * s) + k.k2 * s + k.k1);
  const cd den = p.T * s * s * s + (1.0 - p.K * k.k3) * s * s + p.K * (p.tau * k.k1 + k.k2) * s + p.K * k.k1;
  return num / den;
}

inline double direct_magnitude(const VehicleParams& p, const Gains& k, double w) {
  return std::abs(direct_response(p, k, w));
}

/// Largest real part of eig(A + B [k1 k2 k3]) built from scratch.
inline double closed_loop_abscissa(const VehicleParams& p, const Gains& k) {
  Eigen::Matrix3d a;
  a << 0.0, 1.0, -p.tau, 0.0, 0.0, -1.0, p.K * k.k1 / p.T, p.K * k.k2 / p.T, (p.K * k.k3 - 1.0) / p.T;
  const Eigen::Vector3cd ev = a.eigenvalues();
  double m = -1e300;
  for (int i = 0; i < 3; ++i) m = std::max(m, ev[i].real());
  return m;
}

/// Dense uniform-grid maximum, refined by a fine local rescan.
template <class F>
double brute_peak(const F& f, double lo, double hi, int n = 200000) {
  double best = -1.0, wbest = lo;
  for (int i = 0; i <= n; ++i) {
    const double w = lo + (hi - lo) * i / n;
    const double v = f(w);
    if (v > best) {
      best = v;
      wbest = w;
    }
  }
  const double h = (hi - lo) / n;
  for (int i = -1000; i <= 1000; ++i) {
    const double w = std::clamp(wbest + h * i / 1000.0, lo, hi);
    best = std::max(best, f(w));
  }
  return best;
}

/// Maclaurin coefficients of num/den (ascending), by long division.
inline std::vector<double> series_quotient(const std::vector<double>& num, const std::vector<double>& den,
                                           std::size_t terms) {
  std::vector<double> q(terms, 0.0);
  for (std::size_t n = 0; n < terms; ++n) {
    double acc = n < num.size() ? num[n] : 0.0;
    for (std::size_t j = 1; j <= n && j < den.size(); ++j) acc -= den[j] * q[n - j];
    q[n] = acc / den[0];
  }
  return q;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline KappaVector random_kappa(std::mt19937_64& rng, double r = 3.0) {
  std::uniform_real_distribution<double> u(-r, r);
  KappaVector k;
  for (double& v : k.v) v = u(rng);
  return k;
}

}  // namespace platoon::test
