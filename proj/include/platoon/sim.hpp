#pragma once

/**
 * @file sim.hpp
 * @brief Time-domain mixed-platoon simulation with delayed feedforward.
 *
 * Every vehicle follows the same third-order linear model; HDVs are modeled
 * with k4 = 0 and string-unstable default gains. Vehicle 1 follows the
 * exogenous leader acceleration profile. States are deviations from
 * equilibrium and start at zero.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"

namespace platoon {

enum class VehicleKind { CAV, HDV };

/// Locally stable but string-unstable human-driver gains used by default.
[[nodiscard]] inline Gains default_hdv_gains() { return {0.5, 0.2, 0.0, 0.0}; }

struct VehicleSpec {
  VehicleKind kind = VehicleKind::CAV;
  VehicleParams params{};
  Gains gains{};

  [[nodiscard]] static VehicleSpec hdv(const VehicleParams& p, const Gains& g = default_hdv_gains()) {
    return {VehicleKind::HDV, p, g};
  }
  [[nodiscard]] static VehicleSpec cav(const VehicleParams& p, const Gains& g) { return {VehicleKind::CAV, p, g}; }

  void validate() const {
    params.validate();
    if (kind == VehicleKind::HDV && gains.k4 != 0.0) throw ConfigError("HDV cannot use feedforward (k4 must be 0)");
    if (!is_locally_stable(params, gains)) throw ConfigError("vehicle gains are not locally stable");
  }
};

/// Exogenous acceleration of the platoon leader.
struct LeaderProfile {
  enum class Kind { piecewise, sine, chirp };
  struct Segment {
    double t0, t1, accel;  ///< accel on [t0, t1)
  };

  Kind kind = Kind::piecewise;
  std::vector<Segment> segments;  // piecewise
  double amplitude = 1.0;         // sine, chirp
  double omega = 1.0;             // sine
  double omega_lo = 0.5;          // chirp
  double omega_hi = 2.5;          // chirp
  double t_start = 0.0;           // sine, chirp
  double duration = 0.0;          // chirp
  double taper = 0.1;             // chirp: fraction of duration cosine-tapered at each end

  [[nodiscard]] double value(double t) const {
    switch (kind) {
      case Kind::piecewise:
        for (const auto& s : segments)
          if (t >= s.t0 && t < s.t1) return s.accel;
        return 0.0;
      case Kind::sine:
        return t < t_start ? 0.0 : amplitude * std::sin(omega * (t - t_start));
      case Kind::chirp: {
        const double u = t - t_start;
        if (u < 0.0 || u >= duration) return 0.0;
        const double phase = omega_lo * u + (omega_hi - omega_lo) * u * u / (2.0 * duration);
        const double edge = taper * duration;
        double env = 1.0;
        if (edge > 0.0) {
          const double d = std::min(u, duration - u);
          if (d < edge) env = 0.5 * (1.0 - std::cos(std::numbers::pi * d / edge));
        }
        return amplitude * env * std::sin(phase);
      }
    }
    return 0.0;
  }

  /// Times where the profile or its derivative may jump.
  [[nodiscard]] std::vector<double> breakpoints() const {
    std::vector<double> out;
    if (kind == Kind::piecewise) {
      for (const auto& s : segments) {
        out.push_back(s.t0);
        out.push_back(s.t1);
      }
    } else {
      out.push_back(t_start);
      if (kind == Kind::chirp) out.push_back(t_start + duration);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// First time the profile can be nonzero.
  [[nodiscard]] double onset() const {
    if (kind != Kind::piecewise) return t_start;
    double t = 0.0;
    bool any = false;
    for (const auto& s : segments)
      if (s.t1 > s.t0 && s.accel != 0.0) {
        t = any ? std::min(t, s.t0) : s.t0;
        any = true;
      }
    return t;
  }

  /// Time after which the profile stays zero (infinite for a sine).
  [[nodiscard]] double end() const {
    switch (kind) {
      case Kind::piecewise: {
        double t = 0.0;
        for (const auto& s : segments)
          if (s.accel != 0.0) t = std::max(t, s.t1);
        return t;
      }
      case Kind::sine:
        return std::numeric_limits<double>::infinity();
      case Kind::chirp:
        return t_start + duration;
    }
    return 0.0;
  }
};

/// Deceleration a_dec for t_dec seconds starting at t_start, then
/// acceleration a_acc for t_acc seconds.
[[nodiscard]] inline LeaderProfile stop_and_go_profile(double a_dec = -1.0, double t_dec = 3.0, double a_acc = 1.0,
                                                       double t_acc = 3.0, double t_start = 5.0) {
  if (!(a_dec < 0.0) || !(a_acc > 0.0)) throw ConfigError("stop-and-go needs a_dec < 0 < a_acc");
  if (!(t_dec >= 0.0) || !(t_acc >= 0.0) || !(t_start >= 0.0)) throw ConfigError("durations must be non-negative");
  LeaderProfile p;
  p.kind = LeaderProfile::Kind::piecewise;
  if (t_dec > 0.0) p.segments.push_back({t_start, t_start + t_dec, a_dec});
  if (t_acc > 0.0) p.segments.push_back({t_start + t_dec, t_start + t_dec + t_acc, a_acc});
  return p;
}

[[nodiscard]] inline LeaderProfile sine_profile(double amplitude, double omega, double t_start = 0.0) {
  LeaderProfile p;
  p.kind = LeaderProfile::Kind::sine;
  p.amplitude = amplitude;
  p.omega = omega;
  p.t_start = t_start;
  return p;
}

/// Linear chirp from omega_lo to omega_hi with cosine-tapered ends.
[[nodiscard]] inline LeaderProfile chirp_profile(double amplitude, double omega_lo, double omega_hi,
                                                 double duration, double t_start = 0.0, double taper = 0.1) {
  LeaderProfile p;
  p.kind = LeaderProfile::Kind::chirp;
  p.amplitude = amplitude;
  p.omega_lo = omega_lo;
  p.omega_hi = omega_hi;
  p.duration = duration;
  p.t_start = t_start;
  p.taper = taper;
  return p;
}

/// Delays shorter than this are resolved inside a step instead of by the
/// dt <= theta / 10 rule.
inline constexpr double kMinResolvedDelay = 0.01;

struct PlatoonScenario {
  std::vector<VehicleSpec> vehicles;  ///< index 0 follows the leader
  LeaderProfile leader = stop_and_go_profile();
  double dt = 0.0;  ///< 0 selects default_step()
  double horizon = 120.0;

  [[nodiscard]] double default_step() const {
    double dt = 0.01;
    for (const auto& v : vehicles)
      if (v.params.theta > 0.0) dt = std::min(dt, std::max(v.params.theta / 20.0, 1e-3));
    return dt;
  }
  [[nodiscard]] double step() const { return dt > 0.0 ? dt : default_step(); }

  void validate() const {
    const double h = step();
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("time step must be positive");
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    for (const auto& v : vehicles) {
      v.validate();
      if (h > v.params.T / 10.0) throw ConfigError("time step too large for actuation lag T (need dt <= T/10)");
      if (v.params.theta >= kMinResolvedDelay && h > v.params.theta / 10.0)
        throw ConfigError("time step too large for delay theta (need dt <= theta/10)");
    }
    if (std::isfinite(leader.end()) && horizon < leader.end())
      throw ConfigError("horizon ends before the leader disturbance");
  }
};

/// Uniform-step history of one signal with derivative samples, read back by
/// cubic Hermite interpolation. Times before the first sample return the
/// first value (equilibrium history).
class DelayBuffer {
 public:
  DelayBuffer(double t0, double dt) : t0_(t0), dt_(dt) {}

  void push(double value, double derivative) {
    values_.push_back(value);
    derivs_.push_back(derivative);
  }

  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double last_time() const { return t0_ + dt_ * static_cast<double>(values_.size() - 1); }
  [[nodiscard]] double last_value() const { return values_.back(); }

  /// Value at t <= last_time().
  [[nodiscard]] double at(double t) const {
    if (values_.empty()) return 0.0;
    const double u = (t - t0_) / dt_;
    if (u <= 0.0) return values_.front();
    const auto last = values_.size() - 1;
    auto i = static_cast<std::size_t>(u);
    if (i >= last) return values_.back();
    const double s = u - static_cast<double>(i);
    const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    const double h10 = s * (1.0 - s) * (1.0 - s);
    const double h01 = s * s * (3.0 - 2.0 * s);
    const double h11 = s * s * (s - 1.0);
    return h00 * values_[i] + h10 * dt_ * derivs_[i] + h01 * values_[i + 1] + h11 * dt_ * derivs_[i + 1];
  }

  /// Value at t, where t may lie inside the step currently being integrated;
  /// there the signal is interpolated linearly towards the stage value.
  [[nodiscard]] double at(double t, double t_stage, double stage_value) const {
    const double tl = last_time();
    if (t <= tl || values_.empty()) return at(t);
    if (t_stage <= tl) return stage_value;
    const double s = (t - tl) / (t_stage - tl);
    return (1.0 - s) * values_.back() + s * stage_value;
  }

 private:
  double t0_, dt_;
  std::vector<double> values_, derivs_;
};

struct VehicleSeries {
  std::vector<double> sigma, dv, a;
  double l2_accel = 0.0;
  double peak_accel = 0.0;
  double min_sigma = 0.0;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> leader_accel;
  std::vector<VehicleSeries> vehicles;
  double leader_l2 = 0.0;
  double analysis_start = 0.0;        ///< L2 norms integrate over [analysis_start, horizon]
  double pre_disturbance_max = 0.0;   ///< max |state| in the 5 s before the disturbance
};

namespace detail {

/// Trapezoid rule of x^2 over samples with t >= t_from, returned as sqrt.
[[nodiscard]] inline double l2_norm(const std::vector<double>& t, const std::vector<double>& x, double t_from) {
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i - 1] < t_from - 1e-12) continue;
    acc += 0.5 * (t[i] - t[i - 1]) * (x[i - 1] * x[i - 1] + x[i] * x[i]);
  }
  return std::sqrt(acc);
}

}  // namespace detail

/// Fixed-step classical RK4 over the whole platoon. Leader values inside a
/// step are read as left limits so piecewise-constant profiles switching on
/// step boundaries keep full order.
[[nodiscard]] inline Trajectory simulate(const PlatoonScenario& sc) {
  sc.validate();
  const double dt = sc.step();
  const auto steps = static_cast<std::size_t>(std::llround(sc.horizon / dt));
  const std::size_t n = sc.vehicles.size();

  struct State {
    double sigma = 0.0, dv = 0.0, a = 0.0;
  };
  std::vector<State> x(n);
  std::vector<DelayBuffer> history(n, DelayBuffer(0.0, dt));

  // Leader jumps (and the same jumps seen through the first vehicle's delay)
  // split the step they fall in, so RK4 never straddles a discontinuity.
  std::vector<double> breaks = sc.leader.breakpoints();
  if (n > 0 && sc.vehicles[0].gains.k4 != 0.0 && sc.vehicles[0].params.theta > 0.0) {
    const auto base = breaks;
    for (double b : base) breaks.push_back(b + sc.vehicles[0].params.theta);
    std::sort(breaks.begin(), breaks.end());
  }

  // Leader value at t for a sub-step [a, b]: right limit at a, left limit at b.
  double sub_a = 0.0, sub_b = 0.0;
  auto leader_at = [&](double t, double shift) {
    const double lo = sub_a - shift, hi = sub_b - shift - (sub_b - sub_a) * 1e-9;
    return sc.leader.value(std::clamp(t, lo, hi));
  };

  Trajectory tr;
  tr.vehicles.resize(n);
  auto record = [&](double t) {
    tr.t.push_back(t);
    tr.leader_accel.push_back(sc.leader.value(t));
    for (std::size_t i = 0; i < n; ++i) {
      tr.vehicles[i].sigma.push_back(x[i].sigma);
      tr.vehicles[i].dv.push_back(x[i].dv);
      tr.vehicles[i].a.push_back(x[i].a);
    }
  };
  record(0.0);

  std::vector<State> k1(n), k2(n), k3(n), k4(n), tmp(n);
  // Derivative of the whole platoon at time t with state s. With `push` set,
  // every vehicle's (a, a') at t is appended to its history before the
  // followers read it.
  auto deriv = [&](double t, const std::vector<State>& s, std::vector<State>& out, bool push) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& v = sc.vehicles[i];
      const auto& p = v.params;
      const auto& g = v.gains;
      double pred_now, pred_delayed;
      if (i == 0) {
        pred_now = leader_at(t, 0.0);
        pred_delayed = leader_at(t - p.theta, p.theta);
      } else {
        pred_now = s[i - 1].a;
        pred_delayed = g.k4 != 0.0 ? history[i - 1].at(t - p.theta, t, s[i - 1].a) : 0.0;
      }
      const double u = g.k1 * s[i].sigma + g.k2 * s[i].dv + g.k3 * s[i].a + g.k4 * pred_delayed;
      out[i].sigma = s[i].dv - p.tau * s[i].a;
      out[i].dv = pred_now - s[i].a;
      out[i].a = (-s[i].a + p.K * u) / p.T;
      if (push) history[i].push(s[i].a, out[i].a);
    }
  };
  auto axpy = [&](const std::vector<State>& base, const std::vector<State>& d, double h) {
    for (std::size_t i = 0; i < n; ++i) {
      tmp[i].sigma = base[i].sigma + h * d[i].sigma;
      tmp[i].dv = base[i].dv + h * d[i].dv;
      tmp[i].a = base[i].a + h * d[i].a;
    }
    return tmp;
  };
  auto rk4 = [&](double a, double b, bool push) {
    sub_a = a;
    sub_b = b;
    const double h = b - a;
    deriv(a, x, k1, push);
    deriv(a + 0.5 * h, axpy(x, k1, 0.5 * h), k2, false);
    deriv(a + 0.5 * h, axpy(x, k2, 0.5 * h), k3, false);
    deriv(b, axpy(x, k3, h), k4, false);
    for (std::size_t i = 0; i < n; ++i) {
      x[i].sigma += h / 6.0 * (k1[i].sigma + 2.0 * k2[i].sigma + 2.0 * k3[i].sigma + k4[i].sigma);
      x[i].dv += h / 6.0 * (k1[i].dv + 2.0 * k2[i].dv + 2.0 * k3[i].dv + k4[i].dv);
      x[i].a += h / 6.0 * (k1[i].a + 2.0 * k2[i].a + 2.0 * k3[i].a + k4[i].a);
    }
  };

  auto next_break = breaks.begin();
  for (std::size_t step = 0; step < steps; ++step) {
    const double t_n = dt * static_cast<double>(step);
    const double t_e = dt * static_cast<double>(step + 1);
    const double margin = dt * 1e-9;
    while (next_break != breaks.end() && *next_break <= t_n + margin) ++next_break;
    double a = t_n;
    bool first = true;
    for (auto it = next_break; it != breaks.end() && *it < t_e - margin; ++it) {
      rk4(a, *it, first);
      first = false;
      a = *it;
    }
    rk4(a, t_e, first);
    record(t_e);
  }

  tr.analysis_start = std::min(sc.leader.onset(), sc.horizon);
  tr.leader_l2 = detail::l2_norm(tr.t, tr.leader_accel, tr.analysis_start);
  for (auto& vs : tr.vehicles) {
    vs.l2_accel = detail::l2_norm(tr.t, vs.a, tr.analysis_start);
    for (double a : vs.a) vs.peak_accel = std::max(vs.peak_accel, std::abs(a));
    vs.min_sigma = *std::min_element(vs.sigma.begin(), vs.sigma.end());
    for (std::size_t j = 0; j < tr.t.size(); ++j) {
      if (tr.t[j] >= tr.analysis_start) break;
      if (tr.t[j] < tr.analysis_start - 5.0) continue;
      tr.pre_disturbance_max =
          std::max({tr.pre_disturbance_max, std::abs(vs.sigma[j]), std::abs(vs.dv[j]), std::abs(vs.a[j])});
    }
  }
  return tr;
}

struct LinkRatio {
  std::size_t follower = 0;            ///< 1-based platoon index of the follower
  VehicleKind kind = VehicleKind::CAV; ///< follower kind
  std::optional<double> l2_ratio;      ///< empty when the upstream signal has no energy
  std::optional<double> peak_ratio;

  friend bool operator==(const LinkRatio&, const LinkRatio&) = default;
};

struct AmplificationReport {
  std::optional<double> leader_l2_ratio;  ///< ||a_1|| / ||a_0||
  std::vector<LinkRatio> links;           ///< vehicle i-1 -> i for i >= 2
  bool attenuating = true;                ///< every CAV link ratio <= 1 + 1e-2

  friend bool operator==(const AmplificationReport&, const AmplificationReport&) = default;
};

inline constexpr double kAttenuationTolerance = 1e-2;

[[nodiscard]] inline AmplificationReport amplification_report(const Trajectory& tr,
                                                              const std::vector<VehicleKind>& kinds) {
  AmplificationReport rep;
  auto ratio = [](double num, double den) -> std::optional<double> {
    if (!(den > 0.0)) return std::nullopt;
    return num / den;
  };
  auto check = [&](VehicleKind kind, const std::optional<double>& r) {
    if (kind == VehicleKind::CAV && r && *r > 1.0 + kAttenuationTolerance) rep.attenuating = false;
  };
  if (!tr.vehicles.empty()) {
    rep.leader_l2_ratio = ratio(tr.vehicles[0].l2_accel, tr.leader_l2);
    check(kinds.at(0), rep.leader_l2_ratio);
  }
  for (std::size_t i = 1; i < tr.vehicles.size(); ++i) {
    LinkRatio link;
    link.follower = i + 1;
    link.kind = kinds.at(i);
    link.l2_ratio = ratio(tr.vehicles[i].l2_accel, tr.vehicles[i - 1].l2_accel);
    link.peak_ratio = ratio(tr.vehicles[i].peak_accel, tr.vehicles[i - 1].peak_accel);
    check(link.kind, link.l2_ratio);
    rep.links.push_back(link);
  }
  return rep;
}

[[nodiscard]] inline AmplificationReport amplification_report(const Trajectory& tr, const PlatoonScenario& sc) {
  std::vector<VehicleKind> kinds;
  for (const auto& v : sc.vehicles) kinds.push_back(v.kind);
  return amplification_report(tr, kinds);
}

}  // namespace platoon
