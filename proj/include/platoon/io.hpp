#pragma once

/**
 * @file io.hpp
 * @brief JSON encoding of configs and results, CSV encoding of time series.
 *
 * Non-finite reals are written as the strings "inf", "-inf" and "nan" so
 * every document stays valid JSON and re-parses to the same values.
 */

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"
#include "platoon/norms.hpp"
#include "platoon/optimize.hpp"
#include "platoon/param.hpp"
#include "platoon/sim.hpp"
#include "platoon/synthesis.hpp"

namespace platoon {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Scalars and small vectors

[[nodiscard]] inline json encode_real(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0.0 ? "inf" : "-inf";
}

[[nodiscard]] inline double decode_real(const json& j, const std::string& what = "value") {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError(what + " must be a number");
}

[[nodiscard]] inline std::array<double, 4> decode_array4(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(what + " must be an array of 4 numbers");
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = decode_real(j[i], what);
  return out;
}

[[nodiscard]] inline json encode_array4(const std::array<double, 4>& a) {
  json j = json::array();
  for (double v : a) j.push_back(encode_real(v));
  return j;
}

inline void to_json(json& j, const Gains& k) { j = encode_array4(k.as_array()); }
inline void from_json(const json& j, Gains& k) { k = Gains::from_array(decode_array4(j, "gains")); }
inline void to_json(json& j, const KappaVector& k) { j = encode_array4(k.v); }
inline void from_json(const json& j, KappaVector& k) { k.v = decode_array4(j, "kappa"); }
inline void to_json(json& j, const MuVector& m) { j = encode_array4(m.v); }
inline void from_json(const json& j, MuVector& m) { m.v = decode_array4(j, "mu"); }

inline void to_json(json& j, const StabilityReport& s) {
  json ev = json::array();
  for (const auto& e : s.eigenvalues) ev.push_back({encode_real(e.real()), encode_real(e.imag())});
  j = {{"margins", encode_array4(s.margins)}, {"hurwitz", s.hurwitz}, {"eigenvalues", ev}};
}

inline void from_json(const json& j, StabilityReport& s) {
  s.margins = decode_array4(j.at("margins"), "margins");
  s.hurwitz = j.at("hurwitz").get<bool>();
  const json& ev = j.at("eigenvalues");
  if (!ev.is_array() || ev.size() != 3) throw ConfigError("eigenvalues must hold 3 entries");
  for (std::size_t i = 0; i < 3; ++i)
    s.eigenvalues[i] = {decode_real(ev[i].at(0), "eigenvalue"), decode_real(ev[i].at(1), "eigenvalue")};
}

inline void to_json(json& j, const TaylorStringStability& t) {
  j = {{"p", encode_real(t.p)},
       {"q", encode_real(t.q)},
       {"r", encode_real(t.r)},
       {"case1_ok", t.case1_ok},
       {"case2_ok", t.case2_ok}};
}

inline void from_json(const json& j, TaylorStringStability& t) {
  t.p = decode_real(j.at("p"));
  t.q = decode_real(j.at("q"));
  t.r = decode_real(j.at("r"));
  t.case1_ok = j.at("case1_ok").get<bool>();
  t.case2_ok = j.at("case2_ok").get<bool>();
}

inline void to_json(json& j, const SynthesisDiagnostics& d) {
  j = {{"stage1_starts", d.stage1_starts},
       {"stage1_evaluations", d.stage1_evaluations},
       {"stage1_objective", encode_real(d.stage1_objective)},
       {"stage2_iterations", d.stage2_iterations},
       {"stage2_evaluations", d.stage2_evaluations},
       {"stage2_budget_exhausted", d.stage2_budget_exhausted},
       {"surrogate_banded", encode_real(d.surrogate_banded)},
       {"surrogate_start", encode_real(d.surrogate_start)}};
}

inline void from_json(const json& j, SynthesisDiagnostics& d) {
  d.stage1_starts = j.at("stage1_starts").get<int>();
  d.stage1_evaluations = j.at("stage1_evaluations").get<std::size_t>();
  d.stage1_objective = decode_real(j.at("stage1_objective"));
  d.stage2_iterations = j.at("stage2_iterations").get<int>();
  d.stage2_evaluations = j.at("stage2_evaluations").get<std::size_t>();
  d.stage2_budget_exhausted = j.at("stage2_budget_exhausted").get<bool>();
  d.surrogate_banded = decode_real(j.at("surrogate_banded"));
  d.surrogate_start = decode_real(j.at("surrogate_start"));
}

inline void to_json(json& j, const SynthesisResult& r) {
  j = {{"k_star", r.k_star},
       {"kappa_star", r.kappa_star},
       {"kappa0", r.kappa0},
       {"k0", r.k0},
       {"mu0", r.mu0 ? json(*r.mu0) : json(nullptr)},
       {"banded_norm", encode_real(r.gamma)},
       {"global_norm", encode_real(r.global_norm)},
       {"stability", r.stability},
       {"box_ok", r.box_ok},
       {"feasible", r.feasible},
       {"diagnostics", r.diagnostics}};
}

inline void from_json(const json& j, SynthesisResult& r) {
  r.k_star = j.at("k_star").get<Gains>();
  r.kappa_star = j.at("kappa_star").get<KappaVector>();
  r.kappa0 = j.at("kappa0").get<KappaVector>();
  r.k0 = j.at("k0").get<Gains>();
  if (j.at("mu0").is_null()) r.mu0.reset();
  else r.mu0 = j.at("mu0").get<MuVector>();
  r.gamma = decode_real(j.at("banded_norm"));
  r.global_norm = decode_real(j.at("global_norm"));
  r.stability = j.at("stability").get<StabilityReport>();
  r.box_ok = j.at("box_ok").get<bool>();
  r.feasible = j.at("feasible").get<bool>();
  r.diagnostics = j.at("diagnostics").get<SynthesisDiagnostics>();
}

[[nodiscard]] inline json encode_optional(const std::optional<double>& x) {
  return x ? encode_real(*x) : json(nullptr);
}
[[nodiscard]] inline std::optional<double> decode_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return decode_real(j);
}

[[nodiscard]] inline const char* kind_name(VehicleKind k) { return k == VehicleKind::CAV ? "CAV" : "HDV"; }

[[nodiscard]] inline VehicleKind parse_kind(const std::string& s) {
  if (s == "CAV" || s == "cav") return VehicleKind::CAV;
  if (s == "HDV" || s == "hdv") return VehicleKind::HDV;
  throw ConfigError("unknown vehicle kind '" + s + "' (expected CAV or HDV)");
}

inline void to_json(json& j, const LinkRatio& l) {
  j = {{"follower", l.follower},
       {"kind", kind_name(l.kind)},
       {"l2_ratio", encode_optional(l.l2_ratio)},
       {"peak_ratio", encode_optional(l.peak_ratio)}};
}

inline void from_json(const json& j, LinkRatio& l) {
  l.follower = j.at("follower").get<std::size_t>();
  l.kind = parse_kind(j.at("kind").get<std::string>());
  l.l2_ratio = decode_optional(j.at("l2_ratio"));
  l.peak_ratio = decode_optional(j.at("peak_ratio"));
}

inline void to_json(json& j, const AmplificationReport& r) {
  j = {{"leader_l2_ratio", encode_optional(r.leader_l2_ratio)}, {"links", r.links}, {"attenuating", r.attenuating}};
}

inline void from_json(const json& j, AmplificationReport& r) {
  r.leader_l2_ratio = decode_optional(j.at("leader_l2_ratio"));
  r.links = j.at("links").get<std::vector<LinkRatio>>();
  r.attenuating = j.at("attenuating").get<bool>();
}

// ---------------------------------------------------------------------------
// Run configuration: one flat JSON object shared by every command.

/// Default sweep center and simulated CAV design (Case 1 optimum).
inline constexpr KappaVector kReferenceKappa{{-0.1516, -0.0237, 1.7065, -0.7647}};
inline constexpr Gains kReferenceGains{0.4212, 0.4775, -1.0078, 1.3197};

struct SweepAxis {
  int index = 1;  ///< 1-based kappa coordinate
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  friend bool operator==(const SweepAxis&, const SweepAxis&) = default;
};

inline constexpr double kMaxSweepPoints = 1e7;

struct RunConfig {
  SynthesisConfig synth{};

  // verify, pade-error
  std::optional<Gains> gains;
  std::string gains_file;

  // sweep
  std::vector<SweepAxis> sweep_axes;
  KappaVector sweep_center = kReferenceKappa;

  // pade-error
  double pade_lo = 0.01;
  double pade_hi = 5.01;
  int pade_points = 501;

  // simulate
  std::vector<VehicleKind> vehicles{VehicleKind::HDV, VehicleKind::CAV, VehicleKind::HDV};
  Gains cav_gains = kReferenceGains;
  Gains hdv_gains = default_hdv_gains();
  std::string profile = "stop_and_go";
  double a_dec = -1.0, t_dec = 3.0, a_acc = 1.0, t_acc = 3.0, t_start = 5.0;
  double amplitude = 1.0, omega = 1.0, omega_lo = 0.5, omega_hi = 2.5, duration = 200.0, taper = 0.1;
  double dt = 0.0;
  double horizon = 120.0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  [[nodiscard]] LeaderProfile leader() const {
    if (profile == "stop_and_go") return stop_and_go_profile(a_dec, t_dec, a_acc, t_acc, t_start);
    if (profile == "sine") return sine_profile(amplitude, omega, t_start);
    if (profile == "chirp") return chirp_profile(amplitude, omega_lo, omega_hi, duration, t_start, taper);
    throw ConfigError("unknown profile '" + profile + "' (expected stop_and_go, sine or chirp)");
  }

  [[nodiscard]] PlatoonScenario scenario() const {
    PlatoonScenario sc;
    for (VehicleKind k : vehicles)
      sc.vehicles.push_back(k == VehicleKind::CAV ? VehicleSpec::cav(synth.params, cav_gains)
                                                  : VehicleSpec::hdv(synth.params, hdv_gains));
    sc.leader = leader();
    sc.dt = dt;
    sc.horizon = horizon;
    return sc;
  }
};

namespace detail {

template <class T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

inline int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return get_as<int>(j, key);
}

inline std::vector<double> get_reals(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config key '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(decode_real(v, key));
  return out;
}

inline std::vector<int> get_ints(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config key '" + key + "' must be an array");
  std::vector<int> out;
  for (const auto& v : j) out.push_back(get_int(v, key));
  return out;
}

}  // namespace detail

/// Parses a flat config object. Unknown keys are rejected so typos surface.
[[nodiscard]] inline RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  auto& s = c.synth;
  auto real = [](double& dst) { return [&dst](const json& v, const std::string& k) { dst = decode_real(v, k); }; };
  auto integer = [](int& dst) { return [&dst](const json& v, const std::string& k) { dst = detail::get_int(v, k); }; };

  std::vector<int> axes_idx, axes_count;
  std::vector<double> axes_lo, axes_hi;

  const std::map<std::string, std::function<void(const json&, const std::string&)>> handlers{
      {"tau", real(s.params.tau)},
      {"T", real(s.params.T)},
      {"K", real(s.params.K)},
      {"theta", real(s.params.theta)},
      {"omega1", real(s.omega1)},
      {"omega2", real(s.omega2)},
      {"alpha", real(s.alpha)},
      {"zeta", real(s.zeta)},
      {"nu", real(s.nu)},
      {"epsilon", real(s.epsilon)},
      {"pade_order", integer(s.pade_order)},
      {"eps_ss", real(s.eps_ss)},
      {"box_scale", [](const json&, const std::string&) {}},  // applied first, below
      {"box_lower", [&s](const json& v, const std::string& k) { s.bounds.lower = decode_array4(v, k); }},
      {"box_upper", [&s](const json& v, const std::string& k) { s.bounds.upper = decode_array4(v, k); }},
      {"stage1_mode",
       [&s](const json& v, const std::string& k) {
         const auto m = detail::get_as<std::string>(v, k);
         if (m == "optimize") s.stage1_mode = Stage1Mode::optimize;
         else if (m == "sample") s.stage1_mode = Stage1Mode::sample;
         else throw ConfigError("stage1_mode must be 'optimize' or 'sample'");
       }},
      {"stage1_starts", integer(s.stage1_starts)},
      {"sample_count", integer(s.sample_count)},
      {"kappa_max", real(s.kappa_max)},
      {"seed",
       [&s](const json& v, const std::string& k) {
         if (!v.is_number_unsigned()) throw ConfigError("config key '" + k + "' must be a non-negative integer");
         s.seed = v.get<std::uint64_t>();
       }},
      {"nm_max_iters", integer(s.optimizer.max_iters)},
      {"nm_restarts", integer(s.optimizer.restarts)},
      {"nm_x_tol", real(s.optimizer.x_tol)},
      {"nm_f_tol", real(s.optimizer.f_tol)},
      {"nm_reflection", real(s.optimizer.reflection)},
      {"nm_expansion", real(s.optimizer.expansion)},
      {"nm_contraction", real(s.optimizer.contraction)},
      {"nm_shrink", real(s.optimizer.shrink)},
      {"nm_step_floor", real(s.optimizer.step_floor)},
      {"nm_step_scale", real(s.optimizer.step_scale)},
      {"grid_points",
       [&s](const json& v, const std::string& k) {
         const int n = detail::get_int(v, k);
         if (n < 8) throw ConfigError("grid_points must be at least 8");
         s.peak.grid_points = static_cast<std::size_t>(n);
       }},
      {"refine_rel_width", real(s.peak.refine_rel_width)},
      {"gains", [&c](const json& v, const std::string& k) { c.gains = Gains::from_array(decode_array4(v, k)); }},
      {"gains_file", [&c](const json& v, const std::string& k) { c.gains_file = detail::get_as<std::string>(v, k); }},
      {"sweep_axes", [&](const json& v, const std::string& k) { axes_idx = detail::get_ints(v, k); }},
      {"sweep_lo", [&](const json& v, const std::string& k) { axes_lo = detail::get_reals(v, k); }},
      {"sweep_hi", [&](const json& v, const std::string& k) { axes_hi = detail::get_reals(v, k); }},
      {"sweep_count", [&](const json& v, const std::string& k) { axes_count = detail::get_ints(v, k); }},
      {"sweep_center", [&c](const json& v, const std::string& k) { c.sweep_center.v = decode_array4(v, k); }},
      {"pade_lo", real(c.pade_lo)},
      {"pade_hi", real(c.pade_hi)},
      {"pade_points", integer(c.pade_points)},
      {"vehicles",
       [&c](const json& v, const std::string& k) {
         if (!v.is_array()) throw ConfigError("config key '" + k + "' must be an array");
         c.vehicles.clear();
         for (const auto& e : v) c.vehicles.push_back(parse_kind(detail::get_as<std::string>(e, k)));
       }},
      {"cav_gains", [&c](const json& v, const std::string& k) { c.cav_gains = Gains::from_array(decode_array4(v, k)); }},
      {"hdv_gains", [&c](const json& v, const std::string& k) { c.hdv_gains = Gains::from_array(decode_array4(v, k)); }},
      {"profile", [&c](const json& v, const std::string& k) { c.profile = detail::get_as<std::string>(v, k); }},
      {"a_dec", real(c.a_dec)},
      {"t_dec", real(c.t_dec)},
      {"a_acc", real(c.a_acc)},
      {"t_acc", real(c.t_acc)},
      {"t_start", real(c.t_start)},
      {"amplitude", real(c.amplitude)},
      {"omega", real(c.omega)},
      {"omega_lo", real(c.omega_lo)},
      {"omega_hi", real(c.omega_hi)},
      {"duration", real(c.duration)},
      {"taper", real(c.taper)},
      {"dt", real(c.dt)},
      {"horizon", real(c.horizon)},
  };

  if (j.contains("box_scale")) s.bounds = BoxBounds::symmetric(decode_real(j.at("box_scale"), "box_scale"));
  for (const auto& [key, value] : j.items()) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(value, key);
  }

  const std::size_t naxes = axes_idx.size();
  if (axes_lo.size() != naxes || axes_hi.size() != naxes || axes_count.size() != naxes)
    throw ConfigError("sweep_axes, sweep_lo, sweep_hi and sweep_count must have equal length");
  for (std::size_t i = 0; i < naxes; ++i) c.sweep_axes.push_back({axes_idx[i], axes_lo[i], axes_hi[i], axes_count[i]});
  return c;
}

/// Inverse of parse_run_config: emits every key with its effective value.
[[nodiscard]] inline json run_config_to_json(const RunConfig& c) {
  const auto& s = c.synth;
  json j = {
      {"tau", encode_real(s.params.tau)},
      {"T", encode_real(s.params.T)},
      {"K", encode_real(s.params.K)},
      {"theta", encode_real(s.params.theta)},
      {"omega1", encode_real(s.omega1)},
      {"omega2", encode_real(s.omega2)},
      {"alpha", encode_real(s.alpha)},
      {"zeta", encode_real(s.zeta)},
      {"nu", encode_real(s.nu)},
      {"epsilon", encode_real(s.epsilon)},
      {"pade_order", s.pade_order},
      {"eps_ss", encode_real(s.eps_ss)},
      {"box_lower", encode_array4(s.bounds.lower)},
      {"box_upper", encode_array4(s.bounds.upper)},
      {"stage1_mode", s.stage1_mode == Stage1Mode::optimize ? "optimize" : "sample"},
      {"stage1_starts", s.stage1_starts},
      {"sample_count", s.sample_count},
      {"kappa_max", encode_real(s.kappa_max)},
      {"seed", s.seed},
      {"nm_max_iters", s.optimizer.max_iters},
      {"nm_restarts", s.optimizer.restarts},
      {"nm_x_tol", encode_real(s.optimizer.x_tol)},
      {"nm_f_tol", encode_real(s.optimizer.f_tol)},
      {"nm_reflection", encode_real(s.optimizer.reflection)},
      {"nm_expansion", encode_real(s.optimizer.expansion)},
      {"nm_contraction", encode_real(s.optimizer.contraction)},
      {"nm_shrink", encode_real(s.optimizer.shrink)},
      {"nm_step_floor", encode_real(s.optimizer.step_floor)},
      {"nm_step_scale", encode_real(s.optimizer.step_scale)},
      {"grid_points", s.peak.grid_points},
      {"refine_rel_width", encode_real(s.peak.refine_rel_width)},
      {"sweep_center", c.sweep_center},
      {"pade_lo", encode_real(c.pade_lo)},
      {"pade_hi", encode_real(c.pade_hi)},
      {"pade_points", c.pade_points},
      {"cav_gains", c.cav_gains},
      {"hdv_gains", c.hdv_gains},
      {"profile", c.profile},
      {"a_dec", encode_real(c.a_dec)},
      {"t_dec", encode_real(c.t_dec)},
      {"a_acc", encode_real(c.a_acc)},
      {"t_acc", encode_real(c.t_acc)},
      {"t_start", encode_real(c.t_start)},
      {"amplitude", encode_real(c.amplitude)},
      {"omega", encode_real(c.omega)},
      {"omega_lo", encode_real(c.omega_lo)},
      {"omega_hi", encode_real(c.omega_hi)},
      {"duration", encode_real(c.duration)},
      {"taper", encode_real(c.taper)},
      {"dt", encode_real(c.dt)},
      {"horizon", encode_real(c.horizon)},
  };
  if (c.gains) j["gains"] = *c.gains;
  if (!c.gains_file.empty()) j["gains_file"] = c.gains_file;
  json kinds = json::array();
  for (VehicleKind k : c.vehicles) kinds.push_back(kind_name(k));
  j["vehicles"] = kinds;
  json idx = json::array(), lo = json::array(), hi = json::array(), cnt = json::array();
  for (const auto& a : c.sweep_axes) {
    idx.push_back(a.index);
    lo.push_back(encode_real(a.lo));
    hi.push_back(encode_real(a.hi));
    cnt.push_back(a.count);
  }
  j["sweep_axes"] = idx;
  j["sweep_lo"] = lo;
  j["sweep_hi"] = hi;
  j["sweep_count"] = cnt;
  return j;
}

[[nodiscard]] inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[nodiscard]] inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + origin + ": " + e.what());
  }
}

[[nodiscard]] inline RunConfig load_run_config(const std::string& path) {
  return parse_run_config(parse_json_text(read_text_file(path), "'" + path + "'"));
}

// ---------------------------------------------------------------------------
// Document header and CSV

/// UTC time as ISO-8601. The only nondeterministic field of any document.
[[nodiscard]] inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline constexpr const char* kToolVersion = "0.1.0";

[[nodiscard]] inline json make_header(const std::string& command) {
  return {{"tool", "platoon"}, {"version", kToolVersion}, {"command", command}, {"timestamp", utc_timestamp()}};
}

[[nodiscard]] inline std::string format_csv_real(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

/// Columns t, then sigma_i, dv_i, a_i per vehicle (1-based).
[[nodiscard]] inline std::string trajectory_csv(const Trajectory& tr) {
  std::string out = "t";
  for (std::size_t i = 1; i <= tr.vehicles.size(); ++i) {
    const auto n = std::to_string(i);
    out += ",sigma_" + n + ",dv_" + n + ",a_" + n;
  }
  out += '\n';
  for (std::size_t r = 0; r < tr.t.size(); ++r) {
    out += format_csv_real(tr.t[r]);
    for (const auto& v : tr.vehicles) {
      out += ',' + format_csv_real(v.sigma[r]);
      out += ',' + format_csv_real(v.dv[r]);
      out += ',' + format_csv_real(v.a[r]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace platoon
