#pragma once

/**
 * @file cli.hpp
 * @brief Commands of the `platoon` tool: synth, verify, sweep, pade-error and
 *        simulate.
 *
 * Every command returns a CommandResult holding its exit code and a JSON
 * document (plus CSV text for series outputs), so the commands can be driven
 * in-process. `run` adds argument parsing and file output on top.
 *
 * Exit codes: 0 feasible or success, 2 infeasible or failed synthesis,
 * 1 usage, parse or configuration error.
 */

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "platoon/errors.hpp"
#include "platoon/io.hpp"
#include "platoon/model.hpp"
#include "platoon/norms.hpp"
#include "platoon/pade.hpp"
#include "platoon/parallel.hpp"
#include "platoon/param.hpp"
#include "platoon/sim.hpp"
#include "platoon/synthesis.hpp"

namespace platoon {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;

struct CommandResult {
  int exit_code = kExitOk;
  json document;
  std::string csv;  ///< series output for --format csv; empty when unsupported
};

[[nodiscard]] inline json error_object(const std::string& kind, const std::string& message) {
  return {{"class", kind}, {"message", message}};
}

[[nodiscard]] inline json error_object(const Error& e) {
  json j = error_object(e.kind(), e.what());
  if (const auto* s1 = dynamic_cast<const Stage1Failed*>(&e)) j["best_norm"] = encode_real(s1->best_norm());
  if (const auto* nm = dynamic_cast<const NotInManifold*>(&e)) j["coordinate"] = nm->coordinate();
  return j;
}

[[nodiscard]] inline int exit_code_for(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) ? kExitUsage : kExitInfeasible;
}

/// Gains named by the config: inline `gains`, else `k_star` (or `gains`) of
/// the document at `gains_file`.
[[nodiscard]] inline std::optional<Gains> resolve_gains(const RunConfig& cfg) {
  if (cfg.gains) return cfg.gains;
  if (cfg.gains_file.empty()) return std::nullopt;
  const json doc = parse_json_text(read_text_file(cfg.gains_file), "'" + cfg.gains_file + "'");
  if (doc.contains("result") && doc["result"].contains("k_star")) return doc["result"]["k_star"].get<Gains>();
  if (doc.contains("gains")) return doc["gains"].get<Gains>();
  throw ConfigError("'" + cfg.gains_file + "' holds neither result.k_star nor gains");
}

// ---------------------------------------------------------------------------
// synth

[[nodiscard]] inline CommandResult cmd_synth(const RunConfig& cfg) {
  CommandResult out;
  out.document = {{"header", make_header("synth")}, {"config", run_config_to_json(cfg)}};
  try {
    const SynthesisResult res = synthesize(cfg.synth);
    out.document["result"] = res;
    if (res.feasible) {
      out.document["status"] = "feasible";
    } else {
      out.document["status"] = "infeasible";
      std::string why = !res.stability.hurwitz ? "design is not locally stable"
                        : !res.box_ok          ? "design leaves the gain box"
                                               : "exact global norm " + std::to_string(res.global_norm) +
                                                     " exceeds 1 + eps_ss";
      out.document["error"] = error_object(CertificationFailed(why));
      out.exit_code = kExitInfeasible;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out.document["status"] = "failed";
    out.document["error"] = error_object(e);
    out.exit_code = kExitInfeasible;
  }
  return out;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyReport {
  Gains gains{};
  StabilityReport stability{};
  bool box_ok = false;
  std::optional<NormPair> norms;  ///< exact norms, only for locally stable gains
  double eta = 0.0;
  std::optional<double> dc_curvature;  ///< empty when k1 = 0
  TaylorStringStability taylor{};
  std::string verdict;
  bool feasible = false;

  friend bool operator==(const VerifyReport&, const VerifyReport&) = default;
};

inline void to_json(json& j, const NormPair& n) {
  j = {{"banded_norm", encode_real(n.banded)},
       {"omega_band", encode_real(n.omega_band)},
       {"global_norm", encode_real(n.global)},
       {"omega_global", encode_real(n.omega_global)}};
}

inline void from_json(const json& j, NormPair& n) {
  n.banded = decode_real(j.at("banded_norm"));
  n.omega_band = decode_real(j.at("omega_band"));
  n.global = decode_real(j.at("global_norm"));
  n.omega_global = decode_real(j.at("omega_global"));
}

inline void to_json(json& j, const VerifyReport& r) {
  j = {{"gains", r.gains},
       {"stability", r.stability},
       {"box_ok", r.box_ok},
       {"norms", r.norms ? json(*r.norms) : json(nullptr)},
       {"eta", encode_real(r.eta)},
       {"dc_curvature", encode_optional(r.dc_curvature)},
       {"taylor", r.taylor},
       {"verdict", r.verdict},
       {"feasible", r.feasible}};
}

inline void from_json(const json& j, VerifyReport& r) {
  r.gains = j.at("gains").get<Gains>();
  r.stability = j.at("stability").get<StabilityReport>();
  r.box_ok = j.at("box_ok").get<bool>();
  if (j.at("norms").is_null()) r.norms.reset();
  else r.norms = j.at("norms").get<NormPair>();
  r.eta = decode_real(j.at("eta"));
  r.dc_curvature = decode_optional(j.at("dc_curvature"));
  r.taylor = j.at("taylor").get<TaylorStringStability>();
  r.verdict = j.at("verdict").get<std::string>();
  r.feasible = j.at("feasible").get<bool>();
}

[[nodiscard]] inline VerifyReport verify_gains(const SynthesisConfig& cfg, const Gains& k) {
  VerifyReport r;
  r.gains = k;
  r.stability = local_stability(cfg.params, k);
  r.box_ok = cfg.bounds.contains(k, 1e-12);
  r.eta = lemma1_eta(cfg.params, k);
  if (k.k1 != 0.0) r.dc_curvature = zero_frequency_curvature(cfg.params, k);
  r.taylor = taylor_string_stability(cfg.params, k);
  if (!r.stability.hurwitz) {
    r.verdict = "locally unstable";
    return r;
  }
  r.norms = exact_norms(cfg.params, k, cfg.omega1, cfg.omega2, cfg.peak);
  const bool string_stable = r.norms->global <= 1.0 + cfg.eps_ss;
  r.verdict = string_stable ? "string stable" : "string unstable";
  r.feasible = string_stable && r.box_ok;
  return r;
}

[[nodiscard]] inline CommandResult cmd_verify(const RunConfig& cfg) {
  cfg.synth.params.validate();
  if (!(cfg.synth.omega1 > 0.0) || !(cfg.synth.omega2 > cfg.synth.omega1))
    throw ConfigError("band requires 0 < omega1 < omega2");
  const auto k = resolve_gains(cfg);
  if (!k) throw ConfigError("verify needs 'gains' or 'gains_file' in the config");
  CommandResult out;
  const VerifyReport rep = verify_gains(cfg.synth, *k);
  out.document = {{"header", make_header("verify")}, {"config", run_config_to_json(cfg)}, {"report", rep}};
  out.exit_code = rep.feasible ? kExitOk : kExitInfeasible;
  return out;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepResult {
  std::vector<SweepAxis> axes;
  KappaVector center{};
  std::vector<double> values;  ///< row-major, first axis slowest
  KappaVector argmin{};
  double min_value = 0.0;

  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

inline void to_json(json& j, const SweepAxis& a) {
  j = {{"index", a.index}, {"lo", encode_real(a.lo)}, {"hi", encode_real(a.hi)}, {"count", a.count}};
}

inline void from_json(const json& j, SweepAxis& a) {
  a.index = j.at("index").get<int>();
  a.lo = decode_real(j.at("lo"));
  a.hi = decode_real(j.at("hi"));
  a.count = j.at("count").get<int>();
}

inline void to_json(json& j, const SweepResult& r) {
  json vals = json::array();
  for (double v : r.values) vals.push_back(encode_real(v));
  j = {{"axes", r.axes},
       {"center", r.center},
       {"values", vals},
       {"argmin", r.argmin},
       {"min_value", encode_real(r.min_value)}};
}

inline void from_json(const json& j, SweepResult& r) {
  r.axes = j.at("axes").get<std::vector<SweepAxis>>();
  r.center = j.at("center").get<KappaVector>();
  r.values.clear();
  for (const auto& v : j.at("values")) r.values.push_back(decode_real(v));
  r.argmin = j.at("argmin").get<KappaVector>();
  r.min_value = decode_real(j.at("min_value"));
}

[[nodiscard]] inline double axis_value(const SweepAxis& a, int i) {
  if (a.count == 1) return a.lo;
  return a.lo + (a.hi - a.lo) * static_cast<double>(i) / static_cast<double>(a.count - 1);
}

/// Branch objective over a grid of 1 to 3 kappa axes, the other coordinates
/// held at `center`.
[[nodiscard]] inline SweepResult sweep_grid(const SynthesisConfig& cfg, const std::vector<SweepAxis>& axes,
                                            const KappaVector& center) {
  if (axes.empty() || axes.size() > 3) throw ConfigError("sweep needs 1 to 3 axes");
  double total = 1.0;
  std::array<bool, 4> used{};
  for (const auto& a : axes) {
    if (a.index < 1 || a.index > 4) throw ConfigError("sweep axis index must be in 1..4");
    if (used[a.index - 1]) throw ConfigError("sweep axes must be distinct");
    used[a.index - 1] = true;
    if (a.count < 1) throw ConfigError("sweep axis count must be positive");
    if (!std::isfinite(a.lo) || !std::isfinite(a.hi) || a.lo > a.hi) throw ConfigError("sweep axis needs lo <= hi");
    total *= a.count;
  }
  if (total > kMaxSweepPoints) throw ConfigError("sweep grid too large (more than 1e7 points)");

  SweepResult r;
  r.axes = axes;
  r.center = center;
  const auto n = static_cast<std::size_t>(total);
  auto point = [&](std::size_t flat) {
    KappaVector k = center;
    for (std::size_t d = axes.size(); d-- > 0;) {
      const auto c = static_cast<std::size_t>(axes[d].count);
      k.v[static_cast<std::size_t>(axes[d].index - 1)] = axis_value(axes[d], static_cast<int>(flat % c));
      flat /= c;
    }
    return k;
  };
  r.values.resize(n);
  parallel_for(n, [&](std::size_t i) { r.values[i] = branch_objective(point(i), cfg); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (r.values[i] < r.values[best]) best = i;
  r.argmin = point(best);
  r.min_value = r.values[best];
  return r;
}

[[nodiscard]] inline std::string sweep_csv(const SweepResult& r) {
  std::string out;
  for (const auto& a : r.axes) out += "kappa_" + std::to_string(a.index) + ",";
  out += "h\n";
  std::vector<int> idx(r.axes.size(), 0);
  for (double v : r.values) {
    for (std::size_t d = 0; d < r.axes.size(); ++d) out += format_csv_real(axis_value(r.axes[d], idx[d])) + ",";
    out += format_csv_real(v) + "\n";
    for (std::size_t d = r.axes.size(); d-- > 0;) {
      if (++idx[d] < r.axes[d].count) break;
      idx[d] = 0;
    }
  }
  return out;
}

[[nodiscard]] inline CommandResult cmd_sweep(const RunConfig& cfg) {
  cfg.synth.validate();
  if (cfg.sweep_axes.empty()) throw ConfigError("sweep needs sweep_axes, sweep_lo, sweep_hi and sweep_count");
  const SweepResult r = sweep_grid(cfg.synth, cfg.sweep_axes, cfg.sweep_center);
  CommandResult out;
  out.document = {{"header", make_header("sweep")}, {"config", run_config_to_json(cfg)}, {"sweep", r}};
  out.csv = sweep_csv(r);
  return out;
}

// ---------------------------------------------------------------------------
// pade-error

struct PadeErrorReport {
  Gains gains{};
  double theta = 0.0;
  int order = kDefaultPadeOrder;
  std::vector<double> omega, pade_percent, taylor_percent;
  double max_abs_pade = 0.0;
  double max_abs_taylor = 0.0;

  friend bool operator==(const PadeErrorReport&, const PadeErrorReport&) = default;
};

inline void to_json(json& j, const PadeErrorReport& r) {
  auto arr = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(encode_real(x));
    return a;
  };
  j = {{"gains", r.gains},
       {"theta", encode_real(r.theta)},
       {"order", r.order},
       {"omega", arr(r.omega)},
       {"pade_percent", arr(r.pade_percent)},
       {"taylor_percent", arr(r.taylor_percent)},
       {"max_abs_pade", encode_real(r.max_abs_pade)},
       {"max_abs_taylor", encode_real(r.max_abs_taylor)}};
}

inline void from_json(const json& j, PadeErrorReport& r) {
  auto arr = [](const json& a) {
    std::vector<double> v;
    for (const auto& x : a) v.push_back(decode_real(x));
    return v;
  };
  r.gains = j.at("gains").get<Gains>();
  r.theta = decode_real(j.at("theta"));
  r.order = j.at("order").get<int>();
  r.omega = arr(j.at("omega"));
  r.pade_percent = arr(j.at("pade_percent"));
  r.taylor_percent = arr(j.at("taylor_percent"));
  r.max_abs_pade = decode_real(j.at("max_abs_pade"));
  r.max_abs_taylor = decode_real(j.at("max_abs_taylor"));
}

[[nodiscard]] inline PadeErrorReport pade_error_report(const VehicleParams& p, const Gains& k, int order,
                                                       double lo, double hi, int npoints) {
  if (npoints < 2) throw ConfigError("pade_points must be at least 2");
  if (!(lo > 0.0)) throw ConfigError("pade_lo must be positive");
  const DelayTF tf = DelayTF::from(p, k);
  const RationalTF approx = approx_tf(tf, order);
  auto exact = [&](double w) { return exact_magnitude(tf, w); };
  auto pade = [&](double w) { return rational_magnitude(approx, w); };
  auto taylor = [&](double w) { return taylor_magnitude(tf, w); };
  const auto n = static_cast<std::size_t>(npoints);
  const auto pp = relative_error_profile(exact, pade, lo, hi, n);
  const auto tp = relative_error_profile(exact, taylor, lo, hi, n);
  PadeErrorReport r;
  r.gains = k;
  r.theta = p.theta;
  r.order = order;
  for (std::size_t i = 0; i < n; ++i) {
    r.omega.push_back(pp[i].first);
    r.pade_percent.push_back(pp[i].second);
    r.taylor_percent.push_back(tp[i].second);
  }
  r.max_abs_pade = max_abs_percent(pp);
  r.max_abs_taylor = max_abs_percent(tp);
  return r;
}

[[nodiscard]] inline CommandResult cmd_pade_error(const RunConfig& cfg) {
  cfg.synth.params.validate();
  const Gains k = resolve_gains(cfg).value_or(kReferenceGains);
  const PadeErrorReport r =
      pade_error_report(cfg.synth.params, k, cfg.synth.pade_order, cfg.pade_lo, cfg.pade_hi, cfg.pade_points);
  CommandResult out;
  out.document = {{"header", make_header("pade-error")}, {"config", run_config_to_json(cfg)}, {"errors", r}};
  out.csv = "omega,pade_percent,taylor_percent\n";
  for (std::size_t i = 0; i < r.omega.size(); ++i)
    out.csv += format_csv_real(r.omega[i]) + "," + format_csv_real(r.pade_percent[i]) + "," +
               format_csv_real(r.taylor_percent[i]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// simulate

struct VehicleMetrics {
  VehicleKind kind = VehicleKind::CAV;
  double l2_accel = 0.0;
  double peak_accel = 0.0;
  double min_sigma = 0.0;

  friend bool operator==(const VehicleMetrics&, const VehicleMetrics&) = default;
};

struct SimulationSummary {
  double dt = 0.0;
  double analysis_start = 0.0;
  double leader_l2 = 0.0;
  double pre_disturbance_max = 0.0;
  std::vector<VehicleMetrics> vehicles;
  AmplificationReport amplification{};

  friend bool operator==(const SimulationSummary&, const SimulationSummary&) = default;
};

inline void to_json(json& j, const VehicleMetrics& m) {
  j = {{"kind", kind_name(m.kind)},
       {"l2_accel", encode_real(m.l2_accel)},
       {"peak_accel", encode_real(m.peak_accel)},
       {"min_sigma", encode_real(m.min_sigma)}};
}

inline void from_json(const json& j, VehicleMetrics& m) {
  m.kind = parse_kind(j.at("kind").get<std::string>());
  m.l2_accel = decode_real(j.at("l2_accel"));
  m.peak_accel = decode_real(j.at("peak_accel"));
  m.min_sigma = decode_real(j.at("min_sigma"));
}

inline void to_json(json& j, const SimulationSummary& s) {
  j = {{"dt", encode_real(s.dt)},
       {"analysis_start", encode_real(s.analysis_start)},
       {"leader_l2", encode_real(s.leader_l2)},
       {"pre_disturbance_max", encode_real(s.pre_disturbance_max)},
       {"vehicles", s.vehicles},
       {"amplification", s.amplification}};
}

inline void from_json(const json& j, SimulationSummary& s) {
  s.dt = decode_real(j.at("dt"));
  s.analysis_start = decode_real(j.at("analysis_start"));
  s.leader_l2 = decode_real(j.at("leader_l2"));
  s.pre_disturbance_max = decode_real(j.at("pre_disturbance_max"));
  s.vehicles = j.at("vehicles").get<std::vector<VehicleMetrics>>();
  s.amplification = j.at("amplification").get<AmplificationReport>();
}

[[nodiscard]] inline SimulationSummary summarize(const PlatoonScenario& sc, const Trajectory& tr) {
  SimulationSummary s;
  s.dt = sc.step();
  s.analysis_start = tr.analysis_start;
  s.leader_l2 = tr.leader_l2;
  s.pre_disturbance_max = tr.pre_disturbance_max;
  for (std::size_t i = 0; i < tr.vehicles.size(); ++i)
    s.vehicles.push_back({sc.vehicles[i].kind, tr.vehicles[i].l2_accel, tr.vehicles[i].peak_accel,
                          tr.vehicles[i].min_sigma});
  s.amplification = amplification_report(tr, sc);
  return s;
}

[[nodiscard]] inline json trajectory_json(const Trajectory& tr) {
  auto arr = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(encode_real(x));
    return a;
  };
  json j = {{"t", arr(tr.t)}, {"a_0", arr(tr.leader_accel)}};
  for (std::size_t i = 0; i < tr.vehicles.size(); ++i) {
    const auto n = std::to_string(i + 1);
    j["sigma_" + n] = arr(tr.vehicles[i].sigma);
    j["dv_" + n] = arr(tr.vehicles[i].dv);
    j["a_" + n] = arr(tr.vehicles[i].a);
  }
  return j;
}

[[nodiscard]] inline CommandResult cmd_simulate(const RunConfig& cfg) {
  const PlatoonScenario sc = cfg.scenario();
  const Trajectory tr = simulate(sc);
  CommandResult out;
  out.document = {{"header", make_header("simulate")},
                  {"config", run_config_to_json(cfg)},
                  {"summary", summarize(sc, tr)},
                  {"series", trajectory_json(tr)}};
  out.csv = trajectory_csv(tr);
  return out;
}

// ---------------------------------------------------------------------------
// Entry point

/// The document without its header timestamp; equal across reruns with the
/// same config and seed.
[[nodiscard]] inline json without_timestamp(json doc) {
  if (doc.contains("header")) doc["header"].erase("timestamp");
  return doc;
}

[[nodiscard]] inline std::string render_json(const json& doc) { return doc.dump(2) + "\n"; }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

/// Parses argv, runs one command and writes its output. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"H-infinity controller synthesis and simulation for mixed vehicle platoons", "platoon"};
  app.require_subcommand(1);
  std::string config_path, out_path, format = "json";
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "random seed (overrides the config)");
    sub->add_option("--out", out_path, "output path (default: stdout)");
    sub->add_option("--format", format, "output format")->check(CLI::IsMember({"json", "csv"}));
  };
  struct Entry {
    const char* name;
    const char* help;
    CommandResult (*fn)(const RunConfig&);
    bool csv;
  };
  const Entry entries[] = {
      {"synth", "two-stage controller synthesis", &cmd_synth, false},
      {"verify", "stability and norm report for given gains", &cmd_verify, false},
      {"sweep", "branch objective over a kappa grid", &cmd_sweep, true},
      {"pade-error", "Pade and Taylor magnitude error series", &cmd_pade_error, true},
      {"simulate", "time-domain platoon simulation", &cmd_simulate, true},
  };
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    subs.push_back(app.add_subcommand(e.name, e.help));
    add_common(subs.back());
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::size_t which = 0;
  while (!subs[which]->parsed()) ++which;
  const Entry& entry = entries[which];
  const bool csv = format == "csv";
  if (csv && !entry.csv) {
    err << "error: ConfigError: --format csv is not available for " << entry.name << "\n";
    return kExitUsage;
  }

  auto emit = [&](const std::string& text) {
    if (out_path.empty()) out << text;
    else write_text(out_path, text);
  };

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.synth.seed = *seed;
    const CommandResult res = entry.fn(cfg);
    if (csv) {
      emit(res.csv);
      if (!out_path.empty()) write_text(out_path + ".report.json", render_json(res.document));
    } else {
      emit(render_json(res.document));
    }
    if (res.document.contains("error")) {
      const auto& e = res.document["error"];
      err << "error: " << e["class"].get<std::string>() << ": " << e["message"].get<std::string>() << "\n";
    }
    return res.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << e.what() << "\n";
    const json doc = {{"header", make_header(entry.name)}, {"status", "failed"}, {"error", error_object(e)}};
    try {
      emit(render_json(doc));
    } catch (const Error&) {
    }
    return exit_code_for(e);
  }
}

}  // namespace platoon
