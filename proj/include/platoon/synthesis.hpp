#pragma once

/**
 * @file synthesis.hpp
 * @brief Two-stage banded H-infinity synthesis.
 *
 * Stage 1 finds a string-stable starting point: either by minimizing the
 * global norm of the Pade surrogate over the box-only mu chart and extracting
 * kappa from the resulting gains, or by sampling kappa directly. Stage 2
 * minimizes the branch objective h(kappa) (banded norm when the surrogate is
 * string stable, alpha otherwise) from that point. The final gains are
 * certified against the exact delay magnitude, never the surrogate alone.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/model.hpp"
#include "platoon/norms.hpp"
#include "platoon/optimize.hpp"
#include "platoon/pade.hpp"
#include "platoon/parallel.hpp"
#include "platoon/param.hpp"

namespace platoon {

enum class Stage1Mode { optimize, sample };

inline constexpr double kDefaultStringSlack = 1e-3;

struct SynthesisConfig {
  VehicleParams params{};
  BoxBounds bounds = BoxBounds::symmetric(1.32);
  double omega1 = 0.5;
  double omega2 = 2.5;
  double alpha = 1.05;
  double zeta = kDefaultZeta;
  double nu = kDefaultNu;
  double epsilon = kDefaultEpsilon;
  int pade_order = kDefaultPadeOrder;
  double eps_ss = kDefaultStringSlack;  ///< slack on ||F||_inf <= 1
  Stage1Mode stage1_mode = Stage1Mode::optimize;
  int stage1_starts = 64;
  int sample_count = 10000;
  double kappa_max = 3.0;
  std::uint64_t seed = 0;
  OptimizerOptions optimizer{};
  PeakOptions peak{};

  friend bool operator==(const SynthesisConfig&, const SynthesisConfig&) = default;

  void validate() const {
    params.validate();
    if (!(omega1 > 0.0) || !(omega2 > omega1)) throw ConfigError("band requires 0 < omega1 < omega2");
    if (!(alpha > 1.0)) throw ConfigError("penalty alpha must exceed 1");
    if (!(zeta > 0.0) || !(nu > 0.0) || !(epsilon > 0.0)) throw ConfigError("zeta, nu and epsilon must be positive");
    if (pade_order < 1 || pade_order > kMaxPadeOrder) throw ConfigError("Pade order out of range");
    if (!(eps_ss >= 0.0)) throw ConfigError("string-stability slack must be non-negative");
    if (stage1_starts < 1 || sample_count < 1) throw ConfigError("stage-1 budgets must be positive");
    if (!(kappa_max >= 0.0)) throw ConfigError("kappa_max must be non-negative");
    optimizer.validate();
    bounds.validate();
  }
};

/// Peak values of one magnitude function: banded and global.
struct NormPair {
  double banded = 0.0;
  double global = 0.0;
  double omega_band = 0.0;
  double omega_global = 0.0;

  friend bool operator==(const NormPair&, const NormPair&) = default;
};

/// Banded and global norms of the exact delay transfer function at k.
[[nodiscard]] inline NormPair exact_norms(const VehicleParams& p, const Gains& k, double omega1, double omega2,
                                          const PeakOptions& opts = {}) {
  const DelayTF tf = DelayTF::from(p, k);
  auto mag = [&tf](double w) { return exact_magnitude(tf, w); };
  NormPair out;
  const PeakResult band = peak_on_band(mag, omega1, omega2, opts);
  const PeakResult glob = hinf_global(mag, global_upper_frequency(p, omega2), opts);
  out.banded = band.peak;
  out.omega_band = band.omega_star;
  out.global = glob.peak;
  out.omega_global = glob.omega_star;
  // The band is a subset of the axis; keep the two searches consistent.
  if (out.banded > out.global) {
    out.global = out.banded;
    out.omega_global = out.omega_band;
  }
  return out;
}

/// Global norm of the Pade surrogate; the banded norm is only computed when
/// `with_band` is set.
[[nodiscard]] inline NormPair surrogate_norms(const SynthesisConfig& cfg, const Gains& k, bool with_band = true) {
  const RationalTF tf = approx_tf(DelayTF::from(cfg.params, k), cfg.pade_order);
  auto mag = [&tf](double w) { return rational_magnitude(tf, w); };
  NormPair out;
  const PeakResult glob = hinf_global(mag, global_upper_frequency(cfg.params, cfg.omega2), cfg.peak);
  out.global = glob.peak;
  out.omega_global = glob.omega_star;
  if (with_band) {
    const PeakResult band = peak_on_band(mag, cfg.omega1, cfg.omega2, cfg.peak);
    out.banded = band.peak;
    out.omega_band = band.omega_star;
  }
  return out;
}

/// h(kappa): surrogate banded norm when the surrogate global norm is within
/// 1 + eps_ss, alpha otherwise (including charts that hit an empty interval).
[[nodiscard]] inline double branch_objective(const KappaVector& kappa, const SynthesisConfig& cfg) {
  try {
    const Gains k = corollary2_map(kappa, cfg.params, cfg.bounds, cfg.zeta, cfg.epsilon);
    const RationalTF tf = approx_tf(DelayTF::from(cfg.params, k), cfg.pade_order);
    auto mag = [&tf](double w) { return rational_magnitude(tf, w); };
    const PeakResult glob = hinf_global(mag, global_upper_frequency(cfg.params, cfg.omega2), cfg.peak);
    if (!(glob.peak <= 1.0 + cfg.eps_ss)) return cfg.alpha;
    return peak_on_band(mag, cfg.omega1, cfg.omega2, cfg.peak).peak;
  } catch (const InfeasibleBox&) {
    return cfg.alpha;
  } catch (const DomainError&) {
    return cfg.alpha;
  }
}

// Stage-1 objective values: a Hurwitz design scores its surrogate global norm
// (capped), a non-Hurwitz one scores above every Hurwitz design and decreases
// as the Routh-Hurwitz violations shrink.
inline constexpr double kStage1NormCap = 1e5;
inline constexpr double kStage1UnstableBase = 1e6;

[[nodiscard]] inline double stage1_objective(const MuVector& mu, const SynthesisConfig& cfg) {
  const Gains k = kpr_map(mu, cfg.bounds, cfg.nu, cfg.epsilon);
  const StabilityReport rep = local_stability(cfg.params, k);
  if (!rep.hurwitz) {
    double violation = 0.0;
    for (double m : rep.margins) violation += std::max(0.0, kMarginTolerance - m);
    return kStage1UnstableBase * (1.0 + violation);
  }
  try {
    return std::min(surrogate_norms(cfg, k, false).global, kStage1NormCap);
  } catch (const DomainError&) {
    return kStage1NormCap;
  }
}

struct Stage1Result {
  std::optional<MuVector> mu0;  ///< set in optimize mode only
  Gains k0{};
  KappaVector kappa0{};
  double objective = 0.0;  ///< surrogate global norm (optimize) or h(kappa0) (sample)
  int starts_used = 0;
  std::size_t evaluations = 0;
};

/// Multi-start Nelder-Mead on the surrogate global norm over mu, starts drawn
/// uniformly from [0, 1)^4. Accepts the first run whose norm is within
/// 1 + eps_ss and whose gains can be charted back into kappa.
[[nodiscard]] inline Stage1Result stage1_optimize(const SynthesisConfig& cfg) {
  try {
    cfg.bounds.validate();
  } catch (const InfeasibleBox& e) {
    throw Stage1Failed(std::string("InfeasibleBox: ") + e.what(), std::numeric_limits<double>::infinity());
  }
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto objective = [&cfg](std::span<const double> mu) {
    return stage1_objective(MuVector{{mu[0], mu[1], mu[2], mu[3]}}, cfg);
  };

  Stage1Result res;
  double best_norm = std::numeric_limits<double>::infinity();
  for (int start = 0; start < cfg.stage1_starts; ++start) {
    std::vector<double> x0(4);
    for (double& v : x0) v = unit(rng);
    const OptimizeResult run = nelder_mead(objective, x0, cfg.optimizer);
    res.evaluations += run.evaluations;
    res.starts_used = start + 1;
    best_norm = std::min(best_norm, run.f);
    if (!(run.f <= 1.0 + cfg.eps_ss)) continue;
    const MuVector mu{{run.x[0], run.x[1], run.x[2], run.x[3]}};
    const Gains k0 = kpr_map(mu, cfg.bounds, cfg.nu, cfg.epsilon);
    try {
      res.kappa0 = corollary3_extract(k0, cfg.params, cfg.bounds, cfg.zeta, cfg.epsilon);
    } catch (const NotInManifold&) {
      continue;
    }
    res.mu0 = mu;
    res.k0 = k0;
    res.objective = run.f;
    return res;
  }
  throw Stage1Failed("no string-stable start found in " + std::to_string(cfg.stage1_starts) +
                         " starts (best surrogate norm " + std::to_string(best_norm) + ")",
                     best_norm);
}

/// argmin of h over the given kappa samples, restricted to samples with
/// h < alpha. Ties resolve to the lexicographically smallest kappa.
[[nodiscard]] inline Stage1Result stage1_select(std::span<const KappaVector> samples, const SynthesisConfig& cfg) {
  std::vector<double> values(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { values[i] = branch_objective(samples[i], cfg); });
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(values[i] < cfg.alpha)) continue;
    if (!best || values[i] < values[*best] || (values[i] == values[*best] && samples[i].v < samples[*best].v))
      best = i;
  }
  if (!best) throw Stage1Failed("no sampled kappa satisfies the string-stability constraint", cfg.alpha);
  Stage1Result res;
  res.kappa0 = samples[*best];
  res.k0 = corollary2_map(res.kappa0, cfg.params, cfg.bounds, cfg.zeta, cfg.epsilon);
  res.objective = values[*best];
  res.starts_used = static_cast<int>(samples.size());
  res.evaluations = samples.size();
  return res;
}

/// Uniform sampling of [-kappa_max, kappa_max]^4.
[[nodiscard]] inline Stage1Result stage1_sample(const SynthesisConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> box(-cfg.kappa_max, cfg.kappa_max);
  std::vector<KappaVector> samples(static_cast<std::size_t>(cfg.sample_count));
  for (auto& s : samples)
    for (double& v : s.v) v = cfg.kappa_max > 0.0 ? box(rng) : 0.0;
  return stage1_select(samples, cfg);
}

struct SynthesisDiagnostics {
  int stage1_starts = 0;
  std::size_t stage1_evaluations = 0;
  double stage1_objective = 0.0;
  int stage2_iterations = 0;
  std::size_t stage2_evaluations = 0;
  bool stage2_budget_exhausted = false;
  double surrogate_banded = 0.0;  ///< h(kappa*)
  double surrogate_start = 0.0;   ///< h(kappa0)

  friend bool operator==(const SynthesisDiagnostics&, const SynthesisDiagnostics&) = default;
};

struct SynthesisResult {
  Gains k_star{};
  KappaVector kappa_star{};
  KappaVector kappa0{};
  Gains k0{};
  std::optional<MuVector> mu0;
  double gamma = 0.0;        ///< exact banded norm at k_star
  double global_norm = 0.0;  ///< exact global norm at k_star
  StabilityReport stability{};
  bool box_ok = false;
  bool feasible = false;
  SynthesisDiagnostics diagnostics{};

  friend bool operator==(const SynthesisResult&, const SynthesisResult&) = default;
};

/// Exact-model certification of a gain vector against cfg.
inline void certify(const SynthesisConfig& cfg, SynthesisResult& res) {
  res.stability = local_stability(cfg.params, res.k_star);
  res.box_ok = cfg.bounds.contains(res.k_star, 1e-12);
  if (!res.stability.hurwitz) {
    res.gamma = std::numeric_limits<double>::infinity();
    res.global_norm = std::numeric_limits<double>::infinity();
    res.feasible = false;
    return;
  }
  const NormPair n = exact_norms(cfg.params, res.k_star, cfg.omega1, cfg.omega2, cfg.peak);
  res.gamma = n.banded;
  res.global_norm = n.global;
  res.feasible = res.box_ok && res.global_norm <= 1.0 + cfg.eps_ss;
}

/// Stage 2 from a given kappa0, then exact certification.
[[nodiscard]] inline SynthesisResult synthesize_from(const SynthesisConfig& cfg, const Stage1Result& s1) {
  SynthesisResult res;
  res.kappa0 = s1.kappa0;
  res.k0 = s1.k0;
  res.mu0 = s1.mu0;
  res.diagnostics.stage1_starts = s1.starts_used;
  res.diagnostics.stage1_evaluations = s1.evaluations;
  res.diagnostics.stage1_objective = s1.objective;

  auto h = [&cfg](std::span<const double> kap) {
    return branch_objective(KappaVector{{kap[0], kap[1], kap[2], kap[3]}}, cfg);
  };
  const std::vector<double> x0(s1.kappa0.v.begin(), s1.kappa0.v.end());
  const OptimizeResult run = nelder_mead(h, x0, cfg.optimizer);
  res.kappa_star = KappaVector{{run.x[0], run.x[1], run.x[2], run.x[3]}};
  res.k_star = corollary2_map(res.kappa_star, cfg.params, cfg.bounds, cfg.zeta, cfg.epsilon);
  res.diagnostics.stage2_iterations = run.iterations;
  res.diagnostics.stage2_evaluations = run.evaluations;
  res.diagnostics.stage2_budget_exhausted = run.budget_exhausted;
  res.diagnostics.surrogate_banded = run.f;
  res.diagnostics.surrogate_start = run.trace.empty() ? run.f : h(x0);
  certify(cfg, res);
  return res;
}

[[nodiscard]] inline SynthesisResult synthesize(const SynthesisConfig& cfg) {
  cfg.validate();
  const Stage1Result s1 = (cfg.stage1_mode == Stage1Mode::optimize) ? stage1_optimize(cfg) : stage1_sample(cfg);
  return synthesize_from(cfg, s1);
}

}  // namespace platoon
