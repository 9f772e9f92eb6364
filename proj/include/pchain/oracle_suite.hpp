#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pchain/fidelity_model.hpp"
#include "pchain/microscopic_oracle.hpp"
#include "pchain/trap_model.hpp"

namespace pchain {

/// One microscopic validation campaign: identical electrons at an exaggerated
/// gradient coupling, compared against the analytic effective couplings.
struct OracleSuiteConfig {
  double epsilon = 0.03;
  double ratio = 20.0;  // omega_c / omega_z
  double omega_z = hz_to_angular(490e6);
  double distance = 40e-6;  // m
  Orientation orientation = Orientation::AxialZ;
  AnomalyMode mode = AnomalyMode::ExactG;
  FockTruncation trunc{3, 3};
  std::size_t cutoff_steps = 3;  // extra runs at cutoff + 1, + 2, ...
  double tolerance = 0.15;       // relative, flip-flop and Ising elements
  double exponent_low = 1.8;
  double exponent_high = 2.2;
  bool check_ising = true;
};

struct CutoffRun {
  std::size_t cutoff = 0;
  double flip_flop = 0.0;  // measured |element| from the oscillation fit, rad/s
  double change = std::numeric_limits<double>::quiet_NaN();  // vs previous cutoff
};

struct OracleSuiteReport {
  OracleSuiteConfig config;
  double xi = 0.0;
  double predicted_flip_flop = 0.0;
  FlipFlopMeasurement base;
  FlipFlopMeasurement half;  // epsilon / 2
  double flip_flop_relative_error = 0.0;
  double exponent = 0.0;
  std::vector<CutoffRun> convergence;
  bool convergence_monotone = false;
  std::optional<IsingMeasurement> ising;
  std::string ising_failure;
  double ising_relative_error = std::numeric_limits<double>::quiet_NaN();
  double hsd_max_deviation = 0.0;  // |hsd_fidelity - fd| at zeta = 0.5, 1, 2
  bool zero_coupling_ok = false;

  bool flip_flop_ok() const { return flip_flop_relative_error <= config.tolerance; }
  bool sign_ok() const { return base.flip_flop * predicted_flip_flop > 0.0; }
  bool exponent_ok() const { return exponent >= config.exponent_low && exponent <= config.exponent_high; }
  bool ising_ok() const { return !config.check_ising || (ising && ising_relative_error <= config.tolerance); }
  bool hsd_ok() const { return hsd_max_deviation <= 1e-10; }
  bool pass() const {
    return flip_flop_ok() && sign_ok() && exponent_ok() && convergence_monotone && ising_ok() && hsd_ok() &&
           zero_coupling_ok;
  }
};

inline DerivedQuantities oracle_site(const OracleSuiteConfig& cfg, double epsilon, const PhysicalConstants& c = {}) {
  const double wc = cfg.ratio * cfg.omega_z;
  const double b = gradient_for_epsilon(epsilon, cfg.omega_z, c);
  return derive_quantities(TrapParams::from_frequencies(wc, cfg.omega_z, b, cfg.mode, c), c);
}

inline FlipFlopMeasurement oracle_flip_flop(const OracleSuiteConfig& cfg, double epsilon, FockTruncation trunc,
                                            const PhysicalConstants& c = {}) {
  const DerivedQuantities dq = oracle_site(cfg, epsilon, c);
  const MicroscopicSystem sys = build_microscopic(dq, dq, coulomb_scale(dq, cfg.distance, c), cfg.orientation, trunc, c);
  return extract_effective_jxy(sys, {}, c);
}

inline OracleSuiteReport run_oracle_suite(const OracleSuiteConfig& cfg, const PhysicalConstants& c = {}) {
  if (!(cfg.epsilon > 0.0)) throw InvalidInput("oracle suite needs epsilon > 0");
  cfg.trunc.validate();
  FockTruncation top = cfg.trunc;
  top.n_max += cfg.cutoff_steps;
  top.k_max += cfg.cutoff_steps;
  top.validate();

  OracleSuiteReport rep;
  rep.config = cfg;
  const DerivedQuantities dq = oracle_site(cfg, cfg.epsilon, c);
  rep.xi = coulomb_scale(dq, cfg.distance, c);

  rep.base = oracle_flip_flop(cfg, cfg.epsilon, cfg.trunc, c);
  rep.half = oracle_flip_flop(cfg, 0.5 * cfg.epsilon, cfg.trunc, c);
  rep.predicted_flip_flop = rep.base.predicted_flip_flop;
  // The oscillation frequency is 2 |element|; jxy_measured is a quarter of it.
  const double measured = 2.0 * rep.base.jxy_measured;
  rep.flip_flop_relative_error = std::abs(measured - std::abs(rep.predicted_flip_flop)) / std::abs(rep.predicted_flip_flop);
  rep.exponent = std::log(rep.base.jxy_measured / rep.half.jxy_measured) / std::numbers::ln2;

  for (std::size_t s = 0; s <= cfg.cutoff_steps; ++s) {
    const FockTruncation t{cfg.trunc.n_max + s, cfg.trunc.k_max + s};
    CutoffRun run{cfg.trunc.k_max + s, s == 0 ? measured : 2.0 * oracle_flip_flop(cfg, cfg.epsilon, t, c).jxy_measured};
    if (!rep.convergence.empty()) run.change = std::abs(run.flip_flop - rep.convergence.back().flip_flop);
    rep.convergence.push_back(run);
  }
  // Successive changes must not grow; a floor absorbs round-off once converged.
  const double floor = 1e-9 * std::abs(rep.predicted_flip_flop);
  rep.convergence_monotone = true;
  for (std::size_t i = 2; i < rep.convergence.size(); ++i)
    if (rep.convergence[i].change > std::max(rep.convergence[i - 1].change, floor)) rep.convergence_monotone = false;

  if (cfg.check_ising) {
    try {
      const MicroscopicSystem sys = build_microscopic(dq, dq, rep.xi, cfg.orientation, cfg.trunc, c);
      rep.ising = extract_effective_jz(sys, c);
      rep.ising_relative_error = std::abs(rep.ising->ising - rep.ising->predicted_ising) / std::abs(rep.ising->predicted_ising);
    } catch (const StateTrackingFailure& e) {
      rep.ising_failure = e.what();
    }
  }

  for (double zeta : {0.5, 1.0, 2.0}) {
    const double jxy = 1.0;
    const double f = hsd_fidelity(100.0, 100.0 + 4.0 * jxy * zeta, jxy, 0.3, std::numbers::pi / (4.0 * jxy));
    rep.hsd_max_deviation = std::max(rep.hsd_max_deviation, std::abs(f - fd(zeta)));
  }

  {
    const DerivedQuantities dq0 = [&] {
      const double wc = cfg.ratio * cfg.omega_z;
      return derive_quantities(TrapParams::from_frequencies(wc, cfg.omega_z, 0.0, cfg.mode, c), c);
    }();
    const MicroscopicSystem sys0 = build_microscopic(dq0, dq0, rep.xi, cfg.orientation, cfg.trunc, c);
    const FlipFlopMeasurement m0 = extract_effective_jxy(sys0, {}, c);
    const IsingMeasurement z0 = extract_effective_jz(sys0, c);
    const double scale = std::abs(rep.predicted_flip_flop);
    rep.zero_coupling_ok = m0.jxy_measured == 0.0 && m0.flip_flop == 0.0 && std::abs(z0.combination) <= 1e-6 * scale;
  }
  return rep;
}

}  // namespace pchain
