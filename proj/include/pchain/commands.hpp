#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pchain/config.hpp"
#include "pchain/couplings.hpp"
#include "pchain/errors.hpp"
#include "pchain/fidelity_model.hpp"
#include "pchain/io.hpp"
#include "pchain/oracle_suite.hpp"
#include "pchain/spin_chain.hpp"
#include "pchain/sweep.hpp"
#include "pchain/table1.hpp"
#include "pchain/trap_model.hpp"

namespace pchain {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int input_error = 1;
inline constexpr int regime_violation = 2;
inline constexpr int acceptance_failure = 3;
}  // namespace exit_code

struct CommandResult {
  int exit_code = exit_code::ok;
  Report report;
};

namespace detail {

inline std::string join(const std::vector<std::string>& items, const char* sep = "; ") {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

inline std::vector<DerivedQuantities> site_quantities(const RunConfig& cfg, std::size_t n, HierarchyCheck policy) {
  std::vector<DerivedQuantities> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(derive_quantities(trap_params(cfg, i), cfg.constants, policy));
  return out;
}

inline void collect_warnings(Report& r, const std::vector<DerivedQuantities>& sites) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (const auto& s : sites[i].warnings) w.push_back("site " + std::to_string(i + 1) + ": " + s);
  if (!w.empty()) r.set("warnings", join(w));
}

inline Report stamped(std::string_view command, const RunConfig& cfg) {
  Report r;
  stamp(r, command, to_string(cfg.mode), to_string(cfg.orientation));
  return r;
}

struct ChainSetup {
  ChainGeometry geom;
  std::vector<DerivedQuantities> sites;
  CouplingMatrix cm;
};

inline ChainSetup chain_setup(const RunConfig& cfg) {
  ChainSetup s;
  s.geom = chain_geometry(cfg);
  s.sites = site_quantities(cfg, s.geom.size(), HierarchyCheck::Enforce);
  s.cm = coupling_matrix(std::span<const DerivedQuantities>(s.sites), s.geom, cfg.constants,
                         {cfg.force, cfg.nearest_neighbor_only});
  return s;
}

}  // namespace detail

inline CommandResult cmd_freqs(const RunConfig& cfg) {
  std::size_t n = 1;
  if (!cfg.sites.empty()) n = std::max(cfg.n_sites, cfg.sites.rbegin()->first);
  const auto sites = detail::site_quantities(cfg, n, HierarchyCheck::Enforce);

  CommandResult res{exit_code::ok, detail::stamped("freqs", cfg)};
  detail::collect_warnings(res.report, sites);
  res.report.table("quantities", {"site", "quantity", "value", "unit"});
  res.report.table("regime", {"site", "condition", "ratio", "ok"});
  Table& q = res.report.tables[0];
  Table& reg = res.report.tables[1];
  std::optional<double> spacing = cfg.spacing;
  if (!spacing && cfg.positions.size() >= 2) spacing = cfg.positions[1] - cfg.positions[0];

  for (std::size_t i = 0; i < sites.size(); ++i) {
    const DerivedQuantities& d = sites[i];
    const auto site = static_cast<long long>(i + 1);
    for (auto [name, w] : {std::pair{"omega_m", d.omega_m}, {"omega_z", d.omega_z}, {"omega_c", d.omega_c},
                           {"omega_s", d.omega_s}, {"omega_a", d.omega_a}, {"omega_c_tilde", d.omega_c_tilde}}) {
      q.add({site, std::string(name), w, std::string("rad/s")});
      q.add({site, std::string(name) + "_Hz", angular_to_hz(w), std::string("Hz")});
    }
    q.add({site, std::string("delta_z"), d.delta_z, std::string("m")});
    q.add({site, std::string("epsilon"), d.epsilon, std::string("1")});
    const double xi = spacing ? coulomb_scale(d, *spacing, cfg.constants) : 0.0;
    if (spacing) q.add({site, std::string("xi_nearest"), xi, std::string("rad/s")});
    const RegimeReport rr = validate_regime(d, xi, cfg.occupations.l_bar);
    for (const auto& c : rr.conditions) reg.add({site, c.name, c.ratio, c.ok});
    if (!rr.pass) res.exit_code = exit_code::regime_violation;
  }
  return res;
}

inline CommandResult cmd_couplings(const RunConfig& cfg) {
  const auto s = detail::chain_setup(cfg);
  CommandResult res{exit_code::ok, detail::stamped("couplings", cfg)};
  detail::collect_warnings(res.report, s.sites);
  res.report.set("nearest_neighbor_only", cfg.nearest_neighbor_only ? "true" : "false");
  res.report.set("isotropy_ratio_site1", format_number(isotropy_ratio(s.sites.front())));
  if (s.cm.jxy(0, 1) > 0.0) res.report.set("t_ex_nearest_s", format_number(swap_time(s.cm.jxy(0, 1))));
  auto& t = res.report.table("couplings", {"i", "j", "d_m", "xi_rad_s", "Jz_rad_s", "Jxy_rad_s", "mode"});
  const auto n = static_cast<Eigen::Index>(s.cm.size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      t.add({static_cast<long long>(i + 1), static_cast<long long>(j + 1), s.cm.distance(i, j), s.cm.xi(i, j),
             s.cm.jz(i, j), s.cm.jxy(i, j), std::string(to_string(s.cm.mode))});
  return res;
}

inline CommandResult cmd_transfer(const RunConfig& cfg) {
  const auto s = detail::chain_setup(cfg);
  const double t_ex = swap_time(s.cm.jxy(0, 1));
  const TransferConfig& tc = cfg.transfer;
  const double t_stop = tc.t_stop.value_or(tc.t_stop_tex * t_ex);
  if (!(t_stop >= 0.0)) throw InvalidInput("transfer window must be >= 0");
  std::vector<double> grid(tc.points);
  for (std::size_t k = 0; k < tc.points; ++k)
    grid[k] = tc.points == 1 ? t_stop : t_stop * static_cast<double>(k) / static_cast<double>(tc.points - 1);

  const double omega_s = s.sites.front().omega_s;
  const bool fast = tc.fast_path || s.geom.size() > cfg.max_sites;
  std::vector<TransferPoint> curve;
  if (!fast) {
    const SpinHamiltonian h = build_effective_hamiltonian(s.cm, omega_s, cfg.orientation, cfg.max_sites);
    curve = tc.bloch ? bloch_averaged_transfer_curve(h, grid) : transfer_fidelity_curve(h, tc.theta, tc.phi, grid);
  } else {
    const SingleExcitationChain chain(s.cm, omega_s, cfg.orientation);
    if (!tc.bloch) {
      curve = chain.curve(tc.theta, tc.phi, grid);
    } else {
      curve.resize(grid.size());
      const BlochGrid bg;
      parallel_for(grid.size(), [&](std::size_t k) {
        curve[k].t = grid[k];
        curve[k].fidelity = bg.average([&](double th, double ph) { return chain.transfer(th, ph, grid[k]).fidelity; });
        curve[k].raw_fidelity =
            bg.average([&](double th, double ph) { return chain.transfer(th, ph, grid[k]).raw_fidelity; });
        curve[k].phase = chain.transfer(std::numbers::pi / 2, 0.0, grid[k]).phase;
      });
    }
  }

  CommandResult res{exit_code::ok, detail::stamped("transfer", cfg)};
  detail::collect_warnings(res.report, s.sites);
  res.report.set("n_sites", std::to_string(s.geom.size()));
  res.report.set("solver", fast ? "single-excitation" : "dense");
  res.report.set("sender", tc.bloch ? "bloch-average" : "theta=" + format_number(tc.theta) + " phi=" + format_number(tc.phi));
  res.report.set("t_ex_nearest_s", format_number(t_ex));
  res.report.set("fidelity", "receiver reduced state after optimal z-rotation; F_raw without it");
  std::size_t best = 0;
  for (std::size_t k = 1; k < curve.size(); ++k)
    if (curve[k].fidelity > curve[best].fidelity) best = k;
  if (!curve.empty()) {
    res.report.set("peak_fidelity", format_number(curve[best].fidelity));
    res.report.set("peak_time_s", format_number(curve[best].t));
  }
  auto& t = res.report.table("transfer", {"t_s", "t_over_tex", "F", "F_raw", "phase_rad"});
  for (const auto& p : curve) t.add({p.t, p.t / t_ex, p.fidelity, p.raw_fidelity, p.phase});
  return res;
}

inline CommandResult cmd_fidelity(const RunConfig& cfg) {
  const auto s = detail::chain_setup(cfg);
  const DerivedQuantities& dq = s.sites.front();
  const ThermalOccupations occ = occupations_for(cfg, dq);
  const double jxy = s.cm.jxy(0, 1);
  const FidelityReport f = total_fidelity(dq, occ, jxy, s.geom.size(), s.cm.xi(0, 1));

  CommandResult res{exit_code::ok, detail::stamped("fidelity", cfg)};
  detail::collect_warnings(res.report, s.sites);
  if (!f.warnings.empty()) res.report.set("fidelity_warnings", detail::join(f.warnings));
  if (cfg.temperature) res.report.set("temperature_K", format_number(*cfg.temperature));
  auto& b = res.report.table("budget", {"quantity", "value"});
  b.add({std::string("F_total"), f.total});
  b.add({std::string("E_r"), f.e_r});
  b.add({std::string("E_S"), f.e_s});
  b.add({std::string("eps2_E_S"), f.eps2_e_s});
  b.add({std::string("F_without_E_r"), 1.0 - f.eps2_e_s});
  b.add({std::string("E_r_heuristic"), f.e_r_heuristic});
  b.add({std::string("delta_s_spread_rad_s"), f.delta_s_spread});
  b.add({std::string("tail_mass"), f.tail_mass});
  b.add({std::string("k_bar"), occ.k_bar});
  b.add({std::string("n_bar"), occ.n_bar});
  b.add({std::string("l_bar"), occ.l_bar});
  b.add({std::string("Jxy_rad_s"), jxy});
  b.add({std::string("t_ex_s"), swap_time(jxy)});
  b.add({std::string("n_sites"), static_cast<long long>(f.n_sites)});
  auto& t = res.report.table("transitions", {"term", "probability", "flagged"});
  for (const auto& e : f.transitions) t.add({e.label, e.probability, e.flagged});
  return res;
}

inline CommandResult cmd_table1(const RunConfig& cfg) {
  const auto results = table1_results(cfg.constants);
  const Table1Verdict v = judge_table1(results);
  CommandResult res{v.pass() ? exit_code::ok : exit_code::acceptance_failure, detail::stamped("table1", cfg)};
  res.report.set("anomaly_mode", "both (ExactG and Approx1e3 columns)");
  res.report.set("temperature_K", format_number(kTable1Temperature));
  res.report.set("readings", "ratio_rad: Jxy / (1e3 x printed); ratio_cyclic: (Jxy / 2pi) / (1e3 x printed)");
  auto& t = res.report.table(
      "rows", {"case", "d_um", "fz_Hz", "fc_Hz", "b_T_per_m", "l_bar", "Jxy_printed_kHz", "Jxy_approx_rad_s",
               "Jxy_exact_rad_s", "ratio_rad_approx", "ratio_cyclic_approx", "ratio_rad_exact", "ratio_cyclic_exact",
               "k_bar", "n_bar", "one_minus_F_exact", "E_r_exact", "eps2_E_S_exact", "one_minus_F_approx",
               "E_r_approx", "eps2_E_S_approx", "caption_error", "regime_ok", "hierarchy_warnings"});
  for (const auto& r : results) {
    std::vector<std::string> w = r.exact.dq.warnings;
    t.add({std::string(1, r.row.case_label), r.row.d_um, r.row.fz_mhz * 1e6, table1_fc_hz(r.row.case_label), r.row.b,
           r.row.l_bar, r.row.jxy_printed, r.approx.jxy, r.exact.jxy, r.approx.ratio_rad, r.approx.ratio_cyclic,
           r.exact.ratio_rad, r.exact.ratio_cyclic, r.occupations.k_bar, r.occupations.n_bar,
           1.0 - r.exact.fidelity.total, r.exact.fidelity.e_r, r.exact.fidelity.eps2_e_s,
           1.0 - r.approx.fidelity.total, r.approx.fidelity.e_r, r.approx.fidelity.eps2_e_s,
           table1_target_error(r.row.case_label), r.regime.pass, detail::join(w)});
  }
  auto& c = res.report.table("verdict", {"check", "value", "pass"});
  c.add({std::string("approx_rad_reading_within_factor_2_all_rows"), static_cast<double>(v.rad_within), v.rad_within});
  c.add({std::string("approx_cyclic_reading_rows_off_by_more_than_5"), static_cast<double>(v.cyclic_disagreeing_rows),
         v.cyclic_demonstrated});
  c.add({std::string("case_A_d10_exact_one_minus_F_within_3x_of_0.01"), v.error_a, v.caption_a});
  c.add({std::string("case_B_d10_exact_one_minus_F_within_3x_of_0.001"), v.error_b, v.caption_b});
  c.add({std::string("case_B_error_below_case_A"), v.error_b / v.error_a, v.ordered});
  return res;
}

inline SweepSpec sweep_spec(const RunConfig& cfg) {
  SweepSpec spec;
  spec.mode = cfg.mode;
  spec.temperature = cfg.temperature;
  spec.occupations = cfg.occupations;
  spec.pareto_min_fidelity = cfg.pareto_min_fidelity;
  spec.max_points = cfg.sweep_max_points;

  auto axis = [&](const char* key, std::optional<double> fallback, double scale, const char* what) {
    SweepAxis a;
    if (const auto it = cfg.sweep_axes.find(key); it != cfg.sweep_axes.end()) a = SweepAxis::parse(it->second);
    else if (fallback) a = {*fallback, *fallback, 1};
    else throw ConfigError(std::string("sweep needs an axis or a fixed value for ") + what);
    a.start *= scale;
    a.stop *= scale;
    return a;
  };
  std::optional<double> spacing_um;
  if (cfg.spacing) spacing_um = *cfg.spacing * 1e6;
  std::optional<double> fc = cfg.trap.fc_hz;
  if (!fc && cfg.trap.B0) fc = angular_to_hz(cfg.constants.e * *cfg.trap.B0 / cfg.constants.m_e);
  spec.b = axis("b_T_per_m", cfg.trap.b, 1.0, "b_T_per_m");
  spec.d = axis("d_um", spacing_um, 1e-6, "d_um");
  spec.omega_z = axis("fz_Hz", cfg.trap.fz_hz, kTwoPi, "fz_Hz");
  spec.omega_c = axis("fc_Hz", fc, kTwoPi, "fc_Hz");
  return spec;
}

inline CommandResult cmd_sweep(const RunConfig& cfg) {
  const SweepSpec spec = sweep_spec(cfg);
  const auto rows = run_sweep(spec, cfg.constants);
  CommandResult res{exit_code::ok, detail::stamped("sweep", cfg)};
  res.report.set("grid_points", std::to_string(rows.size()));
  res.report.set("order", "b slowest, then d, fz, fc fastest");
  res.report.set("pareto", "max Jxy per d with F >= " + format_number(spec.pareto_min_fidelity) + " and regime_ok");
  if (spec.temperature) res.report.set("temperature_K", format_number(*spec.temperature));
  auto& t = res.report.table("sweep", {"b_T_per_m", "d_um", "fz_Hz", "fc_Hz", "Jxy_rad_s", "t_ex_s", "F", "E_r",
                                       "eps2_E_S", "regime_ok", "pareto", "note"});
  for (const auto& r : rows)
    t.add({r.b, r.d * 1e6, angular_to_hz(r.omega_z), angular_to_hz(r.omega_c), r.jxy, r.t_ex, r.fidelity, r.e_r,
           r.eps2_e_s, r.regime_ok, r.pareto, r.note});
  return res;
}

inline CommandResult cmd_oracle(const RunConfig& cfg) {
  OracleSuiteConfig oc = cfg.oracle;
  oc.orientation = cfg.orientation;
  oc.mode = cfg.mode;
  const OracleSuiteReport rep = run_oracle_suite(oc, cfg.constants);

  CommandResult res{rep.pass() ? exit_code::ok : exit_code::acceptance_failure, detail::stamped("oracle", cfg)};
  res.report.set("epsilon", format_number(oc.epsilon));
  res.report.set("omega_c_over_omega_z", format_number(oc.ratio));
  res.report.set("fz_Hz", format_number(angular_to_hz(oc.omega_z)));
  res.report.set("d_m", format_number(oc.distance));
  res.report.set("cutoffs", std::to_string(oc.trunc.n_max) + "," + std::to_string(oc.trunc.k_max));
  res.report.set("xi_rad_s", format_number(rep.xi));
  if (!rep.ising_failure.empty()) res.report.set("ising_failure", rep.ising_failure);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto& s = res.report.table("summary", {"check", "predicted", "measured", "relative_error", "tolerance", "pass"});
  s.add({std::string("flip_flop_element_rad_s"), rep.predicted_flip_flop, rep.base.flip_flop,
         rep.flip_flop_relative_error, oc.tolerance, rep.flip_flop_ok() && rep.sign_ok()});
  s.add({std::string("jxy_from_oscillation_rad_s"), std::abs(rep.predicted_flip_flop) / 2.0, rep.base.jxy_measured,
         rep.flip_flop_relative_error, oc.tolerance, rep.flip_flop_ok()});
  s.add({std::string("epsilon_scaling_exponent"), 2.0, rep.exponent, nan, oc.exponent_high - 2.0, rep.exponent_ok()});
  s.add({std::string("cutoff_convergence_monotone"), nan, nan, nan, nan, rep.convergence_monotone});
  if (oc.check_ising)
    s.add({std::string("ising_element_rad_s"), rep.ising ? rep.ising->predicted_ising : nan,
           rep.ising ? rep.ising->ising : nan, rep.ising_relative_error, oc.tolerance, rep.ising_ok()});
  s.add({std::string("hsd_vs_fd_max_deviation"), 0.0, rep.hsd_max_deviation, nan, 1e-10, rep.hsd_ok()});
  s.add({std::string("zero_gradient_zero_coupling"), 0.0, nan, nan, nan, rep.zero_coupling_ok});
  s.add({std::string("dressed_pair_overlap"), nan, rep.base.pair_overlap, nan, nan, true});

  auto& c = res.report.table("convergence", {"cutoff", "flip_flop_rad_s", "change_rad_s"});
  for (const auto& r : rep.convergence) c.add({static_cast<long long>(r.cutoff), r.flip_flop, r.change});
  return res;
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"freqs", "couplings", "transfer", "fidelity", "table1", "sweep", "oracle"};
  return names;
}

/// Dispatches by name and maps exceptions to exit codes. `error` receives
/// the message when the command could not produce a report.
inline CommandResult run_command(const std::string& name, const RunConfig& cfg, std::string& error) {
  try {
    if (name == "freqs") return cmd_freqs(cfg);
    if (name == "couplings") return cmd_couplings(cfg);
    if (name == "transfer") return cmd_transfer(cfg);
    if (name == "fidelity") return cmd_fidelity(cfg);
    if (name == "table1") return cmd_table1(cfg);
    if (name == "sweep") return cmd_sweep(cfg);
    if (name == "oracle") return cmd_oracle(cfg);
    throw InvalidInput("unknown command '" + name + "'");
  } catch (const InvalidInput& e) {
    error = e.what();
    return {exit_code::input_error, {}};
  } catch (const RegimeError& e) {
    error = e.what();
    return {exit_code::regime_violation, {}};
  } catch (const Error& e) {
    error = e.what();
    return {exit_code::acceptance_failure, {}};
  }
}

}  // namespace pchain
