// Acceptance runner: one PASS/FAIL line per criterion. Tolerances and time
// budgets are fixed here and are not configurable.
//
//   acceptance                 all criteria
//   acceptance --criterion N   only criterion N

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pchain/couplings.hpp"
#include "pchain/fidelity_model.hpp"
#include "pchain/microscopic_oracle.hpp"
#include "pchain/oracle_suite.hpp"
#include "pchain/spin_chain.hpp"
#include "pchain/table1.hpp"

using namespace pchain;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome table1_couplings() {
  const Table1Verdict v = judge_table1(table1_results());
  double lo = 1e300, hi = 0.0;
  for (const auto& r : table1_results()) {
    lo = std::min(lo, r.approx.ratio_rad);
    hi = std::max(hi, r.approx.ratio_rad);
  }
  return {v.couplings_pass(), "rad reading ratio in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) +
                                  "] (need within x2); cyclic reading off by >x5 on " +
                                  std::to_string(v.cyclic_disagreeing_rows) + "/6 rows (need >= 4)"};
}

Outcome table1_captions() {
  const Table1Verdict v = judge_table1(table1_results());
  return {v.fidelity_pass(), "1-F case A " + fmt("%.4g", v.error_a) + " (target 0.01 x/3), case B " +
                                 fmt("%.4g", v.error_b) + " (target 0.001 x/3), B < A " + (v.ordered ? "yes" : "no")};
}

Outcome fd_certification() {
  constexpr double kRandomTol = 1e-9;
  constexpr double kZeroTol = 1e-12;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const double jxy = 1.0, omega1 = 40.0, jz = 0.31;
  const double t = swap_time(jxy);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double zeta = u(rng);
    worst = std::max(worst, std::abs(hsd_fidelity(omega1, omega1 + 4.0 * jxy * zeta, jxy, jz, t) - fd(zeta)));
  }
  const double zero = std::max(std::abs(hsd_fidelity(omega1, omega1, jxy, jz, t) - 1.0), std::abs(fd(0.0) - 1.0));
  return {worst <= kRandomTol && zero <= kZeroTol,
          "max |F_d - H_sd| over 20 random zeta " + fmt("%.2e", worst) + " (tol 1e-9); zeta=0 " + fmt("%.2e", zero) +
              " (tol 1e-12)"};
}

Outcome canonical_consistency() {
  constexpr double kPairTol = 1e-12;
  constexpr double kQuadTol = 1e-6;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> fz(100e6, 1.5e9), ratio(10.0, 40.0), occ(0.0, 5.0), b(1.0, 3000.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double z = fz(rng);
    const auto dq = derive_quantities(TrapParams::from_frequencies(hz_to_angular(ratio(rng) * z), hz_to_angular(z), b(rng)));
    const ThermalOccupations o{occ(rng), occ(rng), occ(rng)};
    const double ref = oracle::es_two_site(dq, o.k_bar, o.n_bar, o.l_bar);
    worst = std::max(worst, std::abs(error_canonical_closed_form(dq, o, 2) / ref - 1.0));
  }
  const auto site = [](double fc, double fzz, double bb) {
    return derive_quantities(TrapParams::from_frequencies(hz_to_angular(fc), hz_to_angular(fzz), bb));
  };
  const std::pair<DerivedQuantities, ThermalOccupations> sets[] = {
      {site(8e9, 490e6, 1800.0), {2.93, 0.0, 2.0}},
      {site(11e9, 730e6, 1100.0), {1.7, 0.01, 0.15}},
      {site(20e9, 600e6, 300.0), {0.0, 0.4, 7.0}},
  };
  double quad = 0.0;
  for (const auto& [dq, o] : sets)
    quad = std::max(quad, std::abs(error_canonical_numeric(dq, o, 2) / error_canonical_closed_form(dq, o, 2) - 1.0));
  return {worst <= kPairTol && quad <= kQuadTol, "N=2 general vs pair form max rel " + fmt("%.2e", worst) +
                                                     " (tol 1e-12); Bloch quadrature vs closed form " +
                                                     fmt("%.2e", quad) + " (tol 1e-6)"};
}

Outcome microscopic_oracle() {
  OracleSuiteConfig cfg;
  cfg.epsilon = 0.05;
  cfg.ratio = 15.0;
  cfg.trunc = {3, 3};
  cfg.cutoff_steps = 3;
  cfg.tolerance = 0.15;
  cfg.exponent_low = 1.8;
  cfg.exponent_high = 2.2;
  cfg.check_ising = false;
  const OracleSuiteReport rep = run_oracle_suite(cfg);
  const bool pass = rep.flip_flop_ok() && rep.sign_ok() && rep.convergence_monotone && rep.exponent_ok();
  return {pass, "flip-flop measured/analytic " + fmt("%.4f", 2.0 * rep.base.jxy_measured / std::abs(rep.predicted_flip_flop)) +
                    " (rel err " + fmt("%.3f", rep.flip_flop_relative_error) + ", tol 0.15); exponent " +
                    fmt("%.3f", rep.exponent) + " (need [1.8, 2.2]); cutoff changes monotone " +
                    (rep.convergence_monotone ? "yes" : "no")};
}

Outcome isotropy_point() {
  constexpr double kTol = 0.02;
  const double wz = hz_to_angular(490e6);
  const auto dq = derive_quantities(TrapParams::from_frequencies(18.8 * wz, wz, 500.0, AnomalyMode::Approx1e3));
  const PairCoupling p = pair_coupling(dq, dq, 10e-6);
  const double dev = std::abs(2.0 * p.jz / p.jxy - 1.0);
  return {dev < kTol, "|2Jz/Jxy - 1| = " + fmt("%.4f", dev) + " (tol 0.02)"};
}

Outcome property_suite() {
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const std::size_t n = 5;
  CouplingMatrix cm;
  cm.jz = cm.jxy = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = i + 1; j < 5; ++j) {
      cm.jz(i, j) = cm.jz(j, i) = u(rng);
      cm.jxy(i, j) = cm.jxy(j, i) = u(rng);
    }

  // Excitation conservation: effective chain and microscopic model.
  for (auto o : {Orientation::AxialZ, Orientation::TransverseX}) {
    const SpinHamiltonian h = build_effective_hamiltonian(cm, 1.7, o);
    const oracle::Mat dense = Eigen::MatrixXd(h.matrix).cast<oracle::Complex>();
    oracle::Mat total = oracle::Mat::Zero(dense.rows(), dense.cols());
    for (std::size_t i = 0; i < n; ++i) total += oracle::on_site(oracle::pauli('z'), i, n);
    check((dense * total - total * dense).cwiseAbs().maxCoeff() <= 1e-10, "chain [H, S_z] = 0");
    const double wz = hz_to_angular(490e6);
    const auto dq = derive_quantities(TrapParams::from_frequencies(15.0 * wz, wz, gradient_for_epsilon(0.05, wz)));
    const MicroscopicSystem sys = build_microscopic(dq, dq, coulomb_scale(dq, 40e-6), o, {3, 3});
    check(excitation_leakage(sys) <= 1e-12, "microscopic N_exc leakage");
    check(hermiticity_residual(sys) <= 1e-12, "microscopic hermiticity");
  }

  // Unitarity of the propagator.
  {
    const SpinHamiltonian h = build_effective_hamiltonian(cm, 1.7, Orientation::AxialZ);
    const Propagator prop(h, {});
    const Eigen::Index dim = h.dimension();
    for (double t : {0.3, 7.0, 250.0}) {
      Eigen::MatrixXcd u_t(dim, dim);
      for (Eigen::Index s = 0; s < dim; ++s) u_t.col(s) = prop.apply(SpinState::basis(n, static_cast<std::uint64_t>(s)), t).amplitudes;
      check((u_t.adjoint() * u_t - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff() <= 1e-12, "U^dagger U = 1");
    }
  }

  // Dipolar cube law.
  {
    const auto dq = derive_quantities(TrapParams::from_frequencies(hz_to_angular(8e9), hz_to_angular(490e6), 1800.0));
    const auto m = coupling_matrix(dq, ChainGeometry::uniform(Orientation::AxialZ, 6, 10e-6));
    for (Eigen::Index k = 1; k < 6; ++k) {
      const double r3 = static_cast<double>(k * k * k);
      check(std::abs(m.jxy(0, k) * r3 / m.jxy(0, 1) - 1.0) <= 1e-12, "Jxy d^3 law");
      check(std::abs(m.jz(0, k) * r3 / m.jz(0, 1) - 1.0) <= 1e-12, "Jz d^3 law");
    }
  }

  // F_d evenness and range.
  for (double z = 0.0; z <= 20.0; z += 0.01) {
    check(fd(z) == fd(-z), "F_d even");
    check(fd(z) >= 0.0 && fd(z) <= 1.0, "F_d in [0, 1]");
  }

  // E_r vanishes at zero occupation.
  {
    const auto dq = derive_quantities(TrapParams::from_frequencies(hz_to_angular(8e9), hz_to_angular(490e6), 1800.0));
    for (double j : {1e2, 2e4, 1e6}) check(std::abs(error_residual(dq, {0.0, 0.0, 0.0}, j).e_r) <= 1e-15, "E_r(0) = 0");
  }

  // Thermal tail mass left by the cutoff.
  for (double m = 0.0; m <= 500.0; m += 0.05)
    check(thermal_tail_mass(m, thermal_cutoff(m)) < 1e-8, "thermal tail < 1e-8");

  std::sort(failed.begin(), failed.end());
  failed.erase(std::unique(failed.begin(), failed.end()), failed.end());
  std::string detail = failed.empty() ? "excitation conservation, unitarity, d^3 law, F_d evenness, E_r(0)=0, "
                                        "thermal tail < 1e-8: all hold"
                                      : "violated:";
  for (const auto& f : failed) detail += " [" + f + "]";
  return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "table1 couplings, rad/s reading", 1.0, table1_couplings},
      {2, "table1 fidelity targets, cases A and B", 10.0, table1_captions},
      {3, "F_d against the detuned two-spin model", 1.0, fd_certification},
      {4, "canonical error: N=2 reduction and Bloch quadrature", 5.0, canonical_consistency},
      {5, "microscopic oracle at eps=0.05, ratio 15", 60.0, microscopic_oracle},
      {6, "isotropy point at omega_c/omega_z = 18.8", 1.0, isotropy_point},
      {7, "property suite", 120.0, property_suite},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 1;
    }
  }
  if (only != 0 && (only < 1 || only > static_cast<int>(criteria.size()))) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 1;
  }

  bool all = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = out.pass && in_time;
    all = all && pass;
    std::printf("criterion %d: %s  %s | %s | %.2f s (budget %.0f s%s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), secs, c.budget_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return all ? 0 : 3;
}
