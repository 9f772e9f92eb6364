#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "pchain/constants.hpp"
#include "pchain/errors.hpp"
#include "pchain/parallel.hpp"
#include "pchain/quadrature.hpp"
#include "pchain/spin_chain.hpp"
#include "pchain/trap_model.hpp"

namespace pchain {

/// Mean occupation of an oscillator in a thermal state, 1 / (e^{hbar w / kT} - 1).
inline double occupation_from_temperature(double omega, double temperature, const PhysicalConstants& c = {}) {
  if (!(temperature >= 0.0) || !(omega > 0.0)) throw InvalidInput("temperature and frequency must be >= 0 and > 0");
  if (temperature == 0.0) return 0.0;
  return 1.0 / std::expm1(c.hbar * omega / (c.k_B * temperature));
}

struct ThermalOccupations {
  double k_bar = 0.0;  // axial
  double n_bar = 0.0;  // cyclotron
  double l_bar = 0.0;  // magnetron

  /// Axial and cyclotron modes thermalised at `temperature` (K); the
  /// magnetron mode is not thermal and l_bar is passed through.
  static ThermalOccupations from_temperature(const DerivedQuantities& dq, double temperature, double l_bar,
                                             const PhysicalConstants& c = {}) {
    return {occupation_from_temperature(dq.omega_z, temperature, c),
            occupation_from_temperature(dq.omega_c, temperature, c), l_bar};
  }

  void validate() const {
    if (!(k_bar >= 0.0 && n_bar >= 0.0 && l_bar >= 0.0) || !std::isfinite(k_bar + n_bar + l_bar))
      throw InvalidInput("mean occupations must be finite and >= 0");
  }
};

/// Geometric (thermal) Fock-state probability.
inline double thermal_prob(double m_bar, std::size_t m) {
  if (!(m_bar >= 0.0)) throw InvalidInput("mean occupation must be >= 0");
  if (m_bar == 0.0) return m == 0 ? 1.0 : 0.0;
  const double q = m_bar / (1.0 + m_bar);
  return std::pow(q, static_cast<double>(m)) / (1.0 + m_bar);
}

/// Per-oscillator cutoff M = ceil(m_bar ln 1e10) + 10.
inline std::size_t thermal_cutoff(double m_bar) {
  return static_cast<std::size_t>(std::ceil(m_bar * std::log(1e10))) + 10;
}

/// Probability beyond the cutoff, 1 - sum_{m<=M} P(m) = q^{M+1}.
inline double thermal_tail_mass(double m_bar, std::size_t cutoff) {
  if (m_bar == 0.0) return 0.0;
  return std::pow(m_bar / (1.0 + m_bar), static_cast<double>(cutoff + 1));
}

/// Bloch-averaged swap fidelity of two spins detuned by zeta = delta_s / (4 Jxy).
inline double fd(double zeta) {
  const double root = std::sqrt(1.0 + zeta * zeta);
  const double s = std::sin(0.5 * std::numbers::pi * root);
  const double a = s / root;
  return (1.0 + std::cos(0.5 * std::numbers::pi * zeta) * a + a * a) / 3.0;
}

/// Coefficients of delta_s = c_n (n2 - n1) - c_l (l2 - l1), rad/s.
struct DetuningCoefficients {
  double c_n;
  double c_l;
};

inline DetuningCoefficients detuning_coefficients(const DerivedQuantities& dq) {
  const double e2wz = dq.epsilon * dq.epsilon * dq.omega_z;
  const double z2 = dq.omega_z * dq.omega_z;
  return {e2wz * (z2 / (2.0 * dq.omega_c * dq.omega_a) - 2.0), e2wz * z2 / (2.0 * dq.omega_c * dq.omega_c)};
}

/// Motional-state dependent spin frequency shift (rad/s).
inline double spin_shift(const DerivedQuantities& dq, double n, double l) {
  if (n < 0.0 || l < 0.0) throw InvalidInput("Fock indices must be >= 0");
  const double e2wz = dq.epsilon * dq.epsilon * dq.omega_z;
  const double z2 = dq.omega_z * dq.omega_z;
  const double r = z2 / (2.0 * dq.omega_c * dq.omega_a);
  return e2wz * (r + (r - 2.0) * n - z2 / (2.0 * dq.omega_c * dq.omega_c) * l);
}

/// Spin-frequency detuning omega_2 - omega_1 between two electrons (rad/s).
inline double delta_s(const DerivedQuantities& dq, double n1, double l1, double n2, double l2) {
  if (n1 < 0.0 || l1 < 0.0 || n2 < 0.0 || l2 < 0.0) throw InvalidInput("Fock indices must be >= 0");
  const auto [c_n, c_l] = detuning_coefficients(dq);
  return c_n * (n2 - n1) - c_l * (l2 - l1);
}

struct ResidualOptions {
  std::size_t max_terms = 200000;  // per-oscillator cutoff cap
};

struct ResidualResult {
  double e_r = 0.0;
  double tail_mass = 0.0;  // probability left out of the four-fold sum
  std::size_t cutoff_n = 0;
  std::size_t cutoff_l = 0;
  std::vector<std::string> warnings;
};

namespace detail {

// w(k) = sum_{n=0}^{M-k} P(n) P(n+k), k = 0..M, in closed geometric form.
inline std::vector<double> difference_weights(double m_bar, std::size_t cutoff) {
  std::vector<double> w(cutoff + 1, 0.0);
  if (m_bar == 0.0) {
    w[0] = 1.0;
    return w;
  }
  const double q = m_bar / (1.0 + m_bar);
  const double p0 = 1.0 / (1.0 + m_bar);
  const double q2 = q * q;
  for (std::size_t k = 0; k <= cutoff; ++k) {
    const auto terms = static_cast<double>(cutoff - k + 1);
    w[k] = p0 * p0 * std::pow(q, static_cast<double>(k)) * -std::expm1(terms * std::log(q2)) / (1.0 - q2);
  }
  return w;
}

}  // namespace detail

/// Thermal average of the detuned-swap infidelity,
///   E_r = 1 - sum P(n1) P(l1) P(n2) P(l2) fd(delta_s / (4 Jxy)).
/// delta_s depends only on n2 - n1 and l2 - l1, so the sum runs over the two
/// differences with pair-correlation weights. The result is identical to the
/// four-fold sum at the same cutoffs.
inline ResidualResult error_residual(const DerivedQuantities& dq, const ThermalOccupations& occ, double jxy,
                                     const ResidualOptions& opt = {}) {
  occ.validate();
  if (!(jxy > 0.0) || !std::isfinite(jxy)) throw ZeroCoupling("residual error needs Jxy > 0");

  ResidualResult res;
  res.cutoff_n = thermal_cutoff(occ.n_bar);
  res.cutoff_l = thermal_cutoff(occ.l_bar);
  for (auto* m : {&res.cutoff_n, &res.cutoff_l})
    if (*m > opt.max_terms) {
      res.warnings.push_back("TruncationWarning: thermal cutoff " + std::to_string(*m) + " capped at " +
                             std::to_string(opt.max_terms));
      *m = opt.max_terms;
    }

  const std::vector<double> wn = detail::difference_weights(occ.n_bar, res.cutoff_n);
  const std::vector<double> wl = detail::difference_weights(occ.l_bar, res.cutoff_l);
  const auto [c_n, c_l] = detuning_coefficients(dq);
  const double inv4j = 1.0 / (4.0 * jxy);

  // Signed differences: index i -> dn = i - M.
  const std::size_t rows = 2 * res.cutoff_n + 1;
  std::vector<double> partial(rows, 0.0);
  parallel_for(rows, [&](std::size_t i) {
    const long dn = static_cast<long>(i) - static_cast<long>(res.cutoff_n);
    const double a = wn[static_cast<std::size_t>(std::labs(dn))];
    double acc = 0.0;
    for (long dl = -static_cast<long>(res.cutoff_l); dl <= static_cast<long>(res.cutoff_l); ++dl) {
      const double b = wl[static_cast<std::size_t>(std::labs(dl))];
      acc += b * fd((c_n * static_cast<double>(dn) - c_l * static_cast<double>(dl)) * inv4j);
    }
    partial[i] = a * acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;

  const double kept_n = 1.0 - thermal_tail_mass(occ.n_bar, res.cutoff_n);
  const double kept_l = 1.0 - thermal_tail_mass(occ.l_bar, res.cutoff_l);
  res.tail_mass = 1.0 - kept_n * kept_n * kept_l * kept_l;
  res.e_r = 1.0 - total;
  return res;
}

/// Bloch-averaged canonical-transformation error for an N-site chain.
inline double error_canonical_closed_form(const DerivedQuantities& dq, const ThermalOccupations& occ,
                                          std::size_t n_sites) {
  occ.validate();
  if (n_sites < 2) throw InvalidInput("chain needs N >= 2");
  const double n1 = static_cast<double>(n_sites) - 1.0;
  const double z2 = dq.omega_z * dq.omega_z;
  const double a = z2 / (dq.omega_a * dq.omega_a);
  const double b = z2 / ((dq.omega_s - dq.omega_m) * (dq.omega_s - dq.omega_m));
  return (2.0 * occ.k_bar + 1.0) / 3.0 +
         dq.omega_z / dq.omega_c / 6.0 *
             (a * (2.0 * occ.n_bar + 1.0 + 3.0 * n1 * occ.n_bar) +
              b * (2.0 * occ.l_bar + 1.0 + 3.0 * n1 * (occ.l_bar + 1.0)));
}

/// Single-site spin expectations entering the un-averaged error.
struct SiteExpectations {
  std::vector<double> sz;         // <sigma^z_i>
  std::vector<double> coherence;  // <sigma^-_i><sigma^+_i> = |<sigma^+_i>|^2
};

inline SiteExpectations site_expectations(const SpinState& psi) {
  SiteExpectations out;
  for (std::size_t i = 0; i < psi.n_sites; ++i) {
    const Eigen::Matrix2cd rho = reduced_density(psi, i);
    out.sz.push_back(rho(1, 1).real() - rho(0, 0).real());
    out.coherence.push_back(std::norm(rho(1, 0)));
  }
  return out;
}

/// Ideal swap: sender (theta, phi) on site 1 initially, on site N finally,
/// every other spin down.
inline std::pair<SiteExpectations, SiteExpectations> swap_time_expectations(std::size_t n_sites, double theta) {
  SiteExpectations init{std::vector<double>(n_sites, -1.0), std::vector<double>(n_sites, 0.0)};
  SiteExpectations fin = init;
  const double coh = 0.25 * std::sin(theta) * std::sin(theta);
  init.sz.front() = -std::cos(theta);
  init.coherence.front() = coh;
  fin.sz.back() = -std::cos(theta);
  fin.coherence.back() = coh;
  return {init, fin};
}

/// Which constants the un-averaged error uses. The Bloch-averaged closed form
/// is recovered exactly only with g = 2 and omega_c_tilde -> omega_c.
enum class CanonicalConventions { MatchClosedForm, Literal };

inline double error_canonical_unaveraged(const DerivedQuantities& dq, const ThermalOccupations& occ,
                                         const SiteExpectations& initial, const SiteExpectations& final_state,
                                         CanonicalConventions conv = CanonicalConventions::MatchClosedForm,
                                         const PhysicalConstants& c = {}) {
  occ.validate();
  const std::size_t n = initial.sz.size();
  if (n < 2 || final_state.sz.size() != n || initial.coherence.size() != n || final_state.coherence.size() != n)
    throw InvalidInput("site expectation vectors must all have length N >= 2");
  const bool literal = conv == CanonicalConventions::Literal;
  const double g = literal ? c.g : 2.0;
  const double cyc = literal ? dq.omega_c_tilde : dq.omega_c;
  const double g4 = 0.25 * g;
  const double z2 = dq.omega_z * dq.omega_z;
  const double a = z2 / (dq.omega_a * dq.omega_a);
  const double b = z2 / ((dq.omega_s - dq.omega_m) * (dq.omega_s - dq.omega_m));
  const double nn = 2.0 * occ.n_bar + 1.0;
  const double ll = 2.0 * occ.l_bar + 1.0;
  const double motional = occ.n_bar + dq.omega_m / dq.omega_c * occ.l_bar;

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z0 = initial.sz[i];
    const double zf = final_state.sz[i];
    acc += (g4 * g4 * (2.0 - z0 * z0 - zf * zf) + 0.5 * g * (z0 - zf) * motional) * (2.0 * occ.k_bar + 1.0);
    acc += g4 * g4 * dq.omega_z / cyc *
           (a * (nn + z0) + b * (ll - z0) - (a * nn + b * ll) * (initial.coherence[i] + final_state.coherence[i]));
  }
  return acc;
}

/// Un-averaged error at the swap time, integrated over the Bloch sphere.
inline double error_canonical_numeric(const DerivedQuantities& dq, const ThermalOccupations& occ, std::size_t n_sites,
                                      BlochGrid grid = {32, 64},
                                      CanonicalConventions conv = CanonicalConventions::MatchClosedForm,
                                      const PhysicalConstants& c = {}) {
  if (n_sites < 2) throw InvalidInput("chain needs N >= 2");
  return grid.average([&](double theta, double) {
    const auto [init, fin] = swap_time_expectations(n_sites, theta);
    return error_canonical_unaveraged(dq, occ, init, fin, conv, c);
  });
}

struct TransitionEstimate {
  std::string label;
  double probability = 0.0;
  bool flagged = false;  // above kTransitionFlag
};

inline constexpr double kTransitionFlag = 1e-4;

/// Order-of-magnitude transition probabilities of the residual couplings.
inline std::vector<TransitionEstimate> transition_probabilities(const DerivedQuantities& dq,
                                                                const ThermalOccupations& occ, double xi) {
  occ.validate();
  const double e2 = dq.epsilon * dq.epsilon;
  const double wz = dq.omega_z;
  const double detune = wz - dq.omega_a;
  const double coul = (xi / wz) * (xi / wz);
  std::vector<TransitionEstimate> out{
      {"axial_cyclotron_spin", e2 * e2 * wz * wz * wz / (dq.omega_c * detune * detune) * occ.k_bar * occ.n_bar},
      {"cross_particle", e2 * coul},
      {"cross_particle_cyclotron",
       e2 * coul * std::pow(wz / dq.omega_c, 3) * std::pow(wz / dq.omega_a, 4)},
  };
  for (auto& t : out) t.flagged = !(t.probability <= kTransitionFlag);
  return out;
}

struct FidelityReport {
  double total = 0.0;     // 1 - E_r - eps^2 E_S, not clamped
  double e_r = 0.0;
  double e_s = 0.0;
  double eps2_e_s = 0.0;
  double delta_s_spread = 0.0;  // rms of delta_s over the thermal state, rad/s
  double tail_mass = 0.0;
  std::size_t n_sites = 2;
  bool e_r_heuristic = false;  // N > 2: (N - 1) x pair value
  AnomalyMode mode = AnomalyMode::ExactG;
  std::vector<TransitionEstimate> transitions;
  std::vector<std::string> warnings;
};

inline FidelityReport total_fidelity(const DerivedQuantities& dq, const ThermalOccupations& occ, double jxy,
                                     std::size_t n_sites = 2, double xi = 0.0, const ResidualOptions& opt = {}) {
  const ResidualResult res = error_residual(dq, occ, jxy, opt);
  FidelityReport r;
  r.n_sites = n_sites;
  r.mode = dq.anomaly_mode;
  r.e_s = error_canonical_closed_form(dq, occ, n_sites);
  r.eps2_e_s = dq.epsilon * dq.epsilon * r.e_s;
  r.e_r = res.e_r;
  if (n_sites > 2) {
    r.e_r *= static_cast<double>(n_sites - 1);
    r.e_r_heuristic = true;
    r.warnings.push_back("E_r for N > 2 is a heuristic extension: (N - 1) x two-site value");
  }
  r.tail_mass = res.tail_mass;
  r.warnings.insert(r.warnings.end(), res.warnings.begin(), res.warnings.end());
  const auto [c_n, c_l] = detuning_coefficients(dq);
  r.delta_s_spread = std::sqrt(2.0 * (c_n * c_n * occ.n_bar * (occ.n_bar + 1.0) +
                                      c_l * c_l * occ.l_bar * (occ.l_bar + 1.0)));
  r.total = 1.0 - r.e_r - r.eps2_e_s;
  if (!(r.total >= 0.0 && r.total <= 1.0))
    r.warnings.push_back("fidelity outside [0, 1]: perturbative expansion not valid here");
  r.transitions = transition_probabilities(dq, occ, xi);
  for (const auto& t : r.transitions)
    if (t.flagged) r.warnings.push_back("transition estimate " + t.label + " above 1e-4");
  return r;
}

}  // namespace pchain
