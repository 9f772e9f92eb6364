#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pchain/constants.hpp"
#include "pchain/errors.hpp"

namespace pchain {

/// How the anomaly frequency omega_a is obtained.
///  ExactG    : omega_a = omega_s - omega_c = (g/2 - 1) omega_c
///  Approx1e3 : omega_a = 1e-3 omega_c (the round value behind the "10^6"
///              prefactor of the closed-form flip-flop coupling)
enum class AnomalyMode { ExactG, Approx1e3 };

constexpr std::string_view to_string(AnomalyMode mode) {
  return mode == AnomalyMode::ExactG ? "ExactG" : "Approx1e3";
}

struct AxialFrequency {
  double omega;  // rad/s
};

struct ElectrodeSpec {
  double V0;   // V
  double ell;  // m
};

struct TrapParams {
  double B0 = 0.0;  // T
  double b = 0.0;   // T/m
  std::variant<AxialFrequency, ElectrodeSpec> axial = AxialFrequency{0.0};
  AnomalyMode anomaly_mode = AnomalyMode::ExactG;

  /// Builds parameters from angular cyclotron/axial frequencies, inverting
  /// omega_c = |e| B0 / m_e.
  static TrapParams from_frequencies(double omega_c, double omega_z, double b,
                                     AnomalyMode mode = AnomalyMode::ExactG,
                                     const PhysicalConstants& c = {}) {
    TrapParams p;
    p.B0 = omega_c * c.m_e / c.e;
    p.b = b;
    p.axial = AxialFrequency{omega_z};
    p.anomaly_mode = mode;
    return p;
  }

  void validate() const {
    if (!(B0 > 0.0) || !std::isfinite(B0)) throw InvalidInput("B0 must be > 0");
    if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidInput("gradient b must be >= 0");
    if (const auto* f = std::get_if<AxialFrequency>(&axial)) {
      if (!(f->omega > 0.0)) throw InvalidInput("axial frequency must be > 0");
    } else {
      const auto& el = std::get<ElectrodeSpec>(axial);
      if (!(el.V0 > 0.0) || !(el.ell > 0.0))
        throw InvalidInput("trap voltage V0 and length ell must be > 0");
    }
  }
};

struct DerivedQuantities {
  double omega_m = 0.0;
  double omega_c = 0.0;
  double omega_z = 0.0;
  double omega_s = 0.0;
  double omega_a = 0.0;
  double omega_c_tilde = 0.0;
  double delta_z = 0.0;  // axial ground-state amplitude, m
  double epsilon = 0.0;  // gradient coupling
  AnomalyMode anomaly_mode = AnomalyMode::ExactG;
  std::vector<std::string> warnings;
};

enum class HierarchyCheck { Enforce, ReportOnly };

namespace detail {

// "<<" is read as a factor-10 separation; 5..10 warns, below 5 is an error.
inline constexpr double kHierarchyOk = 10.0;
inline constexpr double kHierarchyHard = 5.0;

inline void check_separation(double low, double high, std::string_view what,
                             HierarchyCheck policy, std::vector<std::string>& warnings) {
  const double sep = high / low;
  if (sep >= kHierarchyOk) return;
  std::string msg = std::string(what) + " separation is only " + std::to_string(sep);
  if (sep < kHierarchyHard && policy == HierarchyCheck::Enforce) throw HierarchyViolation(msg);
  warnings.push_back(std::move(msg));
}

}  // namespace detail

/// Axial ground-state amplitude sqrt(hbar / (2 m_e omega_z)).
inline double axial_amplitude(double omega_z, const PhysicalConstants& c = {}) {
  return std::sqrt(c.hbar / (2.0 * c.m_e * omega_z));
}

/// Gradient b (T/m) that yields the requested epsilon at axial frequency omega_z.
inline double gradient_for_epsilon(double epsilon, double omega_z, const PhysicalConstants& c = {}) {
  return epsilon * c.m_e * omega_z / (c.e * axial_amplitude(omega_z, c));
}

inline DerivedQuantities derive_quantities(const TrapParams& params, const PhysicalConstants& c = {},
                                           HierarchyCheck policy = HierarchyCheck::Enforce) {
  params.validate();
  c.validate();

  DerivedQuantities dq;
  dq.anomaly_mode = params.anomaly_mode;
  dq.omega_c = c.e * params.B0 / c.m_e;
  if (const auto* f = std::get_if<AxialFrequency>(&params.axial)) {
    dq.omega_z = f->omega;
  } else {
    const auto& el = std::get<ElectrodeSpec>(params.axial);
    dq.omega_z = std::sqrt(2.0 * c.e * el.V0 / (c.m_e * el.ell * el.ell));
  }

  const double tilde_sq = dq.omega_c * dq.omega_c - 2.0 * dq.omega_z * dq.omega_z;
  if (!(tilde_sq > 0.0))
    throw ComplexFrequency("omega_c^2 < 2 omega_z^2: modified cyclotron frequency is not real");
  dq.omega_c_tilde = std::sqrt(tilde_sq);

  dq.omega_m = dq.omega_z * dq.omega_z / (2.0 * dq.omega_c);
  dq.omega_s = 0.5 * c.g * dq.omega_c;
  dq.omega_a = params.anomaly_mode == AnomalyMode::ExactG ? dq.omega_s - dq.omega_c
                                                          : 1e-3 * dq.omega_c;

  detail::check_separation(dq.omega_m, dq.omega_z, "omega_z/omega_m", policy, dq.warnings);
  detail::check_separation(dq.omega_z, dq.omega_c, "omega_c/omega_z", policy, dq.warnings);

  dq.delta_z = axial_amplitude(dq.omega_z, c);
  dq.epsilon = c.e * params.b * dq.delta_z / (c.m_e * dq.omega_z);
  return dq;
}

/// Coulomb coupling rate xi = e^2 / (8 pi eps0 m_e omega_z d^3), rad/s.
inline double coulomb_scale(double omega_z, double d, const PhysicalConstants& c = {}) {
  if (!(d > 0.0)) throw InvalidInput("inter-trap distance must be > 0");
  return c.e * c.e / (8.0 * std::numbers::pi * c.eps0 * c.m_e * omega_z * d * d * d);
}

inline double coulomb_scale(const DerivedQuantities& dq, double d, const PhysicalConstants& c = {}) {
  return coulomb_scale(dq.omega_z, d, c);
}

struct RegimeCondition {
  std::string name;
  double ratio = 0.0;  // small-parameter value; must stay below the threshold
  bool ok = true;
};

struct RegimeReport {
  static constexpr double kThreshold = 0.1;
  std::vector<RegimeCondition> conditions;
  bool pass = true;
};

/// Margin ratios for every "much smaller than" assumption behind the model.
/// Report only: never throws.
inline RegimeReport validate_regime(const DerivedQuantities& dq, double xi, double l_bar) {
  RegimeReport report;
  auto add = [&](std::string name, double ratio) {
    const bool ok = std::isfinite(ratio) && ratio < RegimeReport::kThreshold;
    report.conditions.push_back({std::move(name), ratio, ok});
    report.pass = report.pass && ok;
  };
  add("hierarchy_omega_m_over_omega_z", dq.omega_m / dq.omega_z);
  add("hierarchy_omega_z_over_omega_c", dq.omega_z / dq.omega_c);
  add("magnetron_occupation", l_bar * dq.omega_m / dq.omega_c);
  add("gradient_perturbative_epsilon", dq.epsilon);
  // b |z - z0| / B0 evaluated at the axial ground-state amplitude.
  add("weak_gradient_field", dq.epsilon * dq.omega_z / dq.omega_c);
  add("coulomb_over_axial", xi / dq.omega_z);
  add("transverse_rwa", xi * (dq.omega_z / dq.omega_c_tilde) / dq.omega_c);
  return report;
}

}  // namespace pchain
