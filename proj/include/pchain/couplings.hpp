#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pchain/constants.hpp"
#include "pchain/errors.hpp"
#include "pchain/trap_model.hpp"

namespace pchain {

enum class Orientation { AxialZ, TransverseX };

constexpr std::string_view to_string(Orientation o) {
  return o == Orientation::AxialZ ? "AxialZ" : "TransverseX";
}

/// Linear array of traps. Positions are coordinates along the array axis (m).
struct ChainGeometry {
  Orientation orientation = Orientation::AxialZ;
  std::vector<double> positions;

  static ChainGeometry uniform(Orientation o, std::size_t n_sites, double spacing) {
    ChainGeometry g{o, {}};
    g.positions.reserve(n_sites);
    for (std::size_t i = 0; i < n_sites; ++i) g.positions.push_back(static_cast<double>(i) * spacing);
    return g;
  }

  std::size_t size() const { return positions.size(); }
  double distance(std::size_t i, std::size_t j) const { return std::abs(positions[j] - positions[i]); }

  void validate() const {
    if (positions.size() < 2) throw InvalidInput("a chain needs at least two sites");
    for (std::size_t i = 1; i < positions.size(); ++i)
      if (!(positions[i] > positions[i - 1]))
        throw InvalidInput("site positions must be strictly increasing");
  }
};

/// Pairwise couplings, all in rad/s. Symmetric with zero diagonal.
struct CouplingMatrix {
  Eigen::MatrixXd jz;
  Eigen::MatrixXd jxy;
  Eigen::MatrixXd xi;
  Eigen::MatrixXd distance;
  AnomalyMode mode = AnomalyMode::ExactG;
  bool nearest_neighbor_only = false;

  std::size_t size() const { return static_cast<std::size_t>(jz.rows()); }
};

struct CouplingOptions {
  bool force = false;                  // skip the regime gate
  bool nearest_neighbor_only = false;  // zero all but |i - j| = 1
};

struct PairCoupling {
  double xi = 0.0;
  double jz = 0.0;
  double jxy = 0.0;
};

/// omega_z^4 / (omega_a^2 omega_c_tilde^2): ratio of the flip-flop to the Ising
/// coupling up to the (g/4)^2 vs (g/2)^2 prefactors.
inline double flip_flop_frequency_factor(const DerivedQuantities& dq) {
  const double z2 = dq.omega_z * dq.omega_z;
  return z2 * z2 / (dq.omega_a * dq.omega_a * dq.omega_c_tilde * dq.omega_c_tilde);
}

/// Couplings between two traps a distance d apart.
///
/// Identical traps reproduce the closed forms
///   Jz  = (g/2)^2 xi eps^2
///   Jxy = (g/4)^2 xi eps^2 omega_z^4 / (omega_a^2 omega_c_tilde^2).
/// For dissimilar traps, epsilon, xi and the frequency factor are each taken
/// as the geometric mean of the two single-site values. That rule is a model
/// choice with no derivation behind it and lives only here.
inline PairCoupling pair_coupling(const DerivedQuantities& a, const DerivedQuantities& b, double d,
                                  const PhysicalConstants& c = {}) {
  const double xi = std::sqrt(coulomb_scale(a, d, c) * coulomb_scale(b, d, c));
  const double eps2 = a.epsilon * b.epsilon;
  const double factor = std::sqrt(flip_flop_frequency_factor(a) * flip_flop_frequency_factor(b));
  const double half_g = 0.5 * c.g;
  const double quarter_g = 0.25 * c.g;
  return {xi, half_g * half_g * xi * eps2, quarter_g * quarter_g * xi * eps2 * factor};
}

namespace detail {

inline void regime_gate(const DerivedQuantities& dq, double xi_max, const CouplingOptions& opt) {
  if (opt.force) return;
  // Occupation-independent gate; the magnetron condition is checked by callers
  // that know l_bar.
  const RegimeReport rep = validate_regime(dq, xi_max, 0.0);
  if (!rep.pass) {
    std::string failed;
    for (const auto& cnd : rep.conditions)
      if (!cnd.ok) failed += (failed.empty() ? "" : ", ") + cnd.name;
    throw RegimeError("regime validation failed (" + failed + "); set force to override");
  }
}

}  // namespace detail

/// Full dipolar coupling matrix for per-site trap parameters.
inline CouplingMatrix coupling_matrix(std::span<const DerivedQuantities> sites, const ChainGeometry& geom,
                                      const PhysicalConstants& c = {}, CouplingOptions opt = {}) {
  geom.validate();
  if (sites.size() != geom.size())
    throw InvalidInput("per-site trap parameters do not match the number of sites");
  for (const auto& s : sites)
    if (s.anomaly_mode != sites.front().anomaly_mode)
      throw InvalidInput("all sites must use the same anomaly mode");

  const auto n = static_cast<Eigen::Index>(geom.size());
  CouplingMatrix cm;
  cm.mode = sites.front().anomaly_mode;
  cm.nearest_neighbor_only = opt.nearest_neighbor_only;
  cm.jz = Eigen::MatrixXd::Zero(n, n);
  cm.jxy = Eigen::MatrixXd::Zero(n, n);
  cm.xi = Eigen::MatrixXd::Zero(n, n);
  cm.distance = Eigen::MatrixXd::Zero(n, n);

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = geom.distance(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const PairCoupling p = pair_coupling(sites[static_cast<std::size_t>(i)],
                                           sites[static_cast<std::size_t>(j)], d, c);
      cm.distance(i, j) = cm.distance(j, i) = d;
      cm.xi(i, j) = cm.xi(j, i) = p.xi;
      if (opt.nearest_neighbor_only && j != i + 1) continue;
      cm.jz(i, j) = cm.jz(j, i) = p.jz;
      cm.jxy(i, j) = cm.jxy(j, i) = p.jxy;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const double xi_max = cm.xi.row(i).maxCoeff();
    detail::regime_gate(sites[static_cast<std::size_t>(i)], xi_max, opt);
  }
  return cm;
}

/// Identical traps at every site.
inline CouplingMatrix coupling_matrix(const DerivedQuantities& dq, const ChainGeometry& geom,
                                      const PhysicalConstants& c = {}, CouplingOptions opt = {}) {
  const std::vector<DerivedQuantities> sites(geom.size(), dq);
  return coupling_matrix(std::span<const DerivedQuantities>(sites), geom, c, opt);
}

/// Two-spin state transfer time pi / (4 Jxy).
inline double swap_time(double jxy) {
  if (!(jxy > 0.0) || !std::isfinite(jxy)) throw ZeroCoupling("swap time needs Jxy > 0");
  return std::numbers::pi / (4.0 * jxy);
}

/// 2 Jz / Jxy = 8 omega_a^2 omega_c_tilde^2 / omega_z^4; equals 1 at the
/// isotropic Heisenberg point. Independent of gradient and distance.
inline double isotropy_ratio(const DerivedQuantities& dq) {
  return 8.0 / flip_flop_frequency_factor(dq);
}

}  // namespace pchain
