#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include "pchain/constants.hpp"
#include "pchain/couplings.hpp"
#include "pchain/errors.hpp"
#include "pchain/quadrature.hpp"
#include "pchain/trap_model.hpp"

namespace pchain {

inline constexpr std::size_t kMicroscopicDimensionLimit = 16384;

/// Fock cutoffs per electron; the magnetron mode is not represented.
struct FockTruncation {
  std::size_t n_max = 3;  // cyclotron
  std::size_t k_max = 3;  // axial

  std::size_t electron_dimension() const { return 2 * (n_max + 1) * (k_max + 1); }
  std::size_t dimension() const { return electron_dimension() * electron_dimension(); }

  void validate(std::size_t limit = kMicroscopicDimensionLimit) const {
    if (n_max < 1 || k_max < 1) throw InvalidInput("Fock cutoffs must be >= 1");
    if (dimension() > limit)
      throw DimensionOverflow("two-electron Fock dimension " + std::to_string(dimension()) + " exceeds " +
                              std::to_string(limit));
  }
};

using SparseMatrixD = Eigen::SparseMatrix<double>;

/// Two electrons, each spin x cyclotron x axial, electron 1 first.
struct MicroscopicSystem {
  struct ElectronOps {
    SparseMatrixD sigma_plus, sigma_minus, sigma_z, a_c, a_z;
  };

  FockTruncation trunc;
  Orientation orientation = Orientation::AxialZ;
  double xi = 0.0;
  std::array<DerivedQuantities, 2> sites;
  std::array<ElectronOps, 2> ops;
  SparseMatrixD hamiltonian;  // rad/s
  std::vector<int> excitation;  // N_exc = sum n_c + number of up spins, per basis index

  /// Basis index of |s1, n1, k1; s2, n2, k2>, s = 0 (down) or 1 (up).
  Eigen::Index index(int s1, int n1, int k1, int s2, int n2, int k2) const {
    const auto nc = static_cast<int>(trunc.n_max + 1);
    const auto nz = static_cast<int>(trunc.k_max + 1);
    const auto d1 = static_cast<Eigen::Index>(trunc.electron_dimension());
    const Eigen::Index e1 = (s1 * nc + n1) * nz + k1;
    const Eigen::Index e2 = (s2 * nc + n2) * nz + k2;
    return e1 * d1 + e2;
  }

  Eigen::Index dimension() const { return hamiltonian.rows(); }
};

namespace detail {

inline SparseMatrixD sparse_identity(Eigen::Index n) {
  SparseMatrixD m(n, n);
  m.setIdentity();
  return m;
}

inline SparseMatrixD kron(const SparseMatrixD& a, const SparseMatrixD& b) {
  SparseMatrixD out = Eigen::kroneckerProduct(a, b);
  return out;
}

inline SparseMatrixD annihilation(std::size_t cutoff) {
  const auto n = static_cast<Eigen::Index>(cutoff + 1);
  SparseMatrixD a(n, n);
  for (Eigen::Index k = 1; k < n; ++k) a.insert(k - 1, k) = std::sqrt(static_cast<double>(k));
  a.makeCompressed();
  return a;
}

}  // namespace detail

/// Untransformed two-electron Hamiltonian after the rotating-wave reduction,
/// assembled term by term from tensor products.
inline MicroscopicSystem build_microscopic(const DerivedQuantities& dq1, const DerivedQuantities& dq2, double xi,
                                           Orientation orientation, FockTruncation trunc = {},
                                           const PhysicalConstants& c = {}) {
  trunc.validate();
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw InvalidInput("xi must be finite and >= 0");

  MicroscopicSystem sys;
  sys.trunc = trunc;
  sys.orientation = orientation;
  sys.xi = xi;
  sys.sites = {dq1, dq2};

  using detail::kron;
  const SparseMatrixD ic = detail::sparse_identity(static_cast<Eigen::Index>(trunc.n_max + 1));
  const SparseMatrixD iz = detail::sparse_identity(static_cast<Eigen::Index>(trunc.k_max + 1));
  const SparseMatrixD is = detail::sparse_identity(2);
  const SparseMatrixD ie = detail::sparse_identity(static_cast<Eigen::Index>(trunc.electron_dimension()));

  SparseMatrixD sp(2, 2), sz(2, 2);
  sp.insert(1, 0) = 1.0;  // |up><down|
  sz.insert(0, 0) = -1.0;
  sz.insert(1, 1) = 1.0;
  const SparseMatrixD sm = sp.transpose();
  const SparseMatrixD ac = detail::annihilation(trunc.n_max);
  const SparseMatrixD az = detail::annihilation(trunc.k_max);

  auto electron = [&](const SparseMatrixD& s, const SparseMatrixD& cy, const SparseMatrixD& ax) {
    return kron(kron(s, cy), ax);
  };
  auto embed = [&](int which, const SparseMatrixD& op) { return which == 0 ? kron(op, ie) : kron(ie, op); };

  const SparseMatrixD sp1 = electron(sp, ic, iz);
  const SparseMatrixD sm1 = electron(sm, ic, iz);
  const SparseMatrixD sz1 = electron(sz, ic, iz);
  const SparseMatrixD ac1 = electron(is, ac, iz);
  const SparseMatrixD az1 = electron(is, ic, az);

  const auto dim = static_cast<Eigen::Index>(trunc.dimension());
  SparseMatrixD h(dim, dim);
  for (int i = 0; i < 2; ++i) {
    const DerivedQuantities& q = sys.sites[static_cast<std::size_t>(i)];
    auto& o = sys.ops[static_cast<std::size_t>(i)];
    o.sigma_plus = embed(i, sp1);
    o.sigma_minus = embed(i, sm1);
    o.sigma_z = embed(i, sz1);
    o.a_c = embed(i, ac1);
    o.a_z = embed(i, az1);

    const SparseMatrixD acd = o.a_c.transpose();
    const SparseMatrixD azd = o.a_z.transpose();
    const SparseMatrixD x = o.a_z + azd;
    const double axial = 0.25 * c.g * q.epsilon * q.omega_z;
    const double jc = axial * std::sqrt(q.omega_z / q.omega_c_tilde);
    h += q.omega_c * SparseMatrixD(acd * o.a_c) + q.omega_z * SparseMatrixD(azd * o.a_z) +
         0.5 * q.omega_s * o.sigma_z + axial * SparseMatrixD(x * o.sigma_z) -
         jc * SparseMatrixD(o.sigma_plus * o.a_c + o.sigma_minus * acd);
  }

  const SparseMatrixD x1 = sys.ops[0].a_z + SparseMatrixD(sys.ops[0].a_z.transpose());
  const SparseMatrixD x2 = sys.ops[1].a_z + SparseMatrixD(sys.ops[1].a_z.transpose());
  const SparseMatrixD hop = sys.ops[0].a_c * SparseMatrixD(sys.ops[1].a_c.transpose()) +
                            SparseMatrixD(sys.ops[0].a_c.transpose()) * sys.ops[1].a_c;
  // omega_z / omega_c_tilde of the pair: geometric mean, as for the couplings.
  const double ratio = std::sqrt(dq1.omega_z / dq1.omega_c_tilde * dq2.omega_z / dq2.omega_c_tilde);
  if (orientation == Orientation::AxialZ)
    h += -2.0 * xi * SparseMatrixD(x1 * x2) + 2.0 * xi * ratio * hop;
  else
    h += xi * SparseMatrixD(x1 * x2) - xi * ratio * hop;
  h.prune(0.0);
  h.makeCompressed();
  sys.hamiltonian = h;

  sys.excitation.resize(static_cast<std::size_t>(dim));
  const auto nc = static_cast<Eigen::Index>(trunc.n_max + 1);
  const auto nz = static_cast<Eigen::Index>(trunc.k_max + 1);
  const auto d1 = static_cast<Eigen::Index>(trunc.electron_dimension());
  for (Eigen::Index s = 0; s < dim; ++s) {
    int total = 0;
    for (Eigen::Index e : {s / d1, s % d1}) {
      const Eigen::Index spin = e / (nc * nz);
      const Eigen::Index n = (e / nz) % nc;
      total += static_cast<int>(spin + n);
    }
    sys.excitation[static_cast<std::size_t>(s)] = total;
  }
  return sys;
}

/// max |H - H^T| / max |H|.
inline double hermiticity_residual(const MicroscopicSystem& sys) {
  const SparseMatrixD diff = sys.hamiltonian - SparseMatrixD(sys.hamiltonian.transpose());
  double num = 0.0, den = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrixD::InnerIterator it(diff, k); it; ++it) num = std::max(num, std::abs(it.value()));
  for (Eigen::Index k = 0; k < sys.hamiltonian.outerSize(); ++k)
    for (SparseMatrixD::InnerIterator it(sys.hamiltonian, k); it; ++it) den = std::max(den, std::abs(it.value()));
  return den > 0.0 ? num / den : 0.0;
}

/// Largest matrix element connecting different N_exc values, relative to max |H|.
inline double excitation_leakage(const MicroscopicSystem& sys) {
  double leak = 0.0, den = 0.0;
  for (Eigen::Index k = 0; k < sys.hamiltonian.outerSize(); ++k)
    for (SparseMatrixD::InnerIterator it(sys.hamiltonian, k); it; ++it) {
      den = std::max(den, std::abs(it.value()));
      if (sys.excitation[static_cast<std::size_t>(it.row())] != sys.excitation[static_cast<std::size_t>(it.col())])
        leak = std::max(leak, std::abs(it.value()));
    }
  return den > 0.0 ? leak / den : 0.0;
}

/// Exact eigensystem of one N_exc block. Energies are stored relative to
/// `shift` (a diagonal element of the block) to keep the small splittings
/// well resolved next to the large spin and cyclotron energies.
struct SectorSpectrum {
  int excitations = 0;
  double shift = 0.0;
  std::vector<Eigen::Index> basis;
  Eigen::VectorXd values;  // E - shift
  Eigen::MatrixXd vectors;

  Eigen::Index local(Eigen::Index global) const {
    const auto it = std::find(basis.begin(), basis.end(), global);
    if (it == basis.end()) throw InvalidInput("state is not in this excitation sector");
    return static_cast<Eigen::Index>(it - basis.begin());
  }
};

inline SectorSpectrum sector_spectrum(const MicroscopicSystem& sys, int excitations) {
  SectorSpectrum sec;
  sec.excitations = excitations;
  std::vector<Eigen::Index> pos(static_cast<std::size_t>(sys.dimension()), -1);
  for (Eigen::Index s = 0; s < sys.dimension(); ++s)
    if (sys.excitation[static_cast<std::size_t>(s)] == excitations) {
      pos[static_cast<std::size_t>(s)] = static_cast<Eigen::Index>(sec.basis.size());
      sec.basis.push_back(s);
    }
  if (sec.basis.empty()) throw InvalidInput("empty excitation sector");
  const auto m = static_cast<Eigen::Index>(sec.basis.size());
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index col = 0; col < m; ++col)
    for (SparseMatrixD::InnerIterator it(sys.hamiltonian, sec.basis[static_cast<std::size_t>(col)]); it; ++it) {
      const Eigen::Index row = pos[static_cast<std::size_t>(it.row())];
      if (row < 0) throw InvalidInput("Hamiltonian couples different excitation sectors");
      block(row, col) = it.value();
    }
  sec.shift = block(0, 0);
  block.diagonal().array() -= sec.shift;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
  sec.values = es.eigenvalues();
  sec.vectors = es.eigenvectors();
  return sec;
}

/// Analytic pair couplings for the oracle's two sites (same rule as the chain).
inline PairCoupling oracle_prediction(const MicroscopicSystem& sys, const PhysicalConstants& c = {}) {
  const double eps2 = sys.sites[0].epsilon * sys.sites[1].epsilon;
  const double factor =
      std::sqrt(flip_flop_frequency_factor(sys.sites[0]) * flip_flop_frequency_factor(sys.sites[1]));
  const double half_g = 0.5 * c.g, quarter_g = 0.25 * c.g;
  return {sys.xi, half_g * half_g * sys.xi * eps2, quarter_g * quarter_g * sys.xi * eps2 * factor};
}

/// Flip-flop matrix element of the effective two-spin model for a given
/// orientation: +2 Jxy (axial array) or -Jxy (transverse array).
inline double flip_flop_element(Orientation o, double jxy) {
  return o == Orientation::AxialZ ? 2.0 * jxy : -jxy;
}

/// Ising (sigma^z sigma^z) coefficient: -2 Jz (axial array) or +Jz (transverse array).
inline double ising_element(Orientation o, double jz) {
  return o == Orientation::AxialZ ? -2.0 * jz : jz;
}

enum class OracleInitialState {
  Dressed,  // bare spin state projected onto the dressed flip-flop pair
  Bare,     // bare |up down> with both motional modes in the ground state
};

struct FlipFlopMeasurement {
  double flip_flop = 0.0;          // signed element from the dressed-pair splitting, rad/s
  double jxy_measured = 0.0;       // oscillation angular frequency / 4, rad/s
  double jxy_from_splitting = 0.0;  // |splitting| / 4
  double jxy_effective = 0.0;      // flip_flop converted with the orientation's convention
  double predicted_flip_flop = 0.0;
  double pair_overlap = 0.0;       // mean bare-state weight in the dressed pair
  double contrast = 0.0;           // of the fitted population signal
  double bare_contrast = 0.0;      // same signal for the bare initial state
};

struct FitOptions {
  std::size_t points = 4096;
  double periods = 2.0;
  double min_contrast = 0.9;
  OracleInitialState initial = OracleInitialState::Dressed;
};

namespace detail {

// First maximum of samples y(t_i) above half the global maximum, refined by a
// parabola through the neighbouring samples. Returns the refined time.
inline double first_peak(const std::vector<double>& y, double dt) {
  const double top = *std::max_element(y.begin(), y.end());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    if (y[i] >= y[i - 1] && y[i] > y[i + 1] && y[i] > 0.5 * top) {
      const double denom = y[i - 1] - 2.0 * y[i] + y[i + 1];
      const double shift = denom != 0.0 ? 0.5 * (y[i - 1] - y[i + 1]) / denom : 0.0;
      return (static_cast<double>(i) + shift) * dt;
    }
  }
  throw FitFailure("no population maximum inside the fit window");
}

inline std::vector<double> population_signal(const SectorSpectrum& sec, const Eigen::VectorXd& initial,
                                             const Eigen::VectorXd& target, double dt, std::size_t points) {
  // Amplitude <target| e^{-iHt} |initial> in the eigenbasis.
  const Eigen::VectorXd ci = sec.vectors.transpose() * initial;
  const Eigen::VectorXd ct = sec.vectors.transpose() * target;
  std::vector<double> y(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) * dt;
    std::complex<double> amp{};
    for (Eigen::Index k = 0; k < sec.values.size(); ++k)
      amp += ct(k) * ci(k) * std::polar(1.0, -sec.values(k) * t);
    y[i] = std::norm(amp);
  }
  return y;
}

inline double contrast_of(const std::vector<double>& y) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  return *hi - *lo;
}

}  // namespace detail

/// Measures the effective flip-flop coupling from the N_exc = 1 block: the
/// dressed |up down> / |down up> pair splits by twice the flip-flop element,
/// and the population oscillates at that splitting. The oscillation is
/// sampled over `periods` predicted periods and its first maximum located.
inline FlipFlopMeasurement extract_effective_jxy(const MicroscopicSystem& sys, const FitOptions& fit = {},
                                                 const PhysicalConstants& c = {}) {
  const SectorSpectrum sec = sector_spectrum(sys, 1);
  const Eigen::Index u = sec.local(sys.index(1, 0, 0, 0, 0, 0));
  const Eigen::Index v = sec.local(sys.index(0, 0, 0, 1, 0, 0));

  FlipFlopMeasurement m;
  m.predicted_flip_flop = flip_flop_element(sys.orientation, oracle_prediction(sys, c).jxy);

  // Dressed pair: the two eigenvectors with the largest weight on {u, v}.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(sec.values.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  auto weight = [&](Eigen::Index k) {
    return sec.vectors(u, k) * sec.vectors(u, k) + sec.vectors(v, k) * sec.vectors(v, k);
  };
  std::partial_sort(order.begin(), order.begin() + 2, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return weight(a) > weight(b); });
  const Eigen::Index ka = order[0], kb = order[1];
  m.pair_overlap = 0.5 * (weight(ka) + weight(kb));

  const double split = sec.values(kb) - sec.values(ka);
  // Symmetric combination (u + v) sits at +F, antisymmetric at -F.
  const double sym_a = sec.vectors(u, ka) * sec.vectors(v, ka);
  const double sym_b = sec.vectors(u, kb) * sec.vectors(v, kb);
  m.flip_flop = sym_a > sym_b ? -0.5 * split : 0.5 * split;
  m.jxy_from_splitting = 0.25 * std::abs(split);
  m.jxy_effective = sys.orientation == Orientation::AxialZ ? 0.5 * m.flip_flop : -m.flip_flop;

  // Zero coupling: degenerate pair, no oscillation to fit.
  const double scale = std::max(std::abs(m.predicted_flip_flop), std::abs(m.flip_flop));
  if (scale == 0.0 || std::abs(split) <= 1e-12 * std::max(1.0, std::abs(sec.shift))) {
    m.flip_flop = m.jxy_from_splitting = m.jxy_effective = 0.0;
    return m;
  }

  const double omega_window = 2.0 * (m.predicted_flip_flop != 0.0 ? std::abs(m.predicted_flip_flop) : scale);
  const double dt = fit.periods * 2.0 * std::numbers::pi / omega_window / static_cast<double>(fit.points - 1);

  Eigen::VectorXd bare_u = Eigen::VectorXd::Zero(sec.values.size());
  Eigen::VectorXd bare_v = bare_u;
  bare_u(u) = 1.0;
  bare_v(v) = 1.0;
  const std::vector<double> bare = detail::population_signal(sec, bare_u, bare_v, dt, fit.points);
  m.bare_contrast = detail::contrast_of(bare);

  std::vector<double> signal = bare;
  if (fit.initial == OracleInitialState::Dressed) {
    auto project = [&](const Eigen::VectorXd& b) {
      Eigen::VectorXd p = sec.vectors.col(ka) * sec.vectors.col(ka).dot(b) + sec.vectors.col(kb) * sec.vectors.col(kb).dot(b);
      return Eigen::VectorXd(p.normalized());
    };
    signal = detail::population_signal(sec, project(bare_u), project(bare_v), dt, fit.points);
  }
  m.contrast = detail::contrast_of(signal);
  if (m.contrast < fit.min_contrast)
    throw FitFailure("flip-flop oscillation contrast " + std::to_string(m.contrast) + " below " +
                     std::to_string(fit.min_contrast));
  const double t_peak = detail::first_peak(signal, dt);
  m.jxy_measured = 0.25 * std::numbers::pi / t_peak;
  return m;
}

struct IsingMeasurement {
  double combination = 0.0;  // E(uu) + E(dd) - E(ud) - E(du), rad/s
  double ising = 0.0;        // sigma^z sigma^z coefficient = combination / 4
  double jz_measured = 0.0;  // converted with the orientation's convention
  double predicted_ising = 0.0;
  double min_overlap = 0.0;  // smallest bare-state weight among the tracked dressed states
};

inline constexpr double kTrackingThreshold = 0.9;

/// Effective sigma^z sigma^z coefficient from the dressed eigenstates adiabatically
/// connected to the four spin configurations with motion in the ground state.
inline IsingMeasurement extract_effective_jz(const MicroscopicSystem& sys, const PhysicalConstants& c = {}) {
  IsingMeasurement m;
  m.predicted_ising = ising_element(sys.orientation, oracle_prediction(sys, c).jz);

  auto tracked = [&](const SectorSpectrum& sec, Eigen::Index bare, double& overlap) {
    const Eigen::Index b = sec.local(bare);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < sec.values.size(); ++k)
      if (std::abs(sec.vectors(b, k)) > std::abs(sec.vectors(b, best))) best = k;
    overlap = sec.vectors(b, best) * sec.vectors(b, best);
    return best;
  };

  const SectorSpectrum s0 = sector_spectrum(sys, 0);
  const SectorSpectrum s1 = sector_spectrum(sys, 1);
  const SectorSpectrum s2 = sector_spectrum(sys, 2);

  double o_dd = 0.0, o_uu = 0.0;
  const Eigen::Index k_dd = tracked(s0, sys.index(0, 0, 0, 0, 0, 0), o_dd);
  const Eigen::Index k_uu = tracked(s2, sys.index(1, 0, 0, 1, 0, 0), o_uu);

  // The flip-flop pair: E(ud) + E(du) is the trace of the effective 2x2 block.
  const Eigen::Index u = s1.local(sys.index(1, 0, 0, 0, 0, 0));
  const Eigen::Index v = s1.local(sys.index(0, 0, 0, 1, 0, 0));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s1.values.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  auto weight = [&](Eigen::Index k) {
    return s1.vectors(u, k) * s1.vectors(u, k) + s1.vectors(v, k) * s1.vectors(v, k);
  };
  std::partial_sort(order.begin(), order.begin() + 2, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) { return weight(a) > weight(b); });
  const double o_pair = 0.5 * (weight(order[0]) + weight(order[1]));

  m.min_overlap = std::min({o_dd, o_uu, o_pair});
  if (m.min_overlap < kTrackingThreshold)
    throw StateTrackingFailure("dressed-state overlap " + std::to_string(m.min_overlap) + " below " +
                               std::to_string(kTrackingThreshold));

  const double shifts = (s2.shift + s0.shift) - 2.0 * s1.shift;
  m.combination = shifts + s2.values(k_uu) + s0.values(k_dd) - s1.values(order[0]) - s1.values(order[1]);
  m.ising = 0.25 * m.combination;
  m.jz_measured = sys.orientation == Orientation::AxialZ ? -0.5 * m.ising : m.ising;
  return m;
}

// ---- two-spin detuned model ------------------------------------------------

/// H_sd / hbar in the basis {dd, du, ud, uu} (site 1 is the high bit).
inline Eigen::Matrix4d hsd_matrix(double omega1, double omega2, double jxy, double jz) {
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  for (int s = 0; s < 4; ++s) {
    const double z1 = (s & 2) ? 1.0 : -1.0;
    const double z2 = (s & 1) ? 1.0 : -1.0;
    h(s, s) = 0.5 * omega1 * z1 + 0.5 * omega2 * z2 - 2.0 * jz * z1 * z2;
  }
  h(1, 2) = h(2, 1) = 2.0 * jxy;
  return h;
}

inline Eigen::Matrix4cd hsd_propagator(double omega1, double omega2, double jxy, double jz, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(hsd_matrix(omega1, omega2, jxy, jz));
  Eigen::Vector4cd phases;
  for (int k = 0; k < 4; ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k) * t);
  const Eigen::Matrix4cd v = es.eigenvectors().cast<std::complex<double>>();
  return v * phases.asDiagonal() * v.transpose();
}

/// <du| U(t) |ud> with the Ising phase e^{-2 i Jz t} removed.
inline std::complex<double> hsd_branch_amplitude(double omega1, double omega2, double jxy, double jz, double t) {
  return hsd_propagator(omega1, omega2, jxy, jz, t)(1, 2) * std::polar(1.0, 2.0 * jz * t);
}

/// Bloch-averaged swap fidelity of the detuned pair. The reference is the
/// same pair with both spins at omega1; the fidelity is the squared overlap
/// of the two evolved two-spin states for sender (theta, phi) on site 1.
inline double hsd_fidelity(double omega1, double omega2, double jxy, double jz, double t, BlochGrid grid = {}) {
  const Eigen::Matrix4cd u = hsd_propagator(omega1, omega2, jxy, jz, t);
  const Eigen::Matrix4cd u_ref = hsd_propagator(omega1, omega1, jxy, jz, t);
  const Eigen::Vector4cd a_dd = u.col(0), a_ud = u.col(2);
  const Eigen::Vector4cd r_dd = u_ref.col(0), r_ud = u_ref.col(2);
  return grid.average([&](double theta, double phi) {
    const double cth = std::cos(0.5 * theta);
    const std::complex<double> s = std::polar(std::sin(0.5 * theta), phi);
    const Eigen::Vector4cd psi = cth * a_dd + s * a_ud;
    const Eigen::Vector4cd ref = cth * r_dd + s * r_ud;
    return std::norm(ref.dot(psi));
  });
}

}  // namespace pchain
