#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pchain/couplings.hpp"
#include "pchain/errors.hpp"
#include "pchain/parallel.hpp"
#include "pchain/quadrature.hpp"

namespace pchain {

using Complex = std::complex<double>;

// Basis convention: tensor order site 1 ... site N with site 1 the most
// significant bit; per site |down> = 0, |up> = 1.
inline std::uint64_t site_mask(std::size_t n_sites, std::size_t site) {
  return std::uint64_t{1} << (n_sites - 1 - site);
}

struct SpinState {
  std::size_t n_sites = 0;
  Eigen::VectorXcd amplitudes;

  static SpinState basis(std::size_t n_sites, std::uint64_t index) {
    SpinState s{n_sites, Eigen::VectorXcd::Zero(Eigen::Index{1} << n_sites)};
    s.amplitudes(static_cast<Eigen::Index>(index)) = 1.0;
    return s;
  }

  /// (cos(theta/2)|down> + e^{i phi} sin(theta/2)|up>) on site 1, all other
  /// spins down.
  static SpinState sender(std::size_t n_sites, double theta, double phi) {
    SpinState s{n_sites, Eigen::VectorXcd::Zero(Eigen::Index{1} << n_sites)};
    s.amplitudes(0) = std::cos(0.5 * theta);
    s.amplitudes(static_cast<Eigen::Index>(site_mask(n_sites, 0))) =
        std::polar(std::sin(0.5 * theta), phi);
    return s;
  }

  double norm() const { return amplitudes.norm(); }
};

/// Effective spin Hamiltonian divided by hbar (rad/s). The matrix is real
/// symmetric in the computational basis.
struct SpinHamiltonian {
  std::size_t n_sites = 0;
  Orientation orientation = Orientation::AxialZ;
  double omega_s = 0.0;
  AnomalyMode mode = AnomalyMode::ExactG;
  Eigen::SparseMatrix<double> matrix;

  Eigen::Index dimension() const { return matrix.rows(); }
};

inline constexpr std::size_t kDefaultMaxSites = 14;

namespace detail {

// Diagonal (sigma^z sigma^z) and flip-flop coefficients of one pair, as
// printed for each orientation:
//   AxialZ      : -(2Jz zz - Jxy xx - Jxy yy)         -> zz: -2Jz, flip: +2Jxy
//   TransverseX : +(1/2)(2Jz zz - Jxy xx - Jxy yy)    -> zz: +Jz,  flip: -Jxy
// using xx + yy = 2 (s+ s- + s- s+).
struct PairTerms {
  double ising;
  double flip;
};

inline PairTerms pair_terms(Orientation o, double jz, double jxy) {
  if (o == Orientation::AxialZ) return {-2.0 * jz, 2.0 * jxy};
  return {jz, -jxy};
}

}  // namespace detail

inline SpinHamiltonian build_effective_hamiltonian(const CouplingMatrix& cm, double omega_s,
                                                   Orientation orientation,
                                                   std::size_t max_sites = kDefaultMaxSites) {
  const std::size_t n = cm.size();
  if (n < 2) throw InvalidInput("spin Hamiltonian needs at least two sites");
  if (n > max_sites || n > 62)
    throw DimensionOverflow("N = " + std::to_string(n) + " exceeds the dense limit of " +
                            std::to_string(max_sites) + " sites");
  if (!cm.jz.isApprox(cm.jz.transpose()) || !cm.jxy.isApprox(cm.jxy.transpose()))
    throw InvalidInput("coupling matrix must be symmetric");

  const std::uint64_t dim = std::uint64_t{1} << n;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(dim * (1 + n));

  for (std::uint64_t s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double si = (s & site_mask(n, i)) ? 1.0 : -1.0;
      diag += 0.5 * omega_s * si;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double sj = (s & site_mask(n, j)) ? 1.0 : -1.0;
        const auto t = detail::pair_terms(orientation, cm.jz(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                                          cm.jxy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        diag += t.ising * si * sj;
        if (si != sj && t.flip != 0.0) {
          const std::uint64_t flipped = s ^ site_mask(n, i) ^ site_mask(n, j);
          triplets.emplace_back(static_cast<int>(flipped), static_cast<int>(s), t.flip);
        }
      }
    }
    triplets.emplace_back(static_cast<int>(s), static_cast<int>(s), diag);
  }

  SpinHamiltonian h;
  h.n_sites = n;
  h.orientation = orientation;
  h.omega_s = omega_s;
  h.mode = cm.mode;
  h.matrix.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  h.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

/// Exact propagator exp(-i H t) from the eigendecomposition of each
/// fixed-magnetisation block. H conserves the number of up spins, so the
/// blocks are exact.
class Propagator {
 public:
  /// Diagonalises the listed excitation sectors (all sectors when empty).
  explicit Propagator(const SpinHamiltonian& h, std::span<const std::size_t> sectors = {})
      : n_sites_(h.n_sites), blocks_(h.n_sites + 1) {
    std::vector<std::size_t> wanted(sectors.begin(), sectors.end());
    if (wanted.empty())
      for (std::size_t k = 0; k <= n_sites_; ++k) wanted.push_back(k);

    const auto dim = static_cast<std::uint64_t>(h.dimension());
    std::vector<Eigen::Index> local(dim, -1);
    for (std::size_t k : wanted) {
      if (k > n_sites_) throw InvalidInput("excitation sector out of range");
      Block b;
      for (std::uint64_t s = 0; s < dim; ++s)
        if (static_cast<std::size_t>(std::popcount(s)) == k) {
          local[s] = static_cast<Eigen::Index>(b.basis.size());
          b.basis.push_back(static_cast<Eigen::Index>(s));
        }
      const auto m = static_cast<Eigen::Index>(b.basis.size());
      Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index c = 0; c < m; ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(h.matrix, b.basis[static_cast<std::size_t>(c)]); it; ++it) {
          const Eigen::Index r = local[static_cast<std::size_t>(it.row())];
          if (r < 0) throw InvalidInput("Hamiltonian does not conserve the excitation number");
          dense(r, c) = it.value();
        }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
      b.values = es.eigenvalues();
      b.vectors = es.eigenvectors();
      for (Eigen::Index i : b.basis) local[static_cast<std::size_t>(i)] = -1;
      blocks_[k] = std::move(b);
    }
  }

  std::size_t n_sites() const { return n_sites_; }

  SpinState apply(const SpinState& psi, double t) const {
    if (psi.n_sites != n_sites_) throw InvalidInput("state and Hamiltonian sizes differ");
    SpinState out{n_sites_, Eigen::VectorXcd::Zero(psi.amplitudes.size())};
    for (std::size_t k = 0; k <= n_sites_; ++k) {
      const bool has_support = sector_support(psi, k);
      if (!has_support) continue;
      if (!blocks_[k]) throw InvalidInput("state has weight in an excitation sector that was not prepared");
      const Block& b = *blocks_[k];
      const auto m = static_cast<Eigen::Index>(b.basis.size());
      Eigen::VectorXcd x(m);
      for (Eigen::Index i = 0; i < m; ++i) x(i) = psi.amplitudes(b.basis[static_cast<std::size_t>(i)]);
      Eigen::VectorXcd c = b.vectors.transpose().cast<Complex>() * x;
      for (Eigen::Index i = 0; i < m; ++i) c(i) *= std::polar(1.0, -b.values(i) * t);
      const Eigen::VectorXcd y = b.vectors.cast<Complex>() * c;
      for (Eigen::Index i = 0; i < m; ++i) out.amplitudes(b.basis[static_cast<std::size_t>(i)]) = y(i);
    }
    return out;
  }

  /// Eigenvalues of one prepared sector, ascending.
  const Eigen::VectorXd& sector_eigenvalues(std::size_t k) const {
    if (k > n_sites_ || !blocks_[k]) throw InvalidInput("sector not prepared");
    return blocks_[k]->values;
  }

 private:
  struct Block {
    std::vector<Eigen::Index> basis;
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
  };

  bool sector_support(const SpinState& psi, std::size_t k) const {
    for (Eigen::Index s = 0; s < psi.amplitudes.size(); ++s)
      if (static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(s))) == k &&
          psi.amplitudes(s) != Complex{})
        return true;
    return false;
  }

  std::size_t n_sites_;
  std::vector<std::optional<Block>> blocks_;
};

/// exp(-i H t)|psi0> by eigendecomposition of the sectors psi0 occupies.
inline SpinState evolve(const SpinHamiltonian& h, const SpinState& psi0, double t) {
  if (psi0.n_sites != h.n_sites || psi0.amplitudes.size() != h.dimension())
    throw InvalidInput("state and Hamiltonian dimensions differ");
  std::vector<std::size_t> sectors;
  for (std::size_t k = 0; k <= h.n_sites; ++k) {
    for (Eigen::Index s = 0; s < psi0.amplitudes.size(); ++s)
      if (static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(s))) == k &&
          psi0.amplitudes(s) != Complex{}) {
        sectors.push_back(k);
        break;
      }
  }
  return Propagator(h, sectors).apply(psi0, t);
}

/// 2x2 reduced density matrix of one site in the {down, up} basis,
/// Tr_rest |x><y| for two (possibly different) states.
inline Eigen::Matrix2cd reduced_cross(const SpinState& x, const SpinState& y, std::size_t site) {
  const std::uint64_t mask = site_mask(x.n_sites, site);
  Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
  for (Eigen::Index s = 0; s < x.amplitudes.size(); ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    if (us & mask) continue;
    const auto up = static_cast<Eigen::Index>(us | mask);
    r(0, 0) += x.amplitudes(s) * std::conj(y.amplitudes(s));
    r(0, 1) += x.amplitudes(s) * std::conj(y.amplitudes(up));
    r(1, 0) += x.amplitudes(up) * std::conj(y.amplitudes(s));
    r(1, 1) += x.amplitudes(up) * std::conj(y.amplitudes(up));
  }
  return r;
}

inline Eigen::Matrix2cd reduced_density(const SpinState& psi, std::size_t site) {
  return reduced_cross(psi, psi, site);
}

struct TransferPoint {
  double t = 0.0;
  double fidelity = 0.0;      // after the optimal z-rotation on the receiver
  double raw_fidelity = 0.0;  // no phase correction
  double phase = 0.0;         // receiver coherence phase the correction removes
};

/// Fidelity of a receiver density matrix against the sender qubit.
inline TransferPoint receiver_fidelity(const Eigen::Matrix2cd& rho, double theta, double phi, double t) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const Complex coherence = std::polar(1.0, -phi) * rho(1, 0);
  const double pops = c * c * rho(0, 0).real() + s * s * rho(1, 1).real();
  TransferPoint p;
  p.t = t;
  p.raw_fidelity = pops + 2.0 * c * s * coherence.real();
  p.fidelity = pops + 2.0 * c * s * std::abs(coherence);
  p.phase = std::arg(coherence);
  return p;
}

/// Per-time fidelity of site N against the sender state (theta, phi) placed
/// on site 1. One shared eigendecomposition; time points run concurrently.
inline std::vector<TransferPoint> transfer_fidelity_curve(const SpinHamiltonian& h, double theta, double phi,
                                                          std::span<const double> t_grid) {
  const SpinState psi0 = SpinState::sender(h.n_sites, theta, phi);
  const std::size_t sectors[] = {0, 1};
  const Propagator prop(h, sectors);
  std::vector<TransferPoint> out(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t k) {
    const SpinState psi = prop.apply(psi0, t_grid[k]);
    out[k] = receiver_fidelity(reduced_density(psi, h.n_sites - 1), theta, phi, t_grid[k]);
  });
  return out;
}

/// Bloch-sphere averaged transfer fidelity. By linearity only the evolved
/// |down...down> and |up down...down> are needed per time point.
inline std::vector<TransferPoint> bloch_averaged_transfer_curve(const SpinHamiltonian& h,
                                                                std::span<const double> t_grid,
                                                                BlochGrid grid = {}) {
  const std::size_t n = h.n_sites;
  const std::size_t sectors[] = {0, 1};
  const Propagator prop(h, sectors);
  const SpinState down = SpinState::basis(n, 0);
  const SpinState up = SpinState::basis(n, site_mask(n, 0));
  std::vector<TransferPoint> out(t_grid.size());
  parallel_for(t_grid.size(), [&](std::size_t k) {
    const double t = t_grid[k];
    const SpinState a = prop.apply(down, t);
    const SpinState b = prop.apply(up, t);
    const Eigen::Matrix2cd raa = reduced_cross(a, a, n - 1);
    const Eigen::Matrix2cd rbb = reduced_cross(b, b, n - 1);
    const Eigen::Matrix2cd rba = reduced_cross(b, a, n - 1);
    const Eigen::Matrix2cd rab = reduced_cross(a, b, n - 1);
    auto point = [&](double theta, double phi) {
      const double c = std::cos(0.5 * theta);
      const double s = std::sin(0.5 * theta);
      const Eigen::Matrix2cd rho = c * c * raa + s * s * rbb + c * s * std::polar(1.0, phi) * rba +
                                   c * s * std::polar(1.0, -phi) * rab;
      return receiver_fidelity(rho, theta, phi, t);
    };
    const double compensated = grid.average([&](double th, double ph) { return point(th, ph).fidelity; });
    const double raw = grid.average([&](double th, double ph) { return point(th, ph).raw_fidelity; });
    out[k] = {t, compensated, raw, std::arg(rba(1, 0))};
  });
  return out;
}

/// Fast path restricted to the zero- and one-excitation sectors, dimension
/// N + 1 instead of 2^N. Builds the N x N one-excitation block straight from
/// the couplings.
class SingleExcitationChain {
 public:
  SingleExcitationChain(const CouplingMatrix& cm, double omega_s, Orientation orientation)
      : n_(cm.size()) {
    if (n_ < 2) throw InvalidInput("spin chain needs at least two sites");
    const auto n = static_cast<Eigen::Index>(n_);
    double ising_total = 0.0;
    Eigen::VectorXd ising_row = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto t = detail::pair_terms(orientation, cm.jz(i, j), cm.jxy(i, j));
        ising_row(i) += t.ising;
        if (i < j) ising_total += t.ising;
        block(i, j) = t.flip;
      }
    ground_energy_ = -0.5 * omega_s * static_cast<double>(n_) + ising_total;
    for (Eigen::Index i = 0; i < n; ++i)
      block(i, i) = 0.5 * omega_s * (2.0 - static_cast<double>(n_)) + ising_total - 2.0 * ising_row(i);
    block_ = block;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
    values_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
  }

  std::size_t n_sites() const { return n_; }
  double ground_energy() const { return ground_energy_; }
  const Eigen::MatrixXd& block() const { return block_; }

  /// <to| exp(-i H t) |from> for single up-spin states.
  Complex amplitude(std::size_t from, std::size_t to, double t) const {
    Complex acc{};
    const auto f = static_cast<Eigen::Index>(from);
    const auto g = static_cast<Eigen::Index>(to);
    for (Eigen::Index k = 0; k < values_.size(); ++k)
      acc += vectors_(g, k) * vectors_(f, k) * std::polar(1.0, -values_(k) * t);
    return acc;
  }

  TransferPoint transfer(double theta, double phi, double t) const {
    const Complex f = amplitude(0, n_ - 1, t) * std::polar(1.0, ground_energy_ * t);
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    const double f2 = std::norm(f);
    Eigen::Matrix2cd rho;
    rho(0, 0) = 1.0 - s * s * f2;
    rho(1, 1) = s * s * f2;
    rho(1, 0) = c * s * std::polar(1.0, phi) * f;
    rho(0, 1) = std::conj(rho(1, 0));
    return receiver_fidelity(rho, theta, phi, t);
  }

  std::vector<TransferPoint> curve(double theta, double phi, std::span<const double> t_grid) const {
    std::vector<TransferPoint> out(t_grid.size());
    parallel_for(t_grid.size(), [&](std::size_t k) { out[k] = transfer(theta, phi, t_grid[k]); });
    return out;
  }

 private:
  std::size_t n_;
  double ground_energy_ = 0.0;
  Eigen::MatrixXd block_;
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
};

/// (basis index, Re, Im) triples for every non-negligible amplitude.
struct AmplitudeTriple {
  std::uint64_t index;
  double re;
  double im;
};

inline std::vector<AmplitudeTriple> dump_state(const SpinState& psi, double threshold = 0.0) {
  std::vector<AmplitudeTriple> out;
  for (Eigen::Index s = 0; s < psi.amplitudes.size(); ++s) {
    const Complex a = psi.amplitudes(s);
    if (std::abs(a) > threshold) out.push_back({static_cast<std::uint64_t>(s), a.real(), a.imag()});
  }
  return out;
}

}  // namespace pchain
