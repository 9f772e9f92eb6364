#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "pchain/errors.hpp"

namespace pchain {

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

/// Golub-Welsch: nodes are the eigenvalues of the Legendre Jacobi matrix.
inline GaussLegendre gauss_legendre(std::size_t n) {
  if (n == 0) throw InvalidInput("quadrature needs at least one node");
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index k = 1; k < m; ++k) {
    const auto kk = static_cast<double>(k);
    sub(k - 1) = kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);

  GaussLegendre q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (Eigen::Index k = 0; k < m; ++k) {
    q.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    q.weights[static_cast<std::size_t>(k)] = 2.0 * v0 * v0;
  }
  return q;
}

/// Uniform average over the Bloch sphere: Gauss-Legendre in cos(theta),
/// equally spaced phi. Exact for low-order trigonometric polynomials.
struct BlochGrid {
  std::size_t n_theta = 16;
  std::size_t n_phi = 32;

  template <class F>
  double average(F&& f) const {
    const GaussLegendre gl = gauss_legendre(n_theta);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_theta; ++i) {
      const double theta = std::acos(gl.nodes[i]);
      double ring = 0.0;
      for (std::size_t j = 0; j < n_phi; ++j) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_phi);
        ring += f(theta, phi);
      }
      acc += gl.weights[i] * ring / static_cast<double>(n_phi);
    }
    return 0.5 * acc;
  }
};

}  // namespace pchain
