#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "pchain/microscopic_oracle.hpp"
#include "pchain/oracle_suite.hpp"

using namespace pchain;

namespace {

constexpr double kRatio = 15.0;
const double kOmegaZ = hz_to_angular(490e6);
constexpr double kDistance = 40e-6;

DerivedQuantities site(double epsilon, double ratio = kRatio) {
  return derive_quantities(
      TrapParams::from_frequencies(ratio * kOmegaZ, kOmegaZ, gradient_for_epsilon(epsilon, kOmegaZ)));
}

MicroscopicSystem pair(double epsilon, Orientation o = Orientation::AxialZ, FockTruncation t = {3, 3},
                       double xi_scale = 1.0) {
  const auto dq = site(epsilon);
  return build_microscopic(dq, dq, xi_scale * coulomb_scale(dq, kDistance), o, t);
}

}  // namespace

TEST(Microscopic, DimensionsAndOverflow) {
  const auto sys = pair(0.01);
  EXPECT_EQ(sys.dimension(), 1024);
  EXPECT_NO_THROW((FockTruncation{6, 6}.validate()));
  EXPECT_THROW((FockTruncation{8, 8}.validate()), DimensionOverflow);
  EXPECT_THROW((FockTruncation{0, 3}.validate()), InvalidInput);
  EXPECT_THROW(pair(0.01, Orientation::AxialZ, {9, 9}), DimensionOverflow);
}

TEST(Microscopic, FreeSpectrum) {
  const auto sys = pair(0.0, Orientation::AxialZ, {3, 3}, 0.0);
  const auto& q = sys.sites[0];
  for (int k : {0, 1, 2}) {
    const auto sec = sector_spectrum(sys, k);
    std::vector<double> expected;
    for (int s1 = 0; s1 < 2; ++s1)
      for (int n1 = 0; n1 <= 3; ++n1)
        for (int k1 = 0; k1 <= 3; ++k1)
          for (int s2 = 0; s2 < 2; ++s2)
            for (int n2 = 0; n2 <= 3; ++n2)
              for (int k2 = 0; k2 <= 3; ++k2) {
                if (s1 + n1 + s2 + n2 != k) continue;
                expected.push_back(q.omega_c * (n1 + n2) + q.omega_z * (k1 + k2) +
                                   0.5 * q.omega_s * ((2 * s1 - 1) + (2 * s2 - 1)) - sec.shift);
              }
    std::sort(expected.begin(), expected.end());
    ASSERT_EQ(static_cast<Eigen::Index>(expected.size()), sec.values.size());
    for (std::size_t i = 0; i < expected.size(); ++i)
      EXPECT_NEAR(sec.values(static_cast<Eigen::Index>(i)), expected[i], 1e-9 * q.omega_c);
  }
}

TEST(Microscopic, HermitianAndExcitationConserving) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> eps(0.0, 0.08), xs(0.0, 3.0);
  for (int k = 0; k < 6; ++k)
    for (auto o : {Orientation::AxialZ, Orientation::TransverseX}) {
      const auto sys = pair(eps(rng), o, {3, 2}, xs(rng));
      EXPECT_LT(hermiticity_residual(sys), 1e-10);
      EXPECT_LT(excitation_leakage(sys), 1e-10);
    }
  const auto no_coulomb = pair(0.05, Orientation::AxialZ, {3, 3}, 0.0);
  EXPECT_EQ(excitation_leakage(no_coulomb), 0.0);
}

TEST(Microscopic, LadderCommutatorBelowCutoff) {
  const auto sys = pair(0.01, Orientation::AxialZ, {3, 2});
  for (const auto* a : {&sys.ops[0].a_c, &sys.ops[1].a_z}) {
    const SparseMatrixD ad = a->transpose();
    const Eigen::MatrixXd comm = Eigen::MatrixXd(SparseMatrixD(*a * ad) - SparseMatrixD(ad * *a));
    const Eigen::MatrixXd off = comm - Eigen::MatrixXd(comm.diagonal().asDiagonal());
    EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-12);
    int ones = 0;
    for (Eigen::Index s = 0; s < comm.rows(); ++s)
      if (std::abs(comm(s, s) - 1.0) < 1e-12) ++ones;
    // Only the top Fock level breaks [a, a+] = 1.
    const int levels = a == &sys.ops[0].a_c ? 4 : 3;
    EXPECT_EQ(ones, static_cast<int>(comm.rows()) * (levels - 1) / levels);
  }
}

TEST(Microscopic, ZeroGradientZeroCouplings) {
  const auto sys = pair(0.0);
  const auto m = extract_effective_jxy(sys);
  EXPECT_EQ(m.jxy_measured, 0.0);
  EXPECT_EQ(m.flip_flop, 0.0);
  const auto z = extract_effective_jz(sys);
  EXPECT_LT(std::abs(z.combination), 1e-6 * std::abs(extract_effective_jxy(pair(0.01)).predicted_flip_flop));
}

TEST(Microscopic, NoCoulombNoIsing) {
  const auto sys = pair(0.02, Orientation::AxialZ, {3, 3}, 0.0);
  const auto z = extract_effective_jz(sys);
  EXPECT_LT(std::abs(z.combination), 1e-9 * sys.sites[0].omega_z);
}

TEST(Microscopic, FlipFlopConvergesToAnalytic) {
  double prev = 1.0;
  for (double eps : {0.05, 0.025, 0.01, 0.005}) {
    const auto m = extract_effective_jxy(pair(eps));
    const double err = std::abs(m.flip_flop / m.predicted_flip_flop - 1.0);
    EXPECT_LT(err, prev) << eps;
    prev = err;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(Microscopic, FlipFlopSmallEpsilon) {
  const auto m = extract_effective_jxy(pair(0.01));
  EXPECT_GT(m.flip_flop, 0.0);
  EXPECT_NEAR(m.flip_flop / m.predicted_flip_flop, 1.0, 0.02);
  EXPECT_NEAR(2.0 * m.jxy_measured / std::abs(m.predicted_flip_flop), 1.0, 0.02);
  EXPECT_NEAR(m.jxy_measured / m.jxy_from_splitting, 1.0, 1e-6);
  EXPECT_GT(m.contrast, 0.99);
}

TEST(Microscopic, EpsilonSquaredScalingAtSmallEpsilon) {
  const double a = extract_effective_jxy(pair(0.01)).jxy_measured;
  const double b = extract_effective_jxy(pair(0.005)).jxy_measured;
  const double exponent = std::log(a / b) / std::numbers::ln2;
  EXPECT_GT(exponent, 1.9);
  EXPECT_LT(exponent, 2.1);
}

TEST(Microscopic, TransverseSignConvention) {
  const auto m = extract_effective_jxy(pair(0.01, Orientation::TransverseX));
  EXPECT_LT(m.flip_flop, 0.0);
  EXPECT_NEAR(m.flip_flop / m.predicted_flip_flop, 1.0, 0.02);
  const auto z = extract_effective_jz(pair(0.01, Orientation::TransverseX));
  EXPECT_GT(z.ising, 0.0);
  EXPECT_NEAR(z.ising / z.predicted_ising, 1.0, 0.02);
}

TEST(Microscopic, IsingSmallEpsilon) {
  const auto z = extract_effective_jz(pair(0.01));
  EXPECT_LT(z.ising, 0.0);
  EXPECT_NEAR(z.ising / z.predicted_ising, 1.0, 0.02);
  EXPECT_NEAR(z.jz_measured / oracle_prediction(pair(0.01)).jz, 1.0, 0.02);
  EXPECT_GT(z.min_overlap, kTrackingThreshold);
}

TEST(Microscopic, IsingTrackingFailsInExaggeratedRegime) {
  EXPECT_THROW(extract_effective_jz(pair(0.05)), StateTrackingFailure);
}

TEST(Microscopic, FitFailureOnContrastThreshold) {
  FitOptions fit;
  fit.min_contrast = 1.1;
  EXPECT_THROW(extract_effective_jxy(pair(0.01), fit), FitFailure);
  fit = {};
  fit.initial = OracleInitialState::Bare;
  const auto m = extract_effective_jxy(pair(0.01), fit);
  EXPECT_NEAR(m.contrast, m.bare_contrast, 1e-15);
  EXPECT_GT(m.bare_contrast, 0.95);
}

TEST(Microscopic, CutoffConvergence) {
  OracleSuiteConfig cfg;
  cfg.epsilon = 0.05;
  cfg.ratio = kRatio;
  double prev_value = 0.0, prev_change = -1.0;
  for (std::size_t s = 0; s <= 3; ++s) {
    const double v = oracle_flip_flop(cfg, cfg.epsilon, {3 + s, 3 + s}).jxy_measured;
    if (s > 0) {
      const double change = std::abs(v - prev_value);
      if (prev_change >= 0.0) EXPECT_LE(change, std::max(prev_change, 1e-9 * v));
      prev_change = change;
    }
    prev_value = v;
  }
}

TEST(TwoSpinModel, MatchesSwapFidelity) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const double jxy = 1.0;
  for (int k = 0; k < 20; ++k) {
    const double zeta = u(rng);
    EXPECT_NEAR(hsd_fidelity(50.0, 50.0 + 4.0 * jxy * zeta, jxy, 0.37, swap_time(jxy)), fd(zeta), 1e-9) << zeta;
  }
  EXPECT_NEAR(hsd_fidelity(50.0, 50.0, jxy, 0.37, swap_time(jxy)), 1.0, 1e-12);
}

TEST(TwoSpinModel, BranchAmplitude) {
  const double jxy = 0.7, jz = 0.2;
  for (double zeta : {0.0, 0.5, 1.3}) {
    const Complex a = hsd_branch_amplitude(10.0, 10.0 + 4.0 * jxy * zeta, jxy, jz, swap_time(jxy));
    const double r = std::sqrt(1.0 + zeta * zeta);
    EXPECT_NEAR(std::abs(a), std::abs(std::sin(0.5 * std::numbers::pi * r) / r), 1e-12);
  }
}

TEST(OracleSuite, DefaultCampaignPasses) {
  const auto rep = run_oracle_suite({});
  EXPECT_TRUE(rep.flip_flop_ok()) << rep.flip_flop_relative_error;
  EXPECT_TRUE(rep.sign_ok());
  EXPECT_TRUE(rep.exponent_ok()) << rep.exponent;
  EXPECT_TRUE(rep.convergence_monotone);
  EXPECT_TRUE(rep.ising_ok()) << rep.ising_failure << " " << rep.ising_relative_error;
  EXPECT_TRUE(rep.hsd_ok()) << rep.hsd_max_deviation;
  EXPECT_TRUE(rep.zero_coupling_ok);
  EXPECT_TRUE(rep.pass());
}
