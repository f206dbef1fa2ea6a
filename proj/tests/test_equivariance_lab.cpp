#include <gtest/gtest.h>

#include <algorithm>

#include "bohmcover/equivariance.hpp"
#include "bohmcover/scenario.hpp"
#include "oracles.hpp"

using namespace bohmcover;

namespace {

Matrix phase(double beta) { return Matrix::Constant(1, 1, std::polar(1.0, beta)); }

// Plain KS distance of angles against the uniform law on [0, 2 pi).
double ks_uniform(std::vector<double> th) {
  std::sort(th.begin(), th.end());
  const double n = static_cast<double>(th.size());
  double d = 0.0;
  for (std::size_t i = 0; i < th.size(); ++i) {
    const double f = th[i] / kTwoPi;
    d = std::max({d, (i + 1.0) / n - f, f - i / n});
  }
  return d;
}

CoveringWave uniform_ring(int n) {
  CoveringWave w = make_wave(make_grid(Geometry::ring(1.0, n)), phase(0.0));
  w.values.setConstant(1.0);
  w.normalize();
  return w;
}

struct RingRun {
  Hamiltonian h;
  CoveringWave psi0;
};

RingRun moving_ring_packet(double beta) {
  const auto grid = make_grid(Geometry::ring(1.0, 512));
  return {assemble_hamiltonian(grid, phase(beta)),
          packet_wave(grid, phase(beta), PacketInit{{1.0, 1.0}, 0.0, 0.3, 0.0, 2.0, {}})};
}

EnsembleOptions stepping(double dt, int threads = 1) {
  EnsembleOptions o;
  o.dt = dt;
  o.threads = threads;
  return o;
}

}  // namespace

TEST(SampleInitial, UniformRingPassesKs) {
  const auto pts = sample_initial(uniform_ring(256), 100000, 42);
  std::vector<double> th;
  for (const auto& p : pts) {
    EXPECT_GE(p.theta, 0.0);
    EXPECT_LT(p.theta, kTwoPi);
    EXPECT_EQ(p.r, 1.0);
    th.push_back(p.theta);
  }
  EXPECT_LT(ks_uniform(th), 1.63 / std::sqrt(1e5));
}

TEST(SampleInitial, ConcentratedDensityStaysInItsCell) {
  const auto grid = make_grid(Geometry::annulus(1.0, 2.0, 16, 32));
  CoveringWave w = make_wave(grid, phase(0.0));
  w.at(5, 9)(0) = 1.0;
  for (const auto& p : sample_initial(w, 2000, 1)) {
    EXPECT_LE(std::abs(p.theta - grid->theta[9]), 0.5 * grid->dtheta + 1e-12);
    EXPECT_LE(std::abs(p.r - grid->r[5]), 0.5 * grid->dr + 1e-12);
  }
}

TEST(SampleInitial, DeterministicGivenSeed) {
  const auto w = moving_ring_packet(0.0).psi0;
  const auto a = sample_initial(w, 1000, 7);
  const auto b = sample_initial(w, 1000, 7);
  const auto c = sample_initial(w, 1000, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(SampleInitial, ZeroDensityIsRejected) {
  const CoveringWave w = make_wave(make_grid(Geometry::ring(1.0, 32)), phase(0.0));
  EXPECT_THROW(sample_initial(w, 10, 0), Error);
}

TEST(SampleInitial, EmpiricalCdfConvergesAtRootN) {
  const auto w = uniform_ring(512);
  std::vector<double> ns, ks;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      std::vector<double> th;
      for (const auto& p : sample_initial(w, n, seed)) th.push_back(p.theta);
      mean += ks_uniform(th) / 8.0;
    }
    ns.push_back(static_cast<double>(n));
    ks.push_back(mean);
  }
  EXPECT_NEAR(oracle::loglog_slope(ns, ks), -0.5, 0.15);
}

TEST(Statistics, KsCriticalConstant) {
  EXPECT_NEAR(ks_critical_constant(0.01), 1.6276, 1e-4);
  EXPECT_NEAR(ks_critical_constant(0.05), 1.3581, 1e-4);
}

TEST(Statistics, ChiSquareMergesSmallBinsAndUsesTheRightQuantile) {
  // Expected counts 2, 3, 10, 10, 75: the first two merge into a bin of 5.
  const std::vector<double> probs = {0.02, 0.03, 0.10, 0.10, 0.75};
  const std::vector<double> counts = {1, 5, 12, 8, 74};
  const auto r = chi_square(probs, counts, 100.0, 0.01);
  ASSERT_EQ(r.expected.size(), 4u);
  EXPECT_EQ(r.dof, 3);
  const double stat = 1.0 / 5 + 4.0 / 10 + 4.0 / 10 + 1.0 / 75;
  EXPECT_NEAR(r.statistic, stat, 1e-12);
  EXPECT_NEAR(r.critical, 11.3449, 1e-4);
}

TEST(Statistics, AngularCdfOfUniformMarginal) {
  const std::vector<double> m(64, 1.0 / 64);
  const double h = kTwoPi / 64;
  for (double x : {0.0, 0.5, 3.0, 6.0}) EXPECT_NEAR(angular_cdf(m, h, x), x / kTwoPi, 1e-12);
}

TEST(Equivariance, MovingRingPacketPasses) {
  const auto s = moving_ring_packet(0.0);
  const auto starts = sample_initial(s.psi0, 10000, 3);
  const auto run = run_ensemble(s.h, s.psi0, starts, {0.0, 1.0, 2.0}, stepping(1e-3));
  const auto cmp = compare_ensemble(run);
  EXPECT_EQ(cmp.kind, StatisticKind::KolmogorovSmirnov);
  ASSERT_EQ(cmp.results.size(), 3u);
  for (const auto& r : cmp.results) {
    EXPECT_TRUE(r.pass) << "t=" << r.time << " ks=" << r.statistic;
    EXPECT_NEAR(r.threshold, 1.6276 / 100.0, 1e-5);
  }
  EXPECT_TRUE(cmp.pass());
  EXPECT_TRUE(cmp.warnings.empty());
}

TEST(Equivariance, ScaledVelocityControlFails) {
  const auto s = moving_ring_packet(0.0);
  const auto starts = sample_initial(s.psi0, 10000, 3);
  EnsembleOptions opts = stepping(1e-3);
  opts.velocity_scale = 1.5;
  const auto cmp = compare_ensemble(run_ensemble(s.h, s.psi0, starts, {0.0, 2.0}, opts));
  EXPECT_TRUE(cmp.results.front().pass);
  EXPECT_FALSE(cmp.results.back().pass);
  EXPECT_FALSE(cmp.pass());
}

TEST(Equivariance, StationaryEigenstateOnAnnulus) {
  const auto grid = make_grid(Geometry::annulus(1.0, 2.0, 24, 64));
  const Hamiltonian h = assemble_hamiltonian(grid, phase(1.7));
  const CoveringWave psi0 = spectrum(h, 1).front().wave;
  const auto starts = sample_initial(psi0, 4000, 5);
  const auto run = run_ensemble(h, psi0, starts, {0.0, 0.25, 0.5}, stepping(2e-3));
  const auto cmp = compare_ensemble(run);
  EXPECT_EQ(cmp.kind, StatisticKind::ChiSquare);
  for (const auto& r : cmp.results) EXPECT_TRUE(r.pass) << "t=" << r.time << " chi2=" << r.statistic;
  EXPECT_LE(run.dropped, 40u);
}

TEST(Equivariance, DropAccountingAndThreadIndependence) {
  const auto grid = make_grid(Geometry::annulus(1.0, 2.0, 16, 32));
  const Hamiltonian h = assemble_hamiltonian(grid, phase(0.5));
  const CoveringWave psi0 = packet_wave(grid, phase(0.5), PacketInit{{1.5, 1.0}, 0.3, 0.5, 3.0, 2.0, {}});
  const auto starts = sample_initial(psi0, 500, 2);
  EnsembleOptions one = stepping(2e-3);
  EnsembleOptions four = one;
  four.threads = 4;
  const auto a = run_ensemble(h, psi0, starts, {0.0, 0.2, 0.4}, one);
  const auto b = run_ensemble(h, psi0, starts, {0.0, 0.2, 0.4}, four);
  std::size_t finished = 0;
  for (const auto& tr : a.trajectories) finished += tr.status == TrajectoryStatus::Finished;
  EXPECT_EQ(a.dropped, a.n_samples - finished);
  std::size_t reasons = 0;
  for (const auto& [k, v] : a.drop_reasons) reasons += v;
  EXPECT_EQ(reasons, a.dropped);
  ASSERT_EQ(a.positions.size(), b.positions.size());
  for (std::size_t t = 0; t < a.positions.size(); ++t) EXPECT_EQ(a.positions[t], b.positions[t]);
  EXPECT_EQ(a.dropped, b.dropped);
}

TEST(Equivariance, TinyEnsembleWarns) {
  const auto s = moving_ring_packet(0.0);
  const auto starts = sample_initial(s.psi0, 10, 3);
  const auto cmp = compare_ensemble(run_ensemble(s.h, s.psi0, starts, {0.0, 0.1}, stepping(1e-3)));
  ASSERT_FALSE(cmp.warnings.empty());
  EXPECT_NE(cmp.warnings.front().find("10 samples"), std::string::npos);
  EXPECT_EQ(cmp.results.size(), 2u);
}

TEST(Equivariance, MisalignedSnapshotTimeIsRejected) {
  const auto s = moving_ring_packet(0.0);
  const auto starts = sample_initial(s.psi0, 10, 3);
  EnsembleOptions opts = stepping(1e-3);
  opts.stride = 2;
  EXPECT_THROW(run_ensemble(s.h, s.psi0, starts, {0.0, 0.0105}, opts), Error);
}
