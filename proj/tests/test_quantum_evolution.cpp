#include <gtest/gtest.h>

#include <algorithm>

#include "bohmcover/hamiltonian.hpp"
#include "bohmcover/scenario.hpp"
#include "oracles.hpp"

using namespace bohmcover;

namespace {

Matrix phase(double beta) { return Matrix::Constant(1, 1, std::polar(1.0, beta)); }

std::vector<double> ring_levels(double beta, int count) {
  std::vector<double> e;
  for (int k = -count; k <= count; ++k) {
    const double x = k + beta / kTwoPi;
    e.push_back(0.5 * x * x);
  }
  std::sort(e.begin(), e.end());
  e.resize(static_cast<std::size_t>(count));
  return e;
}

Hamiltonian ring_h(int n, double beta) { return assemble_hamiltonian(make_grid(Geometry::ring(1.0, n)), phase(beta)); }

double max_diff(const CoveringWave& a, const CoveringWave& b) { return (a.values - b.values).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(AssembleHamiltonian, UntwistedRingIsCirculant) {
  const Hamiltonian h = ring_h(8, 0.0);
  const Matrix dense(h.op);
  EXPECT_LT((dense - oracle::twisted_ring(8, 0.0)).cwiseAbs().maxCoeff(), 1e-12);
  for (int j = 0; j < 8; ++j) {
    EXPECT_NEAR(dense(j, (j + 1) % 8).real(), dense(0, 1).real(), 1e-14);
    EXPECT_NEAR(dense.row(j).sum().real(), 0.0, 1e-10);
  }
}

TEST(AssembleHamiltonian, TwistedRingMatchesIndependentAssembly) {
  for (double beta : {0.4, kPi / 3, kPi, 5.0}) {
    const auto lib = spectrum(ring_h(128, beta), 10, {SpectrumMethod::Dense});
    const auto ref = oracle::dense_eigenvalues(oracle::twisted_ring(128, beta));
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(lib[k].energy, ref(k), 1e-9) << "beta=" << beta;
  }
}

TEST(AssembleHamiltonian, TwistedSpectrumConvergesToClosedForm) {
  for (double beta : {0.0, kPi / 3, kPi}) {
    const auto exact = ring_levels(beta, 6);
    std::vector<double> ns, errs;
    for (int n : {64, 128, 256, 512}) {
      const auto ev = oracle::dense_eigenvalues(oracle::twisted_ring(n, beta));
      const auto lib = spectrum(ring_h(n, beta), 6);
      double worst = 0.0, worst_abs = 0.0;
      for (int k = 0; k < 6; ++k) {
        EXPECT_NEAR(lib[k].energy, ev(k), 1e-9);
        const double d = std::abs(lib[k].energy - exact[k]);
        worst_abs = std::max(worst_abs, d);
        if (exact[k] > 1e-12) worst = std::max(worst, d / exact[k]);
      }
      if (n == 512) {
        EXPECT_LT(worst, 1e-3) << "beta=" << beta;
      }
      ns.push_back(n);
      errs.push_back(worst_abs);
    }
    EXPECT_NEAR(oracle::loglog_slope(ns, errs), -2.0, 0.2) << "beta=" << beta;
  }
}

TEST(AssembleHamiltonian, PeierlsGaugeGivesTheSameSpectrum) {
  for (double beta : {0.3, 1.7, kPi}) {
    const auto a = spectrum(ring_h(200, beta), 200);
    const auto b = oracle::dense_eigenvalues(oracle::peierls_ring(200, beta));
    for (int k = 0; k < 200; ++k) EXPECT_NEAR(a[k].energy, b(k), 1e-9);
  }
}

TEST(AssembleHamiltonian, HermitianOnAllGeometries) {
  EXPECT_LT(ring_h(64, 1.1).hermiticity_defect(), 1e-12);
  const auto spin = make_grid(Geometry::annulus(1.0, 2.0, 16, 32, GeometryKind::SpinAnnulus));
  EXPECT_LT(assemble_hamiltonian(spin, su2_exp(kPi / 2, {0, 0, 1})).hermiticity_defect(), 1e-12);
  const auto ann = make_grid(Geometry::annulus(1.0, 2.0, 20, 40));
  EXPECT_LT(assemble_hamiltonian(ann, phase(1.7)).hermiticity_defect(), 1e-12);
  const auto any = make_grid(Geometry::annulus(1.0, 2.0, 20, 40, GeometryKind::TwoAnyonRelative));
  EXPECT_LT(assemble_hamiltonian(any, phase(kPi / 2)).hermiticity_defect(), 1e-12);
}

TEST(AssembleHamiltonian, RejectsPotentialThatBreaksTheFactor) {
  const auto grid = make_grid(Geometry::annulus(1.0, 2.0, 12, 16, GeometryKind::SpinAnnulus));
  const PotentialField v = build_potential(*grid, ZeemanPotential{1.0, {1.0, 0.0, 0.0}});
  try {
    assemble_hamiltonian(grid, v, su2_exp(kPi / 2, {0, 0, 1}));
    FAIL() << "expected rejection";
  } catch (const AdmissibilityError& e) {
    // [sigma_x, -i sigma_z] has Frobenius norm 2 sqrt 2.
    EXPECT_NEAR(e.commutator_norm(), 2.0 * std::sqrt(2.0), 1e-12);
  }
  const PotentialField ok = build_potential(*grid, ZeemanPotential{1.0, {0.0, 0.0, 0.7}});
  EXPECT_NO_THROW(assemble_hamiltonian(grid, ok, su2_exp(kPi / 2, {0, 0, 1})));
}

TEST(Spectrum, RingExamples) {
  const auto zero = spectrum(ring_h(512, 0.0), 3);
  EXPECT_NEAR(zero[0].energy, 0.0, 1e-10);
  EXPECT_NEAR(zero[1].energy, 0.5, 1e-3);
  EXPECT_NEAR(zero[2].energy, 0.5, 1e-3);
  EXPECT_NEAR(zero[1].energy, zero[2].energy, 1e-9);
  const auto half = spectrum(ring_h(512, kPi), 3);
  EXPECT_NEAR(half[0].energy, 0.125, 1e-4);
  EXPECT_NEAR(half[1].energy, 0.125, 1e-4);
  EXPECT_NEAR(half[2].energy - half[1].energy, 1.0, 1e-3);
}

TEST(Spectrum, DirichletAnnulusIsPositive) {
  for (double beta : {0.0, 1.7, kPi}) {
    const auto grid = make_grid(Geometry::annulus(1.0, 2.0, 12, 24));
    const auto ev = spectrum(assemble_hamiltonian(grid, phase(beta)), 20);
    for (const auto& p : ev) EXPECT_GT(p.energy, 0.0);
  }
}

TEST(Spectrum, ShiftInvertAgreesWithDense) {
  const auto grid = make_grid(Geometry::annulus(1.0, 2.0, 16, 48));
  const Hamiltonian h = assemble_hamiltonian(grid, phase(1.7));
  const auto a = spectrum(h, 6, {SpectrumMethod::Dense});
  const auto b = spectrum(h, 6, {SpectrumMethod::ShiftInvert});
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(a[k].energy, b[k].energy, 1e-8 * std::max(1.0, a[k].energy));
}

TEST(Spectrum, RejectsBadCount) {
  EXPECT_THROW(spectrum(ring_h(16, 0.0), 0), Error);
  EXPECT_THROW(spectrum(ring_h(16, 0.0), 17), Error);
}

TEST(EvolveStep, EigenstatePicksUpPhase) {
  const Hamiltonian h = ring_h(256, 0.9);
  const auto ev = spectrum(h, 4);
  for (const auto& p : ev) {
    const CoveringWave out = evolve_step(p.wave, h, 1e-3);
    CoveringWave expect = p.wave;
    expect.values *= std::polar(1.0, -p.energy * 1e-3);
    EXPECT_LT(max_diff(out, expect), 1e-8);
    EXPECT_NEAR(out.time, 1e-3, 1e-15);
  }
}

TEST(EvolveStep, ConstantStateIsStationary) {
  const Hamiltonian h = ring_h(64, 0.0);
  CoveringWave psi = make_wave(h.grid, phase(0.0));
  psi.values.setConstant(1.0);
  psi.normalize();
  EXPECT_LT(max_diff(evolve_step(psi, h, 1e-3), psi), 1e-12);
}

TEST(EvolveStep, NormDriftOverThousandSteps) {
  const auto grid = make_grid(Geometry::ring(1.0, 256));
  const CoveringWave psi0 = packet_wave(grid, phase(kPi / 3), PacketInit{{1.0, 1.0}, 0.0, 0.3, 0.0, 2.0, {}});
  const Hamiltonian h = assemble_hamiltonian(grid, phase(kPi / 3));
  const CrankNicolson cn(h, 1e-3);
  CoveringWave psi = psi0;
  for (int k = 0; k < 1000; ++k) cn.advance(psi);
  EXPECT_LT(std::abs(psi.domain_norm_squared() - psi0.domain_norm_squared()), 1e-7);
  EXPECT_TRUE(psi.finite());
  EXPECT_THROW(CrankNicolson(h, 0.0), Error);
}

TEST(PeriodicityPreserved, TrivialFactor) {
  const auto grid = make_grid(Geometry::ring(1.0, 128));
  const CoveringWave psi0 = packet_wave(grid, phase(0.0), PacketInit{{1.0, 2.0}, 0.0, 0.4, 0.0, 1.0, {}});
  const CrankNicolson cn(assemble_hamiltonian(grid, phase(0.0)), 1e-3);
  CoveringWave psi = psi0;
  for (int k = 0; k < 50; ++k) cn.advance(psi);
  const auto r = check_periodicity_preserved(psi, psi0, PotentialField::zero(*grid), 1e-3);
  EXPECT_EQ(r.steps, 50);
  EXPECT_LT(r.residual, 1e-10);
  EXPECT_LT(r.seam_residual, 1e-10);
}

TEST(PeriodicityPreserved, TwistedRingHundredSteps) {
  const auto grid = make_grid(Geometry::ring(1.0, 256));
  const CoveringWave psi0 = packet_wave(grid, phase(kPi / 3), PacketInit{{1.0, 6.0}, 0.0, 0.3, 0.0, 3.0, {}});
  const CrankNicolson cn(assemble_hamiltonian(grid, phase(kPi / 3)), 1e-3);
  CoveringWave psi = psi0;
  for (int k = 0; k < 100; ++k) cn.advance(psi);
  const auto r = check_periodicity_preserved(psi, psi0, PotentialField::zero(*grid), 1e-3);
  EXPECT_LT(r.residual, 1e-8);
  EXPECT_LT(r.seam_residual, 1e-8);
}

TEST(PeriodicityPreserved, SpinAnnulus) {
  const auto grid = make_grid(Geometry::annulus(1.0, 2.0, 16, 32, GeometryKind::SpinAnnulus));
  const Matrix g = su2_exp(kPi / 2, {0, 0, 1});
  PacketInit p{{1.5, 6.0}, 0.2, 0.4, 0.0, 2.0, {Complex(0.6, 0), Complex(0, 0.8)}};
  const CoveringWave psi0 = packet_wave(grid, g, p);
  const PotentialField v = build_potential(*grid, ZeemanPotential{1.0, {0, 0, 0.5}});
  const CrankNicolson cn(assemble_hamiltonian(grid, v, g), 1e-3);
  CoveringWave psi = psi0;
  for (int k = 0; k < 100; ++k) cn.advance(psi);
  const auto r = check_periodicity_preserved(psi, psi0, v, 1e-3);
  EXPECT_LT(r.residual, 1e-8);
  EXPECT_LT(r.seam_residual, 1e-8);
}
