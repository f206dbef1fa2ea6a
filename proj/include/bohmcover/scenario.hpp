#pragma once

// Declarative experiment description and the builders that turn it into a
// grid, a potential, a Hamiltonian and an initial wave.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bohmcover/core.hpp"
#include "bohmcover/geometry.hpp"
#include "bohmcover/hamiltonian.hpp"
#include "bohmcover/topo_algebra.hpp"
#include "bohmcover/wave.hpp"

namespace bohmcover {

struct NoPotential {};

/// V(r) = sum_k c_k r^k (times Id on the fiber).
struct RadialPotential {
  std::vector<double> coefficients;
};

/// V(theta) = amplitude cos(mode * theta) (times Id).
struct CosinePotential {
  double amplitude = 0.0;
  int mode = 1;
};

/// Uniform Zeeman term V = -mu B.sigma on a two-dimensional fiber.
struct ZeemanPotential {
  double mu = 1.0;
  Eigen::Vector3d field = Eigen::Vector3d::Zero();
};

using PotentialSpec = std::variant<NoPotential, RadialPotential, CosinePotential, ZeemanPotential>;

struct EigenstateInit {
  int index = 0;
};

/// Localized packet, lifted by summing its deck images so that the
/// periodicity condition holds exactly.
struct PacketInit {
  BaseCoords center;
  double width_r = 0.0;       // 0: radial profile is the lowest Dirichlet mode only
  double width_theta = 0.5;
  double momentum_r = 0.0;
  double momentum_theta = 0.0;  // angular wave number
  std::vector<Complex> spinor;  // fiber components; empty = (1, 0, ...)
};

using InitialSpec = std::variant<EigenstateInit, PacketInit>;

struct Numerics {
  double dt = 1e-3;
  double t_final = 1.0;
  double solver_tolerance = 1e-12;
  int stride = 1;
  int spectrum_count = 6;
  int velocity_half_width = 4;
  int record_every = 10;
  std::size_t n_samples = 10000;
  std::vector<double> times;  // empty: {0, t_final / 2, t_final}
  int radial_bins = 8;
  int angular_bins = 16;
};

struct FactorDescription {
  std::string kind = "character";  // character | su2 | rep
  double beta = 0.0;
  double alpha = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  Matrix matrix;  // rep
};

struct Scenario {
  std::string name;
  Geometry geometry;
  FactorDescription factor;
  TopologicalFactor topological_factor;
  PotentialSpec potential;
  InitialSpec initial;
  Numerics numerics;
  std::uint64_t seed = 0;

  Matrix twist() const { return generator_matrix(topological_factor, geometry.fiber_dim()); }

  std::vector<double> snapshot_times() const {
    if (!numerics.times.empty()) return numerics.times;
    return {0.0, 0.5 * numerics.t_final, numerics.t_final};
  }
};

inline TopologicalFactor make_factor(const FactorDescription& f, int fiber_dim) {
  if (f.kind == "character") return Character::from_angles(std::vector<double>{f.beta});
  if (f.kind == "su2") {
    if (fiber_dim != 2) throw Error("factor: su2 needs a two-dimensional fiber");
    return UnitaryRep{2, {su2_exp(f.alpha, f.axis)}};
  }
  if (f.kind == "rep") return UnitaryRep{static_cast<int>(f.matrix.rows()), {f.matrix}};
  throw Error("factor: unknown kind '" + f.kind + "'");
}

inline PotentialField build_potential(const GridSpec& g, const PotentialSpec& spec) {
  PotentialField v = PotentialField::zero(g);
  const int d = g.fiber_dim();
  if (std::holds_alternative<NoPotential>(spec)) return v;
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_theta; ++j) {
      auto m = v.at(g.node(i, j));
      if (const auto* rad = std::get_if<RadialPotential>(&spec)) {
        double val = 0.0, p = 1.0;
        for (double c : rad->coefficients) {
          val += c * p;
          p *= g.r[i];
        }
        m = val * identity(d);
      } else if (const auto* cp = std::get_if<CosinePotential>(&spec)) {
        m = cp->amplitude * std::cos(cp->mode * g.theta[j]) * identity(d);
      } else {
        const auto& z = std::get<ZeemanPotential>(spec);
        if (d != 2) throw Error("potential: zeeman term needs a two-dimensional fiber");
        const auto s = pauli_matrices();
        m = -z.mu * (z.field.x() * s[0] + z.field.y() * s[1] + z.field.z() * s[2]);
      }
    }
  }
  if (const auto* cp = std::get_if<CosinePotential>(&spec)) {
    // cos(mode theta) must be invariant under the deck generator.
    const double turn = cp->mode * g.geometry.theta_period() / kTwoPi;
    if (std::abs(turn - std::round(turn)) > 1e-12) throw Error("potential: cosine mode is not deck-invariant");
  }
  return v;
}

inline CoveringWave packet_wave(GridPtr grid, const Matrix& twist, const PacketInit& p) {
  const auto& g = *grid;
  const int d = g.fiber_dim();
  Vector chi = Vector::Zero(d);
  if (p.spinor.empty()) {
    chi(0) = 1.0;
  } else {
    if (static_cast<int>(p.spinor.size()) != d) throw Error("initial: spinor length does not match the fiber");
    for (int a = 0; a < d; ++a) chi(a) = p.spinor[a];
  }
  if (!(p.width_theta > 0.0)) throw Error("initial: packet width must be positive");
  const double period = g.geometry.theta_period();
  const int images = static_cast<int>(std::ceil(8.0 * p.width_theta / period)) + 2;
  std::vector<Matrix> powers;
  for (int m = -images; m <= images; ++m) powers.push_back(unitary_power(twist, m));

  CoveringWave w = make_wave(grid, twist);
  for (int i = g.row_begin; i < g.row_end; ++i) {
    double radial = 1.0;
    Complex radial_phase{1.0, 0.0};
    if (g.geometry.has_radial()) {
      const double r = g.r[i];
      radial = std::sin(kPi * (r - g.geometry.r_in) / (g.geometry.r_out - g.geometry.r_in));
      if (p.width_r > 0.0) radial *= std::exp(-std::pow(r - p.center.r, 2) / (4.0 * p.width_r * p.width_r));
      radial_phase = std::polar(1.0, p.momentum_r * (r - p.center.r));
    }
    for (int j = 0; j < g.n_theta; ++j) {
      Vector acc = Vector::Zero(d);
      for (int m = -images; m <= images; ++m) {
        const double x = g.theta[j] - m * period - p.center.theta;
        const Complex f = std::exp(-x * x / (4.0 * p.width_theta * p.width_theta)) *
                          std::polar(1.0, p.momentum_theta * x);
        acc += f * (powers[static_cast<std::size_t>(m + images)] * chi);
      }
      w.at(i, j) = radial * radial_phase * acc;
    }
  }
  // Multi-sheet grids: the image sum above already covers every sheet.
  w.normalize();
  return w;
}

struct Model {
  GridPtr grid;
  PotentialField potential;
  Hamiltonian hamiltonian;
};

inline Model build_model(const Scenario& s, int sheets = 1) {
  Model m;
  m.grid = make_grid(s.geometry, sheets);
  m.potential = build_potential(*m.grid, s.potential);
  m.hamiltonian = assemble_hamiltonian(m.grid, m.potential, s.twist());
  return m;
}

inline CoveringWave initial_wave(const Scenario& s, const Model& m) {
  if (const auto* e = std::get_if<EigenstateInit>(&s.initial)) {
    auto pairs = spectrum(m.hamiltonian, e->index + 1);
    return std::move(pairs.back().wave);
  }
  return packet_wave(m.grid, s.twist(), std::get<PacketInit>(s.initial));
}

// ---------------------------------------------------------------------------

struct PeriodicityCheck {
  double residual = 0.0;        // max |psi_t - (two-sheet evolution restricted to sheet 0)|
  double seam_residual = 0.0;   // max |Gamma psi_t - (two-sheet evolution on sheet 1)|
  long long steps = 0;
};

/// Evolves the two-sheet lift of psi_0 with the same potential and compares
/// it against the single-sheet result psi_t on both sheets.
inline PeriodicityCheck check_periodicity_preserved(const CoveringWave& psi_t, const CoveringWave& psi_0,
                                                    const PotentialField& v, double dt,
                                                    SolverOptions solver = {}) {
  if (psi_t.grid->node_count() != psi_0.grid->node_count() || psi_0.grid->sheets != 1) {
    throw Error("periodicity check: waves do not share a single-sheet grid");
  }
  PeriodicityCheck out;
  out.steps = std::llround((psi_t.time - psi_0.time) / dt);
  CoveringWave doubled = lift_to_sheets(psi_0, 2);
  const PotentialField v2 = v.tiled(*psi_0.grid, 2);
  const Hamiltonian h2 = assemble_hamiltonian(doubled.grid, v2, psi_0.twist);
  const CrankNicolson cn(h2, dt, solver);
  for (long long k = 0; k < out.steps; ++k) cn.advance(doubled);
  const auto& g = *psi_0.grid;
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_theta; ++j) {
      out.residual = std::max(out.residual, (psi_t.at(i, j) - doubled.at(i, j)).cwiseAbs().maxCoeff());
      const Vector lifted = psi_t.twist * psi_t.at(i, j);
      out.seam_residual =
          std::max(out.seam_residual, (lifted - doubled.at(i, j + g.n_theta)).cwiseAbs().maxCoeff());
    }
  }
  return out;
}

}  // namespace bohmcover
