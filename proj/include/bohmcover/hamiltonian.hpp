#pragma once

// Twisted finite-difference Hamiltonian -(1/2m) Laplacian + V on a grid of
// fundamental domains, Crank-Nicolson propagation and low-lying spectra.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "bohmcover/core.hpp"
#include "bohmcover/geometry.hpp"
#include "bohmcover/wave.hpp"

namespace bohmcover {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

struct Hamiltonian {
  GridPtr grid;
  Matrix twist;            // generator factor Gamma
  SparseMatrix op;         // acts on the packed vector of interior unknowns
  Eigen::VectorXd weights; // quadrature weight per unknown
  double potential_floor = 0.0;  // lower bound of V over the grid

  Eigen::Index size() const { return op.rows(); }

  /// Same operator in the orthonormal coordinates phi = W^{1/2} psi; Hermitian.
  SparseMatrix symmetric() const {
    const Eigen::VectorXd s = weights.cwiseSqrt();
    const Eigen::VectorXd si = s.cwiseInverse();
    SparseMatrix out = op;
    for (int k = 0; k < out.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(out, k); it; ++it) it.valueRef() *= s(it.row()) * si(it.col());
    }
    return out;
  }

  /// ||W H - (W H)^dagger||_F / ||W H||_F.
  double hermiticity_defect() const {
    const SparseMatrix m = weights.cast<Complex>().asDiagonal() * op;
    const SparseMatrix adj = m.adjoint();
    const double n = m.norm();
    return n > 0.0 ? SparseMatrix(m - adj).norm() / n : 0.0;
  }
};

/// Interior unknowns <-> full-grid storage.
inline Vector pack(const CoveringWave& psi) {
  const auto& g = *psi.grid;
  const int d = g.fiber_dim();
  Vector out(static_cast<Eigen::Index>(g.unknown_count()));
  Eigen::Index k = 0;
  for (int i = g.row_begin; i < g.row_end; ++i) {
    for (int j = 0; j < g.n_theta; ++j) {
      out.segment(k, d) = psi.at(i, j);
      k += d;
    }
  }
  return out;
}

inline void unpack(const Vector& x, CoveringWave& psi) {
  const auto& g = *psi.grid;
  const int d = g.fiber_dim();
  psi.values.setZero();
  Eigen::Index k = 0;
  for (int i = g.row_begin; i < g.row_end; ++i) {
    for (int j = 0; j < g.n_theta; ++j) {
      psi.at(i, j) = x.segment(k, d);
      k += d;
    }
  }
}

inline Eigen::Index unknown_index(const GridSpec& g, int i, int j) {
  return (static_cast<Eigen::Index>(i - g.row_begin) * g.n_theta + j) * g.fiber_dim();
}

/// Largest ||[V(q), Gamma]||_F over the nodes.
inline double max_commutator(const PotentialField& v, const Matrix& gamma) {
  double worst = 0.0;
  for (std::size_t k = 0; k < v.nodes(); ++k) worst = std::max(worst, commutator_norm(v.at(k), gamma));
  return worst;
}

inline Hamiltonian assemble_hamiltonian(GridPtr grid, const PotentialField& v, const Matrix& twist) {
  const auto& g = *grid;
  const int d = g.fiber_dim();
  if (twist.rows() != d || twist.cols() != d) throw Error("hamiltonian: factor dimension does not match fiber");
  if (unitarity_defect(twist) > 1e-12) throw Error("hamiltonian: factor is not unitary");
  if (v.fiber_dim != d || v.nodes() != g.node_count()) throw Error("hamiltonian: potential does not match grid");
  if (v.max_hermiticity_defect() > 1e-12) throw Error("hamiltonian: potential is not Hermitian");
  const double comm = max_commutator(v, twist);
  if (comm > 1e-12) {
    throw AdmissibilityError("potential does not commute with the topological factor", comm);
  }

  const Matrix seam = unitary_power(twist, g.sheets);
  const Matrix seam_adj = seam.adjoint();
  const double kin = 1.0 / (2.0 * g.geometry.mass);
  const bool radial = g.geometry.has_radial();

  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(g.unknown_count() * static_cast<std::size_t>(5 * d));
  auto add_block = [&](Eigen::Index row, Eigen::Index col, const Matrix& block) {
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        if (block(a, b) != Complex{}) trips.emplace_back(row + a, col + b, block(a, b));
      }
    }
  };
  auto add_scalar = [&](Eigen::Index row, Eigen::Index col, double c) {
    for (int a = 0; a < d; ++a) trips.emplace_back(row + a, col + a, c);
  };

  double vmin = std::numeric_limits<double>::infinity();
  Eigen::VectorXd weights(static_cast<Eigen::Index>(g.unknown_count()));
  for (int i = g.row_begin; i < g.row_end; ++i) {
    const double r = g.r[i];
    const double ct = kin / (r * r * g.dtheta * g.dtheta);
    for (int j = 0; j < g.n_theta; ++j) {
      const Eigen::Index row = unknown_index(g, i, j);
      double diag = 2.0 * ct;
      // Angular neighbours; the seam couples through Gamma (forward) and Gamma^dagger (backward).
      const int jp = j + 1 == g.n_theta ? 0 : j + 1;
      const int jm = j == 0 ? g.n_theta - 1 : j - 1;
      if (j + 1 == g.n_theta) {
        add_block(row, unknown_index(g, i, jp), -ct * seam);
      } else {
        add_scalar(row, unknown_index(g, i, jp), -ct);
      }
      if (j == 0) {
        add_block(row, unknown_index(g, i, jm), -ct * seam_adj);
      } else {
        add_scalar(row, unknown_index(g, i, jm), -ct);
      }
      if (radial) {
        const double cr = kin / (g.dr * g.dr);
        const double up = 1.0 + 0.5 * g.dr / r;
        const double down = 1.0 - 0.5 * g.dr / r;
        diag += 2.0 * cr;
        if (!g.is_wall_row(i + 1)) add_scalar(row, unknown_index(g, i + 1, j), -cr * up);
        if (!g.is_wall_row(i - 1)) add_scalar(row, unknown_index(g, i - 1, j), -cr * down);
      }
      const auto vn = v.at(g.node(i, j));
      Matrix block = vn;
      block.diagonal().array() += diag;
      add_block(row, row, block);
      if (d == 1) {
        vmin = std::min(vmin, vn(0, 0).real());
      } else {
        Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(vn), Eigen::EigenvaluesOnly);
        vmin = std::min(vmin, es.eigenvalues()(0));
      }
      weights.segment(row, d).setConstant(g.weights[g.node(i, j)]);
    }
  }
  Hamiltonian h;
  h.grid = std::move(grid);
  h.twist = twist;
  h.op.resize(static_cast<Eigen::Index>(g.unknown_count()), static_cast<Eigen::Index>(g.unknown_count()));
  h.op.setFromTriplets(trips.begin(), trips.end());
  h.op.makeCompressed();
  h.weights = std::move(weights);
  h.potential_floor = vmin;
  return h;
}

inline Hamiltonian assemble_hamiltonian(GridPtr grid, const Matrix& twist) {
  const PotentialField v = PotentialField::zero(*grid);
  return assemble_hamiltonian(std::move(grid), v, twist);
}

// ---------------------------------------------------------------------------
// Crank-Nicolson

struct SolverOptions {
  double tolerance = 1e-12;  // relative residual of each linear solve
};

/// (I + i dt H / 2) psi' = (I - i dt H / 2) psi, with the LU factors reused
/// across steps.
class CrankNicolson {
 public:
  CrankNicolson(const Hamiltonian& h, double dt, SolverOptions opts = {})
      : grid_(h.grid), twist_(h.twist), dt_(dt), opts_(opts) {
    if (!(dt > 0.0)) throw Error("crank-nicolson: dt must be positive");
    SparseMatrix id(h.size(), h.size());
    id.setIdentity();
    const Complex half = 0.5 * kI * dt;
    lhs_ = id + half * h.op;
    rhs_ = id - half * h.op;
    lhs_.makeCompressed();
    lu_.analyzePattern(lhs_);
    lu_.factorize(lhs_);
    if (lu_.info() != Eigen::Success) throw Error("crank-nicolson: LU factorization failed");
  }

  double dt() const { return dt_; }

  CoveringWave step(const CoveringWave& psi) const {
    CoveringWave out = psi;
    advance(out);
    return out;
  }

  /// In-place step, for callers that keep a single working wave.
  void advance(CoveringWave& psi) const {
    if (psi.grid.get() != grid_.get() && psi.grid->node_count() != grid_->node_count()) {
      throw Error("crank-nicolson: wave and Hamiltonian grids differ");
    }
    const Vector x = pack(psi);
    const Vector b = rhs_ * x;
    Vector y = lu_.solve(b);
    const double bn = b.norm();
    const double res = (lhs_ * y - b).norm();
    if (!(res <= opts_.tolerance * std::max(bn, 1e-300))) {
      // One step of iterative refinement before giving up.
      y += lu_.solve(Vector(b - lhs_ * y));
      const double res2 = (lhs_ * y - b).norm();
      if (!(res2 <= opts_.tolerance * std::max(bn, 1e-300))) {
        throw Error("crank-nicolson: linear solve missed tolerance (residual " + std::to_string(res2 / bn) + ")");
      }
    }
    unpack(y, psi);
    psi.time += dt_;
  }

 private:
  GridPtr grid_;
  Matrix twist_;
  double dt_;
  SolverOptions opts_;
  SparseMatrix lhs_;
  SparseMatrix rhs_;
  Eigen::SparseLU<SparseMatrix> lu_;
};

inline CoveringWave evolve_step(const CoveringWave& psi, const Hamiltonian& h, double dt) {
  return CrankNicolson(h, dt).step(psi);
}

// ---------------------------------------------------------------------------
// Spectrum

struct Eigenpair {
  double energy = 0.0;
  CoveringWave wave;  // normalized on one fundamental domain
};

enum class SpectrumMethod { Auto, Dense, ShiftInvert };

struct SpectrumOptions {
  SpectrumMethod method = SpectrumMethod::Auto;
  Eigen::Index dense_limit = 2048;
  double tolerance = 1e-10;
  int max_iterations = 2000;
  unsigned seed = 12345;
};

namespace detail {

inline std::vector<Eigenpair> to_pairs(const Hamiltonian& h, const Eigen::VectorXd& energies,
                                       const Matrix& phi, int k) {
  std::vector<Eigenpair> out;
  const Eigen::VectorXd si = h.weights.cwiseSqrt().cwiseInverse();
  for (int n = 0; n < k; ++n) {
    CoveringWave w = make_wave(h.grid, h.twist);
    unpack(Vector(si.cast<Complex>().asDiagonal() * phi.col(n)), w);
    w.normalize();
    out.push_back({energies(n), std::move(w)});
  }
  return out;
}

}  // namespace detail

/// k lowest eigenpairs, energies ascending.
inline std::vector<Eigenpair> spectrum(const Hamiltonian& h, int k, SpectrumOptions opts = {}) {
  const Eigen::Index n = h.size();
  if (k < 1 || k > n) throw Error("spectrum: need 1 <= k <= number of unknowns");
  const SparseMatrix s = h.symmetric();
  const bool dense = opts.method == SpectrumMethod::Dense ||
                     (opts.method == SpectrumMethod::Auto && n <= opts.dense_limit);
  if (dense) {
    Matrix m = Matrix(s);
    m = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success) throw Error("spectrum: dense eigensolver failed");
    return detail::to_pairs(h, es.eigenvalues().head(k), es.eigenvectors().leftCols(k), k);
  }

  // Block inverse iteration with Rayleigh-Ritz on (S - shift)^{-1}. The shift
  // sits below the spectrum: the kinetic term is positive semidefinite.
  const double shift = h.potential_floor - 1.0;
  SparseMatrix shifted = s;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift;
  shifted.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.analyzePattern(shifted);
  lu.factorize(shifted);
  if (lu.info() != Eigen::Success) throw Error("spectrum: factorization failed");

  const Eigen::Index p = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * k, k + 8));
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Matrix x(n, p);
  for (Eigen::Index c = 0; c < p; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) x(r, c) = Complex(normal(rng), normal(rng));
  }
  Eigen::VectorXd ritz;
  Matrix vecs;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Matrix y(n, p);
    for (Eigen::Index c = 0; c < p; ++c) y.col(c) = lu.solve(Vector(x.col(c)));
    Eigen::HouseholderQR<Matrix> qr(y);
    Matrix q = qr.householderQ() * Matrix::Identity(n, p);
    Matrix sq = s * q;
    Matrix small = q.adjoint() * sq;
    small = 0.5 * (small + small.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(small);
    ritz = es.eigenvalues();
    vecs = q * es.eigenvectors();
    const Matrix svecs = sq * es.eigenvectors();
    double worst = 0.0;
    for (int c = 0; c < k; ++c) {
      const double res = (svecs.col(c) - ritz(c) * vecs.col(c)).norm();
      worst = std::max(worst, res / std::max(1.0, std::abs(ritz(c))));
    }
    x = vecs;
    if (worst < opts.tolerance) return detail::to_pairs(h, ritz.head(k), vecs.leftCols(k), k);
  }
  throw Error("spectrum: subspace iteration did not converge");
}

}  // namespace bohmcover
