#pragma once

// Wave functions stored on one (or several glued) fundamental domains. The
// lift to the whole cover is implicit: psi(sigma^n q) = Gamma^n psi(q).

#include <cmath>
#include <variant>
#include <vector>

#include "bohmcover/core.hpp"
#include "bohmcover/geometry.hpp"
#include "bohmcover/topo_algebra.hpp"

namespace bohmcover {

/// Factor attached to the single deck generator of a PDE geometry.
using TopologicalFactor = std::variant<Character, UnitaryRep, PeriodicitySection>;

/// Gamma for the deck generator, as a fiber_dim x fiber_dim matrix.
inline Matrix generator_matrix(const TopologicalFactor& f, int fiber_dim) {
  Matrix m;
  if (const auto* c = std::get_if<Character>(&f)) {
    if (c->generator_count() != 1) throw Error("factor: Z geometries need exactly one character phase");
    m = c->phase(0) * identity(fiber_dim);
  } else if (const auto* u = std::get_if<UnitaryRep>(&f)) {
    if (u->generator_count() != 1) throw Error("factor: Z geometries need exactly one matrix");
    m = u->matrices.front();
  } else {
    const auto& s = std::get<PeriodicitySection>(f);
    if (s.generator_count() != 1) throw Error("factor: Z geometries need exactly one section matrix");
    if (unitarity_defect(s.holonomy_of_generator(0)) > 1e-12 ||
        (s.holonomy_of_generator(0) - identity(s.dim)).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error("factor: PDE geometries carry the trivial connection; holonomy must be Id");
    }
    m = s.base.front();
  }
  if (m.rows() != fiber_dim || m.cols() != fiber_dim) throw Error("factor: dimension does not match the fiber");
  if (unitarity_defect(m) > 1e-12) throw Error("factor: generator matrix is not unitary");
  return m;
}

struct CoveringWave {
  GridPtr grid;
  Matrix twist;     // Gamma of one deck generator (not of the grid's full period)
  Vector values;    // node-major, fiber index fastest; wall rows are zero
  double time = 0.0;

  int fiber_dim() const { return grid->fiber_dim(); }

  /// Gamma^sheets: the factor picked up across this grid's own seam.
  Matrix seam_factor() const { return unitary_power(twist, grid->sheets); }

  Eigen::Index offset(int i, int j) const {
    return static_cast<Eigen::Index>(grid->node(i, j)) * fiber_dim();
  }

  auto at(int i, int j) const { return values.segment(offset(i, j), fiber_dim()); }
  auto at(int i, int j) { return values.segment(offset(i, j), fiber_dim()); }

  /// Value at any column, continuing past the seam via the periodicity condition.
  Vector lifted(int i, int j) const {
    const auto [col, shift] = grid->wrap_column(j);
    Vector v = at(i, col);
    if (shift != 0) v = unitary_power(seam_factor(), shift) * v;
    return v;
  }

  double density(int i, int j) const { return at(i, j).squaredNorm(); }

  double norm_squared() const {
    double s = 0.0;
    for (int i = 0; i < grid->n_r; ++i) {
      for (int j = 0; j < grid->n_theta; ++j) s += grid->weights[grid->node(i, j)] * density(i, j);
    }
    return s;
  }

  /// Inner product restricted to one fundamental domain's worth of nodes is
  /// what the physics normalizes; for multi-sheet grids this is the total
  /// divided by the sheet count.
  double domain_norm_squared() const { return norm_squared() / grid->sheets; }

  void normalize() {
    const double n = domain_norm_squared();
    if (!(n > 0.0) || !std::isfinite(n)) throw Error("wave: cannot normalize a zero or non-finite wave");
    values /= std::sqrt(n);
  }

  bool finite() const { return values.allFinite(); }
};

inline CoveringWave make_wave(GridPtr grid, Matrix twist) {
  CoveringWave w;
  w.values = Vector::Zero(static_cast<Eigen::Index>(grid->node_count()) * grid->fiber_dim());
  w.grid = std::move(grid);
  w.twist = std::move(twist);
  return w;
}

/// Copies the wave onto `sheets` consecutive fundamental domains, sheet m
/// holding glue^m psi. With glue = Gamma this is the lift; any other glue
/// builds a deliberately inconsistent wave for negative controls.
inline CoveringWave lift_to_sheets(const CoveringWave& psi, int sheets, const Matrix* glue = nullptr) {
  if (psi.grid->sheets != 1) throw Error("lift: source wave must live on a single sheet");
  auto grid = make_grid(psi.grid->geometry, sheets);
  CoveringWave out = make_wave(grid, psi.twist);
  out.time = psi.time;
  const Matrix g = glue ? *glue : psi.twist;
  const int n = psi.grid->n_theta;
  for (int m = 0; m < sheets; ++m) {
    const Matrix gm = unitary_power(g, m);
    for (int i = 0; i < grid->n_r; ++i) {
      for (int j = 0; j < n; ++j) out.at(i, j + m * n) = gm * psi.at(i, j);
    }
  }
  return out;
}

/// Hermitian fiber endomorphism per node (flat storage, d*d per node, column-major).
struct PotentialField {
  int fiber_dim = 1;
  std::vector<Complex> data;

  static PotentialField zero(const GridSpec& g) {
    PotentialField v;
    v.fiber_dim = g.fiber_dim();
    v.data.assign(g.node_count() * static_cast<std::size_t>(v.fiber_dim * v.fiber_dim), Complex{});
    return v;
  }

  std::size_t nodes() const { return data.size() / static_cast<std::size_t>(fiber_dim * fiber_dim); }

  Eigen::Map<const Matrix> at(std::size_t node) const {
    return {data.data() + node * static_cast<std::size_t>(fiber_dim * fiber_dim), fiber_dim, fiber_dim};
  }
  Eigen::Map<Matrix> at(std::size_t node) {
    return {data.data() + node * static_cast<std::size_t>(fiber_dim * fiber_dim), fiber_dim, fiber_dim};
  }

  double max_hermiticity_defect() const {
    double d = 0.0;
    for (std::size_t k = 0; k < nodes(); ++k) {
      const Matrix m = at(k);
      d = std::max(d, (m - m.adjoint()).cwiseAbs().maxCoeff());
    }
    return d;
  }

  /// Repeats a single-sheet field over `sheets` sheets of the same geometry.
  PotentialField tiled(const GridSpec& single, int sheets) const {
    PotentialField out;
    out.fiber_dim = fiber_dim;
    const std::size_t dd = static_cast<std::size_t>(fiber_dim * fiber_dim);
    const int n = single.n_theta;
    out.data.resize(data.size() * static_cast<std::size_t>(sheets));
    for (int i = 0; i < single.n_r; ++i) {
      for (int m = 0; m < sheets; ++m) {
        for (int j = 0; j < n; ++j) {
          const std::size_t src = single.node(i, j) * dd;
          const std::size_t dst = (static_cast<std::size_t>(i) * static_cast<std::size_t>(n * sheets) +
                                   static_cast<std::size_t>(j + m * n)) * dd;
          std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(src), dd,
                      out.data.begin() + static_cast<std::ptrdiff_t>(dst));
        }
      }
    }
    return out;
  }
};

}  // namespace bohmcover
