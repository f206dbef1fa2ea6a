#pragma once

// Exemplar multiply-connected configuration spaces, their universal covers
// and tensor-product discretization grids.
//
// Every geometry here has deck group Z, generated by a rotation through the
// angular period of the fundamental domain. Points of the cover are stored as
// a base point plus an integer sheet index (winding) rather than as an
// unbounded angle.

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bohmcover/core.hpp"
#include "bohmcover/words.hpp"

namespace bohmcover {

enum class GeometryKind { Ring, Annulus, TwoAnyonRelative, SpinAnnulus };

inline std::string to_string(GeometryKind k) {
  switch (k) {
    case GeometryKind::Ring: return "ring";
    case GeometryKind::Annulus: return "annulus";
    case GeometryKind::TwoAnyonRelative: return "two_anyon";
    case GeometryKind::SpinAnnulus: return "spin_annulus";
  }
  return "?";
}

struct Geometry {
  GeometryKind kind = GeometryKind::Ring;
  double radius = 1.0;  // ring only
  double r_in = 1.0;    // radial kinds
  double r_out = 2.0;
  double mass = 1.0;    // effective mass of the (relative) coordinate
  int n_r = 1;
  int n_theta = 256;

  static Geometry ring(double radius, int n_theta) {
    Geometry g;
    g.kind = GeometryKind::Ring;
    g.radius = radius;
    g.n_theta = n_theta;
    g.validate();
    return g;
  }

  static Geometry annulus(double r_in, double r_out, int n_r, int n_theta,
                          GeometryKind kind = GeometryKind::Annulus) {
    Geometry g;
    g.kind = kind;
    g.r_in = r_in;
    g.r_out = r_out;
    g.n_r = n_r;
    g.n_theta = n_theta;
    // Relative coordinate of two unit masses carries the reduced mass.
    if (kind == GeometryKind::TwoAnyonRelative) g.mass = 0.5;
    g.validate();
    return g;
  }

  bool has_radial() const { return kind != GeometryKind::Ring; }
  int fiber_dim() const { return kind == GeometryKind::SpinAnnulus ? 2 : 1; }

  /// Angular extent of one fundamental domain; the deck generator shifts by it.
  double theta_period() const { return kind == GeometryKind::TwoAnyonRelative ? kPi : kTwoPi; }

  /// Name of the fundamental-group generator matching the deck generator.
  std::string loop_generator_name() const { return kind == GeometryKind::TwoAnyonRelative ? "s" : "a"; }

  void validate() const {
    if (n_theta < 8) throw Error("grid: n_theta must be >= 8");
    if (!(mass > 0.0)) throw Error("geometry: mass must be positive");
    if (kind == GeometryKind::Ring) {
      if (!(radius > 0.0)) throw Error("geometry: ring radius must be positive");
    } else {
      if (n_r < 8) throw Error("grid: n_r must be >= 8");
      if (!(r_in > 0.0 && r_out > r_in)) throw Error("geometry: need 0 < r_in < r_out");
    }
  }

  /// Riemannian volume of the fundamental domain.
  double domain_volume() const {
    if (kind == GeometryKind::Ring) return kTwoPi * radius;
    return 0.5 * theta_period() * (r_out * r_out - r_in * r_in);
  }
};

struct BaseCoords {
  double r = 0.0;
  double theta = 0.0;
  friend bool operator==(const BaseCoords&, const BaseCoords&) = default;
};

struct CoverPoint {
  BaseCoords base;
  long long winding = 0;
  friend bool operator==(const CoverPoint&, const CoverPoint&) = default;
};

/// Deck transformations are words in the single deck generator.
using DeckElement = Word;
/// Homotopy classes of loops, as words in the fundamental-group generator.
using LoopClass = Word;

inline BaseCoords project_point(const CoverPoint& p) { return p.base; }

inline bool in_fundamental_domain(const Geometry& g, const BaseCoords& q) {
  if (!(q.theta >= 0.0 && q.theta < g.theta_period())) return false;
  if (g.kind == GeometryKind::Ring) return q.r == g.radius;
  return q.r >= g.r_in && q.r <= g.r_out;
}

inline long long deck_exponent(const DeckElement& sigma) {
  if (sigma.max_generator() > 0) {
    throw Error("deck element " + sigma.to_string() + " is not a word in the single deck generator");
  }
  return sigma.exponent_sum(0);
}

inline CoverPoint deck_act(const Geometry& g, const DeckElement& sigma, const CoverPoint& p) {
  (void)g;
  return CoverPoint{p.base, p.winding + deck_exponent(sigma)};
}

/// Loop class of the projected path from basepoint to sigma * basepoint.
inline LoopClass deck_to_loop(const DeckElement& sigma, const CoverPoint& basepoint) {
  (void)basepoint;  // Z is abelian: every phi_qhat agrees
  return Word::generator(0, deck_exponent(sigma));
}

/// Discretization of `sheets` consecutive fundamental domains.
///
/// Radial nodes follow the node-endpoint convention r_i = r_in + i dr with
/// dr = (r_out - r_in)/(n_r - 1); the wall rows i = 0 and i = n_r - 1 carry
/// psi = 0. Angular nodes are theta_j = j dtheta, j < n_theta * sheets.
/// Node (i, j) owns the cell [r_i - dr/2, r_i + dr/2] x [theta_j - dtheta/2,
/// theta_j + dtheta/2), clipped at the walls, and its weight is that cell's area.
struct GridSpec {
  Geometry geometry;
  int sheets = 1;
  int n_r = 1;
  int n_theta = 0;  // over all sheets
  double dr = 0.0;
  double dtheta = 0.0;
  double theta_extent = 0.0;
  std::vector<double> r;        // n_r
  std::vector<double> theta;    // n_theta
  std::vector<double> weights;  // n_r * n_theta
  int row_begin = 0;            // first row with unknowns
  int row_end = 1;              // one past the last

  int fiber_dim() const { return geometry.fiber_dim(); }
  std::size_t node_count() const { return static_cast<std::size_t>(n_r) * static_cast<std::size_t>(n_theta); }
  std::size_t node(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_theta) + static_cast<std::size_t>(j);
  }
  int interior_rows() const { return row_end - row_begin; }
  std::size_t unknown_count() const {
    return static_cast<std::size_t>(interior_rows()) * static_cast<std::size_t>(n_theta) *
           static_cast<std::size_t>(fiber_dim());
  }
  bool is_wall_row(int i) const { return i < row_begin || i >= row_end; }

  /// Column index into the stored range plus the deck shift (in units of the
  /// grid's own period) needed to reach column j.
  std::pair<int, int> wrap_column(int j) const {
    int shift = 0;
    while (j < 0) {
      j += n_theta;
      --shift;
    }
    while (j >= n_theta) {
      j -= n_theta;
      ++shift;
    }
    return {j, shift};
  }

  double total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

inline GridSpec build_grid(const Geometry& g, int sheets = 1) {
  g.validate();
  if (sheets < 1) throw Error("grid: sheets must be >= 1");
  GridSpec s;
  s.geometry = g;
  s.sheets = sheets;
  s.n_theta = g.n_theta * sheets;
  s.theta_extent = g.theta_period() * sheets;
  s.dtheta = g.theta_period() / g.n_theta;
  s.theta.resize(static_cast<std::size_t>(s.n_theta));
  for (int j = 0; j < s.n_theta; ++j) s.theta[j] = j * s.dtheta;
  if (g.kind == GeometryKind::Ring) {
    s.n_r = 1;
    s.r = {g.radius};
    s.row_begin = 0;
    s.row_end = 1;
    s.weights.assign(static_cast<std::size_t>(s.n_theta), g.radius * s.dtheta);
    return s;
  }
  s.n_r = g.n_r;
  s.dr = (g.r_out - g.r_in) / (g.n_r - 1);
  s.r.resize(static_cast<std::size_t>(s.n_r));
  for (int i = 0; i < s.n_r; ++i) s.r[i] = g.r_in + i * s.dr;
  s.r.back() = g.r_out;
  s.row_begin = 1;
  s.row_end = s.n_r - 1;
  s.weights.resize(s.node_count());
  for (int i = 0; i < s.n_r; ++i) {
    // Area of the clipped cell: integral of r dr over the half-cells inside the domain.
    const double lo = i == 0 ? s.r[i] : s.r[i] - 0.5 * s.dr;
    const double hi = i == s.n_r - 1 ? s.r[i] : s.r[i] + 0.5 * s.dr;
    const double w = 0.5 * (hi * hi - lo * lo) * s.dtheta;
    for (int j = 0; j < s.n_theta; ++j) s.weights[s.node(i, j)] = w;
  }
  return s;
}

using GridPtr = std::shared_ptr<const GridSpec>;

inline GridPtr make_grid(const Geometry& g, int sheets = 1) {
  return std::make_shared<const GridSpec>(build_grid(g, sheets));
}

}  // namespace bohmcover
