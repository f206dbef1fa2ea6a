#pragma once

// Bohmian velocity fields on the grid, the doubled-cover projectability
// check, and RK4 trajectory integration with winding bookkeeping.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <vector>

#include "bohmcover/core.hpp"
#include "bohmcover/geometry.hpp"
#include "bohmcover/wave.hpp"

namespace bohmcover {

enum class NodeFlag : std::uint8_t { Ok = 0, Nodal = 1, NotComputed = 2 };

/// Velocity in grid coordinates (dr/dt, dtheta/dt) at every node.
struct VelocityField {
  GridPtr grid;
  double time = 0.0;
  std::vector<double> v_r;
  std::vector<double> v_theta;
  std::vector<double> density;
  std::vector<NodeFlag> flags;
  double max_density = 0.0;
  double node_floor = 0.0;
};

struct VelocityOptions {
  int half_width = 4;           // central stencil of order 2 * half_width
  double floor_relative = 1e-12;
  bool use_seam = true;         // false: never look across the grid's own seam
  double scale = 1.0;
};

/// Central-difference weights c_k (k = 1..s) for f'(0) ~ sum c_k (f(k) - f(-k)) / h.
inline std::vector<double> central_weights(int s) {
  std::vector<double> c(static_cast<std::size_t>(s));
  for (int k = 1; k <= s; ++k) {
    double num = 1.0;  // (s!)^2 / ((s-k)! (s+k)!)
    for (int m = 1; m <= k; ++m) num *= static_cast<double>(s - k + m) / static_cast<double>(s + m);
    c[k - 1] = ((k % 2 == 1) ? 1.0 : -1.0) * num / k;
  }
  return c;
}

inline VelocityField velocity_field(const CoveringWave& psi, VelocityOptions opts = {}) {
  const auto& g = *psi.grid;
  const int d = g.fiber_dim();
  const int s = opts.half_width;
  if (s < 1 || 2 * s >= g.n_theta) throw Error("velocity: stencil too wide for the grid");
  const auto c = central_weights(s);
  const Matrix fwd = psi.seam_factor();
  const Matrix bwd = fwd.adjoint();
  const double inv_m = 1.0 / g.geometry.mass;

  VelocityField v;
  v.grid = psi.grid;
  v.time = psi.time;
  const std::size_t nodes = g.node_count();
  v.v_r.assign(nodes, 0.0);
  v.v_theta.assign(nodes, 0.0);
  v.density.assign(nodes, 0.0);
  v.flags.assign(nodes, NodeFlag::Ok);
  for (int i = 0; i < g.n_r; ++i) {
    for (int j = 0; j < g.n_theta; ++j) {
      const double rho = psi.density(i, j);
      v.density[g.node(i, j)] = rho;
      v.max_density = std::max(v.max_density, rho);
    }
  }
  v.node_floor = opts.floor_relative * v.max_density;

  auto angular = [&](int i, int j) -> Vector {
    if (j >= 0 && j < g.n_theta) return psi.at(i, j);
    if (j < 0) return bwd * psi.at(i, j + g.n_theta);
    return fwd * psi.at(i, j - g.n_theta);
  };
  auto radial = [&](int i, int j) -> Vector {
    if (i < 0) return -psi.at(-i, j);
    if (i > g.n_r - 1) return -psi.at(2 * (g.n_r - 1) - i, j);
    return psi.at(i, j);
  };

  for (int i = 0; i < g.n_r; ++i) {
    const double r = g.r[i];
    for (int j = 0; j < g.n_theta; ++j) {
      const std::size_t node = g.node(i, j);
      const double rho = v.density[node];
      if (g.is_wall_row(i) || rho <= v.node_floor || rho == 0.0) {
        v.flags[node] = NodeFlag::Nodal;
        continue;
      }
      if (!opts.use_seam && (j - s < 0 || j + s >= g.n_theta)) {
        v.flags[node] = NodeFlag::NotComputed;
        continue;
      }
      const Vector here = psi.at(i, j);
      Vector dth = Vector::Zero(d);
      for (int k = 1; k <= s; ++k) dth += c[k - 1] * (angular(i, j + k) - angular(i, j - k));
      dth /= g.dtheta;
      v.v_theta[node] = opts.scale * inv_m * here.dot(dth).imag() / (rho * r * r);
      if (g.geometry.has_radial()) {
        Vector drv = Vector::Zero(d);
        for (int k = 1; k <= s; ++k) drv += c[k - 1] * (radial(i + k, j) - radial(i - k, j));
        drv /= g.dr;
        v.v_r[node] = opts.scale * inv_m * here.dot(drv).imag() / rho;
      }
    }
  }
  return v;
}

/// Max |v(sigma q) - sigma_* v(q)| over nodes, using a two-sheet copy of psi
/// glued with `glue` (Gamma unless overridden) and a stencil that never
/// crosses the two-sheet grid's own seam.
inline double check_projectability(const CoveringWave& psi, const Matrix* glue = nullptr,
                                   VelocityOptions opts = {}) {
  const auto single = velocity_field(psi, opts);
  const CoveringWave doubled = lift_to_sheets(psi, 2, glue);
  VelocityOptions interior = opts;
  interior.use_seam = false;
  const auto dbl = velocity_field(doubled, interior);
  const auto& g = *psi.grid;
  const auto& g2 = *doubled.grid;
  const int n = g.n_theta;
  double worst = 0.0;
  for (int i = g.row_begin; i < g.row_end; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t a = g.node(i, j);
      if (single.flags[a] != NodeFlag::Ok) continue;
      for (int jj : {j, j + n}) {
        const std::size_t b = g2.node(i, jj);
        if (dbl.flags[b] != NodeFlag::Ok) continue;
        worst = std::max(worst, std::abs(single.v_theta[a] - dbl.v_theta[b]));
        worst = std::max(worst, std::abs(single.v_r[a] - dbl.v_r[b]));
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Interpolation

struct FlowSample {
  double v_r = 0.0;
  double v_theta = 0.0;
  double density = 0.0;
  double floor = 0.0;
};

/// Bilinear interpolation of a velocity field at a base point.
inline FlowSample interpolate(const VelocityField& f, const BaseCoords& q) {
  const auto& g = *f.grid;
  double th = std::fmod(q.theta, g.theta_extent);
  if (th < 0.0) th += g.theta_extent;
  const double x = th / g.dtheta;
  int j0 = static_cast<int>(std::floor(x));
  const double tx = x - j0;
  j0 %= g.n_theta;
  const int j1 = (j0 + 1) % g.n_theta;

  int i0 = 0;
  double ty = 0.0;
  if (g.geometry.has_radial()) {
    const double y = (q.r - g.r.front()) / g.dr;
    i0 = std::clamp(static_cast<int>(std::floor(y)), 0, g.n_r - 2);
    ty = std::clamp(y - i0, 0.0, 1.0);
  }
  const int i1 = g.geometry.has_radial() ? i0 + 1 : 0;

  auto mix = [&](const std::vector<double>& a) {
    const double lo = (1.0 - tx) * a[g.node(i0, j0)] + tx * a[g.node(i0, j1)];
    const double hi = (1.0 - tx) * a[g.node(i1, j0)] + tx * a[g.node(i1, j1)];
    return (1.0 - ty) * lo + ty * hi;
  };
  return {mix(f.v_r), mix(f.v_theta), mix(f.density), f.node_floor};
}

/// Anything that yields a velocity at (t, q).
template <class F>
concept FlowSource = requires(const F& f, double t, BaseCoords q) {
  { f.sample(t, q) } -> std::same_as<FlowSample>;
};

/// Linear-in-time blend of two snapshots.
struct FlowWindow {
  const VelocityField* a = nullptr;
  const VelocityField* b = nullptr;
  double scale = 1.0;

  FlowSample sample(double t, const BaseCoords& q) const {
    const FlowSample sa = interpolate(*a, q);
    if (b == nullptr || b->time == a->time) return scaled(sa);
    const FlowSample sb = interpolate(*b, q);
    const double w = std::clamp((t - a->time) / (b->time - a->time), 0.0, 1.0);
    return scaled({(1 - w) * sa.v_r + w * sb.v_r, (1 - w) * sa.v_theta + w * sb.v_theta,
                   (1 - w) * sa.density + w * sb.density, std::max(sa.floor, sb.floor)});
  }

 private:
  FlowSample scaled(FlowSample s) const {
    s.v_r *= scale;
    s.v_theta *= scale;
    return s;
  }
};

/// Snapshots at increasing times; linear in time between neighbours.
struct SnapshotFlow {
  std::vector<VelocityField> fields;
  double scale = 1.0;

  FlowSample sample(double t, const BaseCoords& q) const {
    if (fields.empty()) throw Error("flow: no snapshots");
    auto it = std::upper_bound(fields.begin(), fields.end(), t,
                               [](double x, const VelocityField& f) { return x < f.time; });
    std::size_t hi = static_cast<std::size_t>(it - fields.begin());
    if (hi == 0) hi = 1;
    if (hi >= fields.size()) hi = fields.size() - 1;
    const std::size_t lo = fields.size() == 1 ? 0 : hi - 1;
    FlowWindow w{&fields[lo], fields.size() == 1 ? nullptr : &fields[hi], scale};
    return w.sample(t, q);
  }
};

// ---------------------------------------------------------------------------
// Trajectories

enum class TrajectoryStatus { Running, Finished, HitNodalRegion, LeftDomain };

inline const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Running: return "running";
    case TrajectoryStatus::Finished: return "finished";
    case TrajectoryStatus::HitNodalRegion: return "hit_nodal_region";
    case TrajectoryStatus::LeftDomain: return "left_domain";
  }
  return "?";
}

struct TrajectorySample {
  double t = 0.0;
  CoverPoint q;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  TrajectoryStatus status = TrajectoryStatus::Running;
};

/// Per-grid limits used while integrating.
struct DomainGuard {
  double theta_extent = kTwoPi;
  bool radial = false;
  double r_lo = 0.0;
  double r_hi = 0.0;

  static DomainGuard for_grid(const GridSpec& g) {
    DomainGuard d;
    d.theta_extent = g.theta_extent;
    d.radial = g.geometry.has_radial();
    if (d.radial) {
      d.r_lo = g.geometry.r_in + 2.0 * g.dr;
      d.r_hi = g.geometry.r_out - 2.0 * g.dr;
    }
    return d;
  }

  bool inside(double r) const { return !radial || (r > r_lo && r < r_hi); }
};

/// One RK4 step on the cover. Returns the status after the step; the point
/// is left unchanged unless the step completes.
template <FlowSource Flow>
TrajectoryStatus rk4_step(const Flow& flow, const DomainGuard& guard, double t, double dt, CoverPoint& p) {
  auto eval = [&](double tt, double r, double th, double& kr, double& kth) {
    if (!guard.inside(r)) return TrajectoryStatus::LeftDomain;
    const FlowSample s = flow.sample(tt, BaseCoords{r, th});
    if (!(s.density > s.floor)) return TrajectoryStatus::HitNodalRegion;
    kr = guard.radial ? s.v_r : 0.0;
    kth = s.v_theta;
    return TrajectoryStatus::Running;
  };
  const double r0 = p.base.r;
  const double th0 = p.base.theta;
  double k1r, k1t, k2r, k2t, k3r, k3t, k4r, k4t;
  TrajectoryStatus st;
  if ((st = eval(t, r0, th0, k1r, k1t)) != TrajectoryStatus::Running) return st;
  if ((st = eval(t + 0.5 * dt, r0 + 0.5 * dt * k1r, th0 + 0.5 * dt * k1t, k2r, k2t)) != TrajectoryStatus::Running) return st;
  if ((st = eval(t + 0.5 * dt, r0 + 0.5 * dt * k2r, th0 + 0.5 * dt * k2t, k3r, k3t)) != TrajectoryStatus::Running) return st;
  if ((st = eval(t + dt, r0 + dt * k3r, th0 + dt * k3t, k4r, k4t)) != TrajectoryStatus::Running) return st;
  const double r1 = r0 + dt / 6.0 * (k1r + 2 * k2r + 2 * k3r + k4r);
  double th1 = th0 + dt / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t);
  if (!guard.inside(r1)) return TrajectoryStatus::LeftDomain;
  long long w = p.winding;
  while (th1 >= guard.theta_extent) {
    th1 -= guard.theta_extent;
    ++w;
  }
  while (th1 < 0.0) {
    th1 += guard.theta_extent;
    --w;
  }
  p = CoverPoint{{r1, th1}, w};
  return TrajectoryStatus::Running;
}

struct IntegrationOptions {
  double dt = 1e-3;
  double t0 = 0.0;
  int record_every = 1;
};

inline void validate_start(const GridSpec& g, const CoverPoint& q0) {
  const bool theta_ok = q0.base.theta >= 0.0 && q0.base.theta < g.theta_extent;
  const bool r_ok = g.geometry.has_radial()
                        ? (q0.base.r >= g.geometry.r_in && q0.base.r <= g.geometry.r_out)
                        : q0.base.r == g.geometry.radius;
  if (!theta_ok || !r_ok || !std::isfinite(q0.base.r) || !std::isfinite(q0.base.theta)) {
    throw Error("trajectory: initial point outside the fundamental domain");
  }
}

/// Integrates dQ/dt = v(Q, t) from t0 to t_final with fixed-step RK4.
template <FlowSource Flow>
Trajectory integrate_trajectory(const GridSpec& grid, const CoverPoint& q0, const Flow& flow, double t_final,
                                IntegrationOptions opts = {}) {
  validate_start(grid, q0);
  if (!(opts.dt > 0.0)) throw Error("trajectory: dt must be positive");
  const DomainGuard guard = DomainGuard::for_grid(grid);
  Trajectory tr;
  CoverPoint p = q0;
  double t = opts.t0;
  tr.samples.push_back({t, p});
  if (!guard.inside(p.base.r)) {
    tr.status = TrajectoryStatus::LeftDomain;
    return tr;
  }
  const long long steps = static_cast<long long>(std::llround((t_final - opts.t0) / opts.dt));
  for (long long k = 0; k < steps; ++k) {
    const TrajectoryStatus st = rk4_step(flow, guard, t, opts.dt, p);
    if (st != TrajectoryStatus::Running) {
      tr.status = st;
      return tr;
    }
    t = opts.t0 + static_cast<double>(k + 1) * opts.dt;
    if ((k + 1) % opts.record_every == 0 || k + 1 == steps) tr.samples.push_back({t, p});
  }
  tr.status = TrajectoryStatus::Finished;
  return tr;
}

}  // namespace bohmcover
