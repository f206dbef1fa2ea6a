#pragma once

// |psi|^2 sampling, lockstep ensemble propagation and goodness-of-fit tests
// of the transported ensemble against |psi_t|^2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "bohmcover/bohm_dynamics.hpp"
#include "bohmcover/core.hpp"
#include "bohmcover/geometry.hpp"
#include "bohmcover/hamiltonian.hpp"
#include "bohmcover/random.hpp"
#include "bohmcover/wave.hpp"

namespace bohmcover {

// ---------------------------------------------------------------------------
// Cell masses

/// Probability of each node's cell, w_n (psi_n, psi_n) normalized to one.
inline std::vector<double> cell_masses(const CoveringWave& psi) {
  const auto& g = *psi.grid;
  std::vector<double> m(g.node_count(), 0.0);
  double total = 0.0;
  for (int i = g.row_begin; i < g.row_end; ++i) {
    for (int j = 0; j < g.n_theta; ++j) {
      const double v = g.weights[g.node(i, j)] * psi.density(i, j);
      m[g.node(i, j)] = v;
      total += v;
    }
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw Error("sampling: degenerate density");
  for (double& v : m) v /= total;
  return m;
}

/// Node whose cell contains q.
inline std::size_t cell_of(const GridSpec& g, const BaseCoords& q) {
  double th = std::fmod(q.theta, g.theta_extent);
  if (th < 0.0) th += g.theta_extent;
  const int j = static_cast<int>(std::llround(th / g.dtheta)) % g.n_theta;
  int i = 0;
  if (g.geometry.has_radial()) {
    i = static_cast<int>(std::llround((q.r - g.r.front()) / g.dr));
    i = std::clamp(i, g.row_begin, g.row_end - 1);
  }
  return g.node(i, j);
}

/// n i.i.d. draws from the cellwise-constant density w |psi|^2: inverse CDF
/// over the flattened cells, then uniform (area-weighted) jitter in the cell.
inline std::vector<BaseCoords> sample_initial(const CoveringWave& psi0, std::size_t n, std::uint64_t seed) {
  const auto& g = *psi0.grid;
  const auto masses = cell_masses(psi0);
  std::vector<double> cdf(masses.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < masses.size(); ++k) cdf[k] = (acc += masses[k]);
  RandomStream rng(seed, 0);
  std::vector<BaseCoords> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    const std::size_t node = static_cast<std::size_t>(it - cdf.begin());
    const int i = static_cast<int>(node / static_cast<std::size_t>(g.n_theta));
    const int j = static_cast<int>(node % static_cast<std::size_t>(g.n_theta));
    double th = g.theta[j] + (rng.uniform() - 0.5) * g.dtheta;
    if (th < 0.0) th += g.theta_extent;
    if (th >= g.theta_extent) th -= g.theta_extent;
    double r = g.r[i];
    const double ur = rng.uniform();
    if (g.geometry.has_radial()) {
      const double a = g.r[i] - 0.5 * g.dr;
      const double b = g.r[i] + 0.5 * g.dr;
      r = std::sqrt(a * a + ur * (b * b - a * a));
    }
    out.push_back({r, th});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

/// Asymptotic Kolmogorov critical constant c(alpha) = sqrt(-ln(alpha/2)/2).
inline double ks_critical_constant(double alpha) { return std::sqrt(-0.5 * std::log(0.5 * alpha)); }

/// CDF on [0, extent) of the cellwise-constant angular marginal, cells
/// centred on the nodes (cell 0 straddles the seam).
inline double angular_cdf(const std::vector<double>& marginal, double dtheta, double theta) {
  const std::size_t n = marginal.size();
  const double extent = dtheta * static_cast<double>(n);
  double x = theta + 0.5 * dtheta;  // cell j covers [j h, (j+1) h) in x
  auto fx = [&](double y) {
    if (y >= extent) return 1.0 + marginal[0] * (y - extent) / dtheta;
    const double pos = y / dtheta;
    const std::size_t k = std::min(static_cast<std::size_t>(pos), n - 1);
    double f = 0.0;
    for (std::size_t c = 0; c < k; ++c) f += marginal[c];
    return f + marginal[k] * (pos - static_cast<double>(k));
  };
  return std::clamp(fx(x) - 0.5 * marginal[0], 0.0, 1.0);
}

/// Two-sided one-sample KS distance for sorted samples.
template <class Cdf>
double ks_distance(std::vector<double> xs, Cdf&& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Faster KS on the angular marginal: prefix sums instead of per-sample loops.
inline double ks_angular(const std::vector<double>& thetas, const std::vector<double>& marginal, double dtheta) {
  std::vector<double> prefix(marginal.size() + 1, 0.0);
  for (std::size_t k = 0; k < marginal.size(); ++k) prefix[k + 1] = prefix[k] + marginal[k];
  const double extent = dtheta * static_cast<double>(marginal.size());
  auto cdf = [&](double theta) {
    const double x = theta + 0.5 * dtheta;
    double fx;
    if (x >= extent) {
      fx = 1.0 + marginal[0] * (x - extent) / dtheta;
    } else {
      const double pos = x / dtheta;
      const std::size_t k = std::min(static_cast<std::size_t>(pos), marginal.size() - 1);
      fx = prefix[k] + marginal[k] * (pos - static_cast<double>(k));
    }
    return std::clamp(fx - 0.5 * marginal[0], 0.0, 1.0);
  };
  return ks_distance(thetas, cdf);
}

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double critical = 0.0;
  std::vector<double> expected;  // per merged bin (counts)
  std::vector<double> observed;
};

/// Pearson chi-square over bins merged (in index order) until each has an
/// expected count of at least min_expected.
inline ChiSquareResult chi_square(const std::vector<double>& probs, const std::vector<double>& counts, double n,
                                  double alpha, double min_expected = 5.0) {
  ChiSquareResult out;
  double e = 0.0, o = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    e += n * probs[k];
    o += counts[k];
    if (e >= min_expected) {
      out.expected.push_back(e);
      out.observed.push_back(o);
      e = o = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (out.expected.empty()) {
      out.expected.push_back(e);
      out.observed.push_back(o);
    } else {
      out.expected.back() += e;
      out.observed.back() += o;
    }
  }
  for (std::size_t k = 0; k < out.expected.size(); ++k) {
    const double diff = out.observed[k] - out.expected[k];
    out.statistic += diff * diff / out.expected[k];
  }
  out.dof = static_cast<int>(out.expected.size()) - 1;
  if (out.dof >= 1) {
    boost::math::chi_squared dist(out.dof);
    out.critical = boost::math::quantile(boost::math::complement(dist, alpha));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleOptions {
  double dt = 1e-3;              // Crank-Nicolson step
  int stride = 1;                // CN steps per RK4 step / velocity snapshot
  int threads = 1;
  double velocity_scale = 1.0;   // != 1 only for negative controls
  int record_every = 0;          // RK4 steps between recorded samples; 0 = requested times only
  VelocityOptions velocity;
  SolverOptions solver;
};

struct EnsembleRun {
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<Trajectory> trajectories;
  std::size_t dropped = 0;
  std::map<std::string, std::size_t> drop_reasons;
  std::vector<CoveringWave> waves;  // psi at each requested time
  /// positions[t][k]: position of trajectory k at times[t], if still running.
  std::vector<std::vector<std::optional<CoverPoint>>> positions;
};

namespace detail {

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t k = lo; k < hi; ++k) fn(k);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Propagates psi and all trajectories in lockstep. Requested times must be
/// multiples of dt * stride.
inline EnsembleRun run_ensemble(const Hamiltonian& h, const CoveringWave& psi0, const std::vector<BaseCoords>& starts,
                                std::vector<double> times, EnsembleOptions opts = {}) {
  if (times.empty()) throw Error("ensemble: no snapshot times");
  std::sort(times.begin(), times.end());
  if (times.front() < 0.0) throw Error("ensemble: negative snapshot time");
  const double step = opts.dt * opts.stride;
  std::vector<long long> time_steps;
  for (double t : times) {
    const long long k = std::llround(t / step);
    if (std::abs(static_cast<double>(k) * step - t) > 1e-9 * std::max(1.0, t)) {
      throw Error("ensemble: snapshot time " + std::to_string(t) + " is not a multiple of the step");
    }
    time_steps.push_back(k);
  }
  const auto& g = *psi0.grid;
  const DomainGuard guard = DomainGuard::for_grid(g);
  const CrankNicolson cn(h, opts.dt, opts.solver);

  EnsembleRun run;
  run.n_samples = starts.size();
  run.times = times;
  run.trajectories.resize(starts.size());
  run.positions.assign(times.size(), std::vector<std::optional<CoverPoint>>(starts.size()));
  std::vector<CoverPoint> pos(starts.size());
  for (std::size_t k = 0; k < starts.size(); ++k) {
    validate_start(g, CoverPoint{starts[k], 0});
    pos[k] = CoverPoint{starts[k], 0};
    auto& tr = run.trajectories[k];
    tr.samples.push_back({psi0.time, pos[k]});
    if (!guard.inside(starts[k].r)) tr.status = TrajectoryStatus::LeftDomain;
  }

  CoveringWave psi = psi0;
  VelocityField prev = velocity_field(psi, opts.velocity);
  std::size_t next_time = 0;
  auto record = [&](long long step_index) {
    while (next_time < time_steps.size() && time_steps[next_time] == step_index) {
      for (std::size_t k = 0; k < pos.size(); ++k) {
        if (run.trajectories[k].status == TrajectoryStatus::Running) run.positions[next_time][k] = pos[k];
      }
      run.waves.push_back(psi);
      ++next_time;
    }
  };
  record(0);
  const long long total = time_steps.back();
  for (long long s = 0; s < total; ++s) {
    for (int k = 0; k < opts.stride; ++k) cn.advance(psi);
    VelocityField next = velocity_field(psi, opts.velocity);
    const FlowWindow window{&prev, &next, opts.velocity_scale};
    const double t = psi0.time + static_cast<double>(s) * step;
    const bool keep = opts.record_every > 0 && (s + 1) % opts.record_every == 0;
    detail::parallel_for(pos.size(), opts.threads, [&](std::size_t k) {
      auto& tr = run.trajectories[k];
      if (tr.status != TrajectoryStatus::Running) return;
      const TrajectoryStatus st = rk4_step(window, guard, t, step, pos[k]);
      if (st != TrajectoryStatus::Running) {
        tr.status = st;
        return;
      }
      if (keep) tr.samples.push_back({psi0.time + static_cast<double>(s + 1) * step, pos[k]});
    });
    prev = std::move(next);
    record(s + 1);
  }
  for (std::size_t k = 0; k < pos.size(); ++k) {
    auto& tr = run.trajectories[k];
    if (tr.status == TrajectoryStatus::Running) {
      tr.status = TrajectoryStatus::Finished;
      if (tr.samples.back().t < psi.time - 1e-12) tr.samples.push_back({psi.time, pos[k]});
    } else {
      ++run.dropped;
      ++run.drop_reasons[to_string(tr.status)];
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// Comparison

enum class StatisticKind { KolmogorovSmirnov, ChiSquare };

struct TimeComparison {
  double time = 0.0;
  double statistic = 0.0;
  double threshold = 0.0;
  int dof = 0;
  std::size_t used = 0;
  bool pass = false;
};

struct DistributionComparison {
  StatisticKind kind = StatisticKind::KolmogorovSmirnov;
  double alpha = 0.01;
  std::vector<TimeComparison> results;
  std::size_t n_samples = 0;
  std::size_t dropped = 0;
  std::map<std::string, std::size_t> drop_reasons;
  bool drop_budget_exceeded = false;
  std::vector<std::string> warnings;
  /// Per time: (empirical, target) probability per histogram bin.
  std::vector<std::vector<std::pair<double, double>>> histograms;

  bool pass() const {
    if (drop_budget_exceeded || results.empty()) return false;
    return std::all_of(results.begin(), results.end(), [](const TimeComparison& r) { return r.pass; });
  }
};

struct ComparisonOptions {
  double alpha = 0.01;
  double drop_budget = 0.01;
  int radial_bins = 8;
  int angular_bins = 16;
  int histogram_bins = 64;  // angular histogram for the KS case
};

inline DistributionComparison compare_ensemble(const EnsembleRun& run, ComparisonOptions opts = {}) {
  if (run.waves.empty()) throw Error("comparison: ensemble has no snapshots");
  const auto& g = *run.waves.front().grid;
  DistributionComparison out;
  out.alpha = opts.alpha;
  out.kind = g.geometry.has_radial() ? StatisticKind::ChiSquare : StatisticKind::KolmogorovSmirnov;
  out.n_samples = run.n_samples;
  out.dropped = run.dropped;
  out.drop_reasons = run.drop_reasons;
  if (run.n_samples > 0 && static_cast<double>(run.dropped) > opts.drop_budget * static_cast<double>(run.n_samples)) {
    out.drop_budget_exceeded = true;
    out.warnings.push_back("dropped " + std::to_string(run.dropped) + " of " + std::to_string(run.n_samples) +
                           " trajectories, above the " + std::to_string(opts.drop_budget * 100) + "% budget");
  }
  if (run.n_samples < 100) {
    out.warnings.push_back("only " + std::to_string(run.n_samples) +
                           " samples; asymptotic thresholds are unreliable");
  }
  for (std::size_t t = 0; t < run.times.size(); ++t) {
    const auto masses = cell_masses(run.waves[t]);
    std::vector<CoverPoint> pts;
    for (const auto& p : run.positions[t]) {
      if (p) pts.push_back(*p);
    }
    TimeComparison tc;
    tc.time = run.times[t];
    tc.used = pts.size();
    const double n = static_cast<double>(pts.size());
    std::vector<std::pair<double, double>> hist;
    if (out.kind == StatisticKind::KolmogorovSmirnov) {
      std::vector<double> marginal(static_cast<std::size_t>(g.n_theta), 0.0);
      for (int j = 0; j < g.n_theta; ++j) marginal[j] = masses[g.node(0, j)];
      std::vector<double> th;
      th.reserve(pts.size());
      for (const auto& p : pts) th.push_back(p.base.theta);
      tc.statistic = pts.empty() ? 1.0 : ks_angular(th, marginal, g.dtheta);
      tc.threshold = ks_critical_constant(opts.alpha) / std::sqrt(std::max(n, 1.0));
      tc.pass = !pts.empty() && tc.statistic < tc.threshold;
      const int nb = opts.histogram_bins;
      hist.assign(static_cast<std::size_t>(nb), {0.0, 0.0});
      const double width = g.theta_extent / nb;
      for (double x : th) hist[static_cast<std::size_t>(std::min(nb - 1, static_cast<int>(x / width)))].first += 1.0 / n;
      for (int b = 0; b < nb; ++b) {
        hist[b].second = angular_cdf(marginal, g.dtheta, std::min((b + 1) * width, g.theta_extent - 1e-15)) -
                         angular_cdf(marginal, g.dtheta, b * width);
      }
    } else {
      const int rows = g.interior_rows();
      const int nr = std::min(opts.radial_bins, rows);
      const int na = std::min(opts.angular_bins, g.n_theta);
      std::vector<double> probs(static_cast<std::size_t>(nr * na), 0.0);
      std::vector<double> counts(probs.size(), 0.0);
      auto bin_of = [&](std::size_t node) {
        const int i = static_cast<int>(node / static_cast<std::size_t>(g.n_theta)) - g.row_begin;
        const int j = static_cast<int>(node % static_cast<std::size_t>(g.n_theta));
        return static_cast<std::size_t>((i * nr / rows) * na + (j * na / g.n_theta));
      };
      for (int i = g.row_begin; i < g.row_end; ++i) {
        for (int j = 0; j < g.n_theta; ++j) probs[bin_of(g.node(i, j))] += masses[g.node(i, j)];
      }
      for (const auto& p : pts) counts[bin_of(cell_of(g, p.base))] += 1.0;
      const auto cs = chi_square(probs, counts, n, opts.alpha);
      tc.statistic = cs.statistic;
      tc.threshold = cs.critical;
      tc.dof = cs.dof;
      tc.pass = cs.dof >= 1 && cs.statistic < cs.critical;
      if (cs.dof < 1) out.warnings.push_back("chi-square has no degrees of freedom at t=" + std::to_string(tc.time));
      for (std::size_t b = 0; b < probs.size(); ++b) hist.emplace_back(n > 0 ? counts[b] / n : 0.0, probs[b]);
    }
    out.results.push_back(tc);
    out.histograms.push_back(std::move(hist));
  }
  return out;
}

}  // namespace bohmcover
