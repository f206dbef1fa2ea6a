#pragma once

// Subcommand drivers behind the command-line tool. Every driver appends
// named checks to a RunReport and writes its artifacts into one directory.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bohmcover/algebra_checks.hpp"
#include "bohmcover/bohm_dynamics.hpp"
#include "bohmcover/config.hpp"
#include "bohmcover/equivariance.hpp"
#include "bohmcover/hamiltonian.hpp"
#include "bohmcover/io.hpp"
#include "bohmcover/scenario.hpp"

namespace bohmcover {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunOptions {
  std::string subcommand;
  std::filesystem::path out_dir = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<double> t_final;
  std::ostream* log = nullptr;  // progress messages; null = silent
};

/// Report written incrementally: report.txt gains one line per check as it
/// is recorded; report.json is rewritten in full at the end.
class RunReport {
 public:
  RunReport(std::filesystem::path dir, std::string subcommand, Json scenario)
      : dir_(std::move(dir)), subcommand_(std::move(subcommand)), scenario_(std::move(scenario)) {
    txt_.open(dir_ / "report.txt", std::ios::binary | std::ios::trunc);
    if (!txt_) throw Error("cannot write " + (dir_ / "report.txt").string());
    txt_ << "# tool=bohmcover version=" << kToolVersion << "\n# subcommand=" << subcommand_ << "\n";
    txt_.flush();
  }

  void add(CheckResult c, const std::string& prefix = "") {
    if (!prefix.empty()) c.name = prefix + "." + c.name;
    txt_ << c.name << "=" << c.value << " " << (c.pass ? "pass" : "fail") << " max_residual=" << fmt17(c.max_residual)
         << " threshold=" << fmt17(c.threshold) << "\n";
    txt_.flush();
    checks_.push_back(std::move(c));
  }

  void warn(const std::string& w) {
    txt_ << "# warning: " << w << "\n";
    txt_.flush();
    warnings_.push_back(w);
  }

  void value(const std::string& key, Json v) { values_[key] = std::move(v); }
  void timing(const std::string& phase, double seconds) { timings_[phase] = seconds; }
  void artifact(const std::string& name) { artifacts_.push_back(name); }

  const std::vector<CheckResult>& checks() const { return checks_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool pass() const {
    for (const auto& c : checks_) {
      if (!c.pass) return false;
    }
    return !checks_.empty();
  }

  void finish() {
    Json j;
    j["tool"] = "bohmcover";
    j["version"] = kToolVersion;
    j["versions"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    j["subcommand"] = subcommand_;
    j["scenario"] = scenario_;
    j["timings"] = timings_;
    j["values"] = values_;
    Json checks = Json::array();
    Json failures = Json::array();
    for (const auto& c : checks_) {
      checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold},
                        {"max_residual", c.max_residual}, {"pass", c.pass}});
      if (!c.pass) failures.push_back(c.name);
    }
    j["checks"] = checks;
    j["warnings"] = warnings_;
    j["artifacts"] = artifacts_;
    j["failures"] = failures;
    j["pass"] = pass();
    txt_ << "overall=" << (pass() ? "pass" : "fail") << "\n";
    txt_.flush();
    std::ofstream out(dir_ / "report.json", std::ios::binary | std::ios::trunc);
    out << j.dump(2) << "\n";
  }

 private:
  std::filesystem::path dir_;
  std::string subcommand_;
  Json scenario_;
  std::ofstream txt_;
  std::vector<CheckResult> checks_;
  std::vector<std::string> warnings_;
  Json timings_ = Json::object();
  Json values_ = Json::object();
  Json artifacts_ = Json::array();
};

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::string factor_note(const FactorDescription& f) {
  if (f.kind == "character") return "character beta=" + fmt17(f.beta);
  if (f.kind == "su2") {
    return "su2 alpha=" + fmt17(f.alpha) + " axis=" + fmt17(f.axis.x()) + "," + fmt17(f.axis.y()) + "," +
           fmt17(f.axis.z());
  }
  return "rep dim=" + std::to_string(f.matrix.rows());
}

inline void say(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << std::endl;
}

/// Closed-form ring levels (k + beta/2pi)^2 / (2 m R^2), ascending.
inline std::vector<double> ring_levels(const Geometry& g, double beta, int count) {
  std::vector<double> e;
  const int span = count + 2;
  for (int k = -span; k <= span; ++k) {
    const double x = k + beta / kTwoPi;
    e.push_back(x * x / (2.0 * g.mass * g.radius * g.radius));
  }
  std::sort(e.begin(), e.end());
  e.resize(static_cast<std::size_t>(count));
  return e;
}

inline std::string step_name(const std::string& prefix, std::size_t k) { return prefix + std::to_string(k); }

inline void run_spectrum(const Config& cfg, const RunOptions& o, RunReport& rep) {
  const Scenario& s = cfg.scenario;
  Stopwatch sw;
  const Model m = build_model(s);
  rep.timing("assemble", sw.lap());
  const double herm = m.hamiltonian.hermiticity_defect();
  rep.add({"hermiticity", fmt17(herm), 1e-12, herm, herm <= 1e-12});
  const int k = std::min<int>(s.numerics.spectrum_count, static_cast<int>(m.hamiltonian.size()));
  say(o, "computing " + std::to_string(k) + " eigenpairs");
  const auto pairs = spectrum(m.hamiltonian, k);
  rep.timing("spectrum", sw.lap());

  const bool ring_closed_form = s.geometry.kind == GeometryKind::Ring && s.factor.kind == "character" &&
                                std::holds_alternative<NoPotential>(s.potential);
  std::vector<double> exact;
  if (ring_closed_form) exact = ring_levels(s.geometry, s.factor.beta, k);

  std::ofstream csv(o.out_dir / "spectrum.csv", std::ios::binary);
  csv << "index,energy" << (ring_closed_form ? ",exact" : "") << "\n";
  for (int n = 0; n < k; ++n) {
    csv << n << "," << fmt17(pairs[n].energy);
    if (ring_closed_form) csv << "," << fmt17(exact[n]);
    csv << "\n";
  }
  rep.artifact("spectrum.csv");
  write_wave_csv((o.out_dir / "eigenstate_0.csv").string(), pairs.front().wave, factor_note(s.factor));
  rep.artifact("eigenstate_0.csv");

  rep.value("lowest_energy", pairs.front().energy);
  Json energies = Json::array();
  for (const auto& p : pairs) energies.push_back(p.energy);
  rep.value("energies", energies);
  rep.add({"lowest_energy", fmt17(pairs.front().energy), 0.0, 0.0, std::isfinite(pairs.front().energy)});
  if (ring_closed_form) {
    // Relative error, or absolute where the exact level is zero.
    double worst = 0.0;
    for (int n = 0; n < k; ++n) {
      const double d = std::abs(pairs[n].energy - exact[n]);
      worst = std::max(worst, exact[n] > 1e-14 ? d / exact[n] : d);
    }
    rep.add({"closed_form_relative_error", fmt17(worst), 1e-3, worst, worst < 1e-3});
  }
  if (s.geometry.has_radial()) {
    const double lo = pairs.front().energy - std::min(0.0, m.hamiltonian.potential_floor);
    rep.add({"dirichlet_positive", fmt17(pairs.front().energy), 0.0, 0.0, lo > 0.0});
  }
}

inline void run_evolve(const Config& cfg, const RunOptions& o, RunReport& rep) {
  const Scenario& s = cfg.scenario;
  Stopwatch sw;
  const Model m = build_model(s);
  const double herm = m.hamiltonian.hermiticity_defect();
  rep.add({"hermiticity", fmt17(herm), 1e-12, herm, herm <= 1e-12});
  const CoveringWave psi0 = initial_wave(s, m);
  rep.timing("setup", sw.lap());

  const double t_final = o.t_final.value_or(s.numerics.t_final);
  std::vector<double> times = s.numerics.times.empty() ? std::vector<double>{0.0, 0.5 * t_final, t_final}
                                                       : s.numerics.times;
  std::sort(times.begin(), times.end());
  std::vector<long long> marks;
  for (double t : times) marks.push_back(std::llround(t / s.numerics.dt));
  const CrankNicolson cn(m.hamiltonian, s.numerics.dt, {s.numerics.solver_tolerance});
  CoveringWave psi = psi0;
  double drift = 0.0;
  std::size_t next = 0;
  const std::string note = factor_note(s.factor);
  auto snapshot = [&](long long step) {
    while (next < marks.size() && marks[next] == step) {
      const std::string name = step_name("wave_", next) + ".csv";
      write_wave_csv((o.out_dir / name).string(), psi, note);
      rep.artifact(name);
      ++next;
    }
  };
  snapshot(0);
  const long long total = marks.back();
  say(o, "evolving " + std::to_string(total) + " Crank-Nicolson steps");
  for (long long k = 0; k < total; ++k) {
    cn.advance(psi);
    drift = std::max(drift, std::abs(psi.domain_norm_squared() - 1.0));
    snapshot(k + 1);
  }
  rep.timing("evolve", sw.lap());
  write_checkpoint((o.out_dir / "wave_final.cwave").string(), psi);
  rep.artifact("wave_final.cwave");
  rep.add({"norm_drift", fmt17(drift), 1e-7, drift, drift < 1e-7});
  rep.add({"finite", psi.finite() ? "true" : "false", 0.0, 0.0, psi.finite()});

  say(o, "running the doubled-domain periodicity oracle");
  const auto pc = check_periodicity_preserved(psi, psi0, m.potential, s.numerics.dt, {s.numerics.solver_tolerance});
  const double res = std::max(pc.residual, pc.seam_residual);
  rep.add({"periodicity_preserved", fmt17(res), 1e-8, res, res < 1e-8});
  rep.timing("periodicity_oracle", sw.lap());
}

inline EnsembleOptions ensemble_options(const Scenario& s, const RunOptions& o) {
  EnsembleOptions e;
  e.dt = s.numerics.dt;
  e.stride = s.numerics.stride;
  e.threads = o.threads;
  e.velocity.half_width = s.numerics.velocity_half_width;
  e.solver.tolerance = s.numerics.solver_tolerance;
  return e;
}

inline void run_trajectories(const Config& cfg, const RunOptions& o, RunReport& rep) {
  const Scenario& s = cfg.scenario;
  Stopwatch sw;
  const Model m = build_model(s);
  const CoveringWave psi0 = initial_wave(s, m);
  const std::size_t n = o.n.value_or(s.numerics.n_samples);
  const std::uint64_t seed = o.seed.value_or(s.seed);
  const double t_final = o.t_final.value_or(s.numerics.t_final);
  const auto starts = sample_initial(psi0, n, seed);
  rep.timing("setup", sw.lap());
  EnsembleOptions e = ensemble_options(s, o);
  e.record_every = s.numerics.record_every;
  say(o, "integrating " + std::to_string(n) + " trajectories to t=" + fmt17(t_final));
  const EnsembleRun run = run_ensemble(m.hamiltonian, psi0, starts, {0.0, t_final}, e);
  rep.timing("integrate", sw.lap());

  write_trajectories_csv((o.out_dir / "trajectories.csv").string(), run.trajectories);
  rep.artifact("trajectories.csv");
  std::ofstream fin(o.out_dir / "final_positions.csv", std::ios::binary);
  fin << "traj_id,t,coord1,coord2,winding\n";
  std::size_t rows = 0;
  for (std::size_t k = 0; k < run.trajectories.size(); ++k) {
    const auto& tr = run.trajectories[k];
    if (tr.status != TrajectoryStatus::Finished) continue;
    const auto& last = tr.samples.back();
    fin << k << "," << fmt17(last.t) << "," << fmt17(last.q.base.r) << "," << fmt17(last.q.base.theta) << ","
        << last.q.winding << "\n";
    ++rows;
  }
  rep.artifact("final_positions.csv");
  rep.value("n_samples", n);
  rep.value("seed", seed);
  rep.value("dropped", run.dropped);
  rep.value("drop_reasons", run.drop_reasons);
  rep.add({"drop_accounting", std::to_string(run.dropped), static_cast<double>(n - rows), 0.0, run.dropped == n - rows});
  const double budget = 0.01 * static_cast<double>(n);
  rep.add({"drop_budget", std::to_string(run.dropped), budget, static_cast<double>(run.dropped),
           static_cast<double>(run.dropped) <= budget});
}

inline void run_equivariance(const Config& cfg, const RunOptions& o, RunReport& rep) {
  const Scenario& s = cfg.scenario;
  Stopwatch sw;
  const Model m = build_model(s);
  const CoveringWave psi0 = initial_wave(s, m);
  const std::size_t n = o.n.value_or(s.numerics.n_samples);
  const std::uint64_t seed = o.seed.value_or(s.seed);
  std::vector<double> times = s.snapshot_times();
  if (o.t_final && s.numerics.times.empty()) times = {0.0, 0.5 * *o.t_final, *o.t_final};
  const auto starts = sample_initial(psi0, n, seed);
  rep.timing("setup", sw.lap());
  say(o, "propagating an ensemble of " + std::to_string(n));
  const EnsembleRun run = run_ensemble(m.hamiltonian, psi0, starts, times, ensemble_options(s, o));
  rep.timing("integrate", sw.lap());
  ComparisonOptions copts;
  copts.radial_bins = s.numerics.radial_bins;
  copts.angular_bins = s.numerics.angular_bins;
  const DistributionComparison cmp = compare_ensemble(run, copts);
  rep.timing("statistics", sw.lap());

  for (const auto& w : cmp.warnings) rep.warn(w);
  const std::string stat = cmp.kind == StatisticKind::KolmogorovSmirnov ? "ks" : "chi2";
  Json per_time = Json::array();
  for (const auto& r : cmp.results) {
    rep.add({"equivariance_" + stat + "_t=" + fmt17(r.time), fmt17(r.statistic), r.threshold, r.statistic, r.pass});
    per_time.push_back({{"time", r.time}, {"statistic", r.statistic}, {"threshold", r.threshold},
                        {"dof", r.dof}, {"used", r.used}, {"pass", r.pass}});
  }
  const double budget = 0.01 * static_cast<double>(n);
  rep.add({"drop_budget", std::to_string(cmp.dropped), budget, static_cast<double>(cmp.dropped),
           !cmp.drop_budget_exceeded});

  Json summary;
  summary["statistic"] = stat;
  summary["alpha"] = cmp.alpha;
  summary["n_samples"] = n;
  summary["seed"] = seed;
  summary["dropped"] = cmp.dropped;
  summary["drop_reasons"] = cmp.drop_reasons;
  summary["times"] = per_time;
  summary["warnings"] = cmp.warnings;
  summary["pass"] = cmp.pass();
  std::ofstream js(o.out_dir / "equivariance.json", std::ios::binary);
  js << summary.dump(2) << "\n";
  rep.artifact("equivariance.json");

  std::ofstream h(o.out_dir / "histograms.csv", std::ios::binary);
  h << "time,bin,empirical,target\n";
  for (std::size_t t = 0; t < cmp.histograms.size(); ++t) {
    for (std::size_t b = 0; b < cmp.histograms[t].size(); ++b) {
      h << fmt17(cmp.results[t].time) << "," << b << "," << fmt17(cmp.histograms[t][b].first) << ","
        << fmt17(cmp.histograms[t][b].second) << "\n";
    }
  }
  rep.artifact("histograms.csv");
}

inline void run_algebra(const Config& cfg, const RunOptions& o, RunReport& rep) {
  if (cfg.algebra.empty()) throw ConfigError("algebra-check: the config has no algebra block");
  const std::uint64_t seed = o.seed.value_or(cfg.scenario.seed);
  Stopwatch sw;
  for (const auto& c : cfg.algebra) {
    std::vector<CheckResult> results;
    if (c.kind == "characters") {
      results = check_characters(c.group, seed);
    } else if (c.kind == "fermion_twisted_law") {
      results = check_fermion_twisted_law(c.particles, c.fiber_dim, c.samples, seed);
    } else if (c.kind == "section_composition") {
      results = check_section_composition(c.particles, c.fiber_dim, c.samples, seed);
    } else if (c.kind == "aharonov_casher") {
      results = check_aharonov_casher(c.samples, seed);
    } else {
      const FieldControl ctl = c.control == "single"     ? FieldControl::Single
                               : c.control == "parallel" ? FieldControl::Parallel
                                                         : FieldControl::None;
      results = check_commutant(c.particles, c.spin_dim, c.samples, ctl, seed);
    }
    for (auto& r : results) rep.add(std::move(r), c.label);
  }
  rep.timing("checks", sw.lap());
}

}  // namespace detail

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"spectrum", "evolve", "trajectories", "equivariance",
                                                 "algebra-check"};
  return names;
}

/// Runs one subcommand. Returns 0 iff every recorded check passed.
inline int run(const Config& cfg, const RunOptions& o) {
  const std::string& sub = o.subcommand;
  if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end()) {
    throw ConfigError("unknown subcommand '" + sub + "'");
  }
  if (sub != "algebra-check" && !cfg.has_dynamics) {
    throw ConfigError(sub + ": the config has no geometry block");
  }
  std::filesystem::create_directories(o.out_dir);
  RunReport rep(o.out_dir, sub, cfg.echo);
  try {
    if (sub == "spectrum") detail::run_spectrum(cfg, o, rep);
    if (sub == "evolve") detail::run_evolve(cfg, o, rep);
    if (sub == "trajectories") detail::run_trajectories(cfg, o, rep);
    if (sub == "equivariance") detail::run_equivariance(cfg, o, rep);
    if (sub == "algebra-check") detail::run_algebra(cfg, o, rep);
  } catch (const Error& e) {
    rep.add({"run_completed", "false", 0.0, 0.0, false});
    rep.warn(e.what());
    rep.finish();
    throw;
  }
  rep.finish();
  return rep.pass() ? 0 : 1;
}

}  // namespace bohmcover
