#pragma once

// Scenario files: JSON with a strict key schema. Unknown keys, missing
// physics-bearing keys and inadmissible (potential, factor) pairs are
// rejected before any computation.

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bohmcover/algebra_checks.hpp"
#include "bohmcover/core.hpp"
#include "bohmcover/geometry.hpp"
#include "bohmcover/hamiltonian.hpp"
#include "bohmcover/scenario.hpp"

namespace bohmcover {

using Json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct AlgebraCheckSpec {
  std::string kind;   // characters | fermion_twisted_law | section_composition | aharonov_casher | commutant
  std::string label;  // optional prefix for result names
  std::string group;
  std::string control = "none";
  int particles = 2;
  int fiber_dim = 1;
  int spin_dim = 2;
  int samples = 0;
};

struct Config {
  Scenario scenario;
  bool has_dynamics = false;
  std::vector<AlgebraCheckSpec> algebra;
  Json echo;
};

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

inline void allow_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(path + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw ConfigError("unknown key '" + join_path(path, k) + "'");
  }
}

inline const Json& require(const Json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError("missing required key '" + join_path(path, key) + "'");
  return obj.at(key);
}

inline double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}

inline long long as_integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return v.get<long long>();
}

inline std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a string");
  return v.get<std::string>();
}

inline std::vector<double> as_numbers(const Json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(as_number(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

inline Complex as_complex(const Json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  const auto xs = as_numbers(v, path);
  if (xs.size() != 2) throw ConfigError(path + ": expected [re, im]");
  return {xs[0], xs[1]};
}

inline Eigen::Vector3d as_vector3(const Json& v, const std::string& path) {
  const auto xs = as_numbers(v, path);
  if (xs.size() != 3) throw ConfigError(path + ": expected three components");
  return {xs[0], xs[1], xs[2]};
}

template <class T>
void optional_number(const Json& obj, const std::string& path, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  const std::string p = join_path(path, key);
  if constexpr (std::is_integral_v<T>) {
    const long long v = as_integer(obj.at(key), p);
    if (v < 0) throw ConfigError(p + ": must be non-negative");
    dst = static_cast<T>(v);
  } else {
    dst = static_cast<T>(as_number(obj.at(key), p));
  }
}

inline std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t k = 0; k < text.size() && k + 1 < byte; ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline Geometry parse_geometry(const Json& j) {
  const std::string path = "geometry";
  const std::string kind = as_string(require(j, path, "kind"), "geometry.kind");
  Geometry g;
  const Json& grid = require(j, path, "grid");
  const auto shape = as_numbers(grid, "geometry.grid");
  for (double s : shape) {
    if (s != std::floor(s)) throw ConfigError("geometry.grid: entries must be integers");
  }
  if (kind == "ring") {
    allow_keys(j, path, {"kind", "radius", "mass", "grid"});
    if (shape.size() == 2 && shape[0] != 1) throw ConfigError("geometry.grid: ring grids are [1, n_theta] or [n_theta]");
    if (shape.empty() || shape.size() > 2) throw ConfigError("geometry.grid: expected [n_theta] or [1, n_theta]");
    g.kind = GeometryKind::Ring;
    g.n_theta = static_cast<int>(shape.back());
    if (j.contains("radius")) g.radius = as_number(j.at("radius"), "geometry.radius");
  } else {
    allow_keys(j, path, {"kind", "r_in", "r_out", "mass", "grid"});
    if (kind == "annulus") {
      g.kind = GeometryKind::Annulus;
    } else if (kind == "spin_annulus") {
      g.kind = GeometryKind::SpinAnnulus;
    } else if (kind == "two_anyon") {
      g.kind = GeometryKind::TwoAnyonRelative;
      g.mass = 0.5;
    } else {
      throw ConfigError("geometry.kind: unknown kind '" + kind + "' (ring, annulus, spin_annulus, two_anyon)");
    }
    if (shape.size() != 2) throw ConfigError("geometry.grid: expected [n_r, n_theta]");
    g.n_r = static_cast<int>(shape[0]);
    g.n_theta = static_cast<int>(shape[1]);
    g.r_in = as_number(require(j, path, "r_in"), "geometry.r_in");
    g.r_out = as_number(require(j, path, "r_out"), "geometry.r_out");
  }
  if (j.contains("mass")) g.mass = as_number(j.at("mass"), "geometry.mass");
  try {
    g.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return g;
}

inline FactorDescription parse_factor(const Json& j, int fiber_dim) {
  const std::string path = "factor";
  if (!j.is_object()) throw ConfigError("factor: expected an object");
  FactorDescription f;
  f.kind = j.contains("kind") ? as_string(j.at("kind"), "factor.kind") : "character";
  if (f.kind == "character") {
    allow_keys(j, path, {"kind", "beta"});
    f.beta = as_number(require(j, path, "beta"), "factor.beta");
  } else if (f.kind == "su2") {
    allow_keys(j, path, {"kind", "alpha", "axis"});
    f.alpha = as_number(require(j, path, "alpha"), "factor.alpha");
    f.axis = as_vector3(require(j, path, "axis"), "factor.axis");
    if (std::abs(f.axis.norm() - 1.0) > 1e-12) throw ConfigError("factor.axis: not a unit vector");
  } else if (f.kind == "rep") {
    allow_keys(j, path, {"kind", "matrices"});
    const Json& ms = require(j, path, "matrices");
    if (!ms.is_array() || ms.size() != 1) {
      throw ConfigError("factor.matrices: the deck group is Z, so exactly one matrix is required");
    }
    const Json& m = ms[0];
    if (!m.is_array()) throw ConfigError("factor.matrices[0]: expected row-major [re, im] pairs");
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(m.size()))));
    if (d * d != static_cast<Eigen::Index>(m.size()) || d != fiber_dim) {
      throw ConfigError("factor.matrices[0]: expected " + std::to_string(fiber_dim * fiber_dim) + " entries");
    }
    f.matrix.resize(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        f.matrix(r, c) = as_complex(m[static_cast<std::size_t>(r * d + c)],
                                    "factor.matrices[0][" + std::to_string(r * d + c) + "]");
      }
    }
    if (unitarity_defect(f.matrix) > 1e-12) throw ConfigError("factor.matrices[0]: matrix is not unitary");
  } else {
    throw ConfigError("factor.kind: unknown kind '" + f.kind + "' (character, su2, rep)");
  }
  if (f.kind == "su2" && fiber_dim != 2) {
    throw ConfigError("factor.kind: su2 needs the spin_annulus geometry");
  }
  return f;
}

inline PotentialSpec parse_potential(const Json& j) {
  const std::string path = "potential";
  if (!j.is_object()) throw ConfigError("potential: expected an object");
  const std::string kind = as_string(require(j, path, "kind"), "potential.kind");
  if (kind == "none") {
    allow_keys(j, path, {"kind"});
    return NoPotential{};
  }
  if (kind == "radial") {
    allow_keys(j, path, {"kind", "coefficients"});
    return RadialPotential{as_numbers(require(j, path, "coefficients"), "potential.coefficients")};
  }
  if (kind == "cosine") {
    allow_keys(j, path, {"kind", "amplitude", "mode"});
    CosinePotential c;
    c.amplitude = as_number(require(j, path, "amplitude"), "potential.amplitude");
    c.mode = static_cast<int>(as_integer(require(j, path, "mode"), "potential.mode"));
    return c;
  }
  if (kind == "zeeman") {
    allow_keys(j, path, {"kind", "mu", "field"});
    ZeemanPotential z;
    if (j.contains("mu")) z.mu = as_number(j.at("mu"), "potential.mu");
    z.field = as_vector3(require(j, path, "field"), "potential.field");
    return z;
  }
  throw ConfigError("potential.kind: unknown kind '" + kind + "' (none, radial, cosine, zeeman)");
}

inline InitialSpec parse_initial(const Json& j, const Geometry& g) {
  const std::string path = "initial";
  if (!j.is_object()) throw ConfigError("initial: expected an object");
  const std::string kind = as_string(require(j, path, "kind"), "initial.kind");
  if (kind == "eigenstate") {
    allow_keys(j, path, {"kind", "index"});
    EigenstateInit e;
    if (j.contains("index")) e.index = static_cast<int>(as_integer(j.at("index"), "initial.index"));
    if (e.index < 0) throw ConfigError("initial.index: must be non-negative");
    return e;
  }
  if (kind != "packet") throw ConfigError("initial.kind: unknown kind '" + kind + "' (eigenstate, packet)");
  allow_keys(j, path, {"kind", "center", "width", "momentum", "spinor"});
  PacketInit p;
  auto pair = [&](const char* key, double& a, double& b) {
    const auto xs = as_numbers(require(j, path, key), join_path(path, key));
    if (xs.size() == 1 && !g.has_radial()) {
      a = 0.0;
      b = xs[0];
    } else if (xs.size() == 2) {
      a = xs[0];
      b = xs[1];
    } else {
      throw ConfigError(join_path(path, key) + ": expected [r, theta]" + (g.has_radial() ? "" : " or [theta]"));
    }
  };
  pair("center", p.center.r, p.center.theta);
  pair("width", p.width_r, p.width_theta);
  if (j.contains("momentum")) pair("momentum", p.momentum_r, p.momentum_theta);
  if (!g.has_radial()) p.center.r = g.radius;
  if (j.contains("spinor")) {
    const Json& s = j.at("spinor");
    if (!s.is_array()) throw ConfigError("initial.spinor: expected an array of [re, im]");
    for (std::size_t k = 0; k < s.size(); ++k) {
      p.spinor.push_back(as_complex(s[k], "initial.spinor[" + std::to_string(k) + "]"));
    }
  }
  return p;
}

inline Numerics parse_numerics(const Json& j) {
  const std::string path = "numerics";
  allow_keys(j, path,
             {"dt", "t_final", "solver_tolerance", "stride", "spectrum_count", "velocity_half_width", "record_every",
              "n_samples", "times", "radial_bins", "angular_bins"});
  Numerics n;
  optional_number(j, path, "dt", n.dt);
  optional_number(j, path, "t_final", n.t_final);
  optional_number(j, path, "solver_tolerance", n.solver_tolerance);
  optional_number(j, path, "stride", n.stride);
  optional_number(j, path, "spectrum_count", n.spectrum_count);
  optional_number(j, path, "velocity_half_width", n.velocity_half_width);
  optional_number(j, path, "record_every", n.record_every);
  optional_number(j, path, "n_samples", n.n_samples);
  optional_number(j, path, "radial_bins", n.radial_bins);
  optional_number(j, path, "angular_bins", n.angular_bins);
  if (j.contains("times")) n.times = as_numbers(j.at("times"), "numerics.times");
  if (!(n.dt > 0.0)) throw ConfigError("numerics.dt: must be positive");
  if (!(n.t_final >= 0.0)) throw ConfigError("numerics.t_final: must be non-negative");
  if (!(n.solver_tolerance > 0.0)) throw ConfigError("numerics.solver_tolerance: must be positive");
  if (n.stride < 1) throw ConfigError("numerics.stride: must be >= 1");
  if (n.spectrum_count < 1) throw ConfigError("numerics.spectrum_count: must be >= 1");
  if (n.velocity_half_width < 1) throw ConfigError("numerics.velocity_half_width: must be >= 1");
  if (n.record_every < 1) throw ConfigError("numerics.record_every: must be >= 1");
  for (double t : n.times) {
    if (!(t >= 0.0)) throw ConfigError("numerics.times: entries must be non-negative");
  }
  return n;
}

inline AlgebraCheckSpec parse_check(const Json& j, const std::string& path) {
  AlgebraCheckSpec c;
  c.kind = as_string(require(j, path, "kind"), path + ".kind");
  auto int_key = [&](const char* key, int& dst, int lo) {
    if (!j.contains(key)) return;
    const long long v = as_integer(j.at(key), join_path(path, key));
    if (v < lo) throw ConfigError(join_path(path, key) + ": must be >= " + std::to_string(lo));
    dst = static_cast<int>(v);
  };
  if (j.contains("label")) c.label = as_string(j.at("label"), path + ".label");
  if (c.kind == "characters") {
    allow_keys(j, path, {"kind", "label", "group"});
    c.group = as_string(require(j, path, "group"), path + ".group");
    if (c.group.size() < 2 || std::string("SBF").find(c.group[0]) == std::string::npos ||
        c.group.find_first_not_of("0123456789", 1) != std::string::npos) {
      throw ConfigError(path + ".group: expected S<n>, B<n> or F<n>");
    }
    if (c.group[0] != 'F' && std::stoi(c.group.substr(1)) < 2) throw ConfigError(path + ".group: need n >= 2");
  } else if (c.kind == "fermion_twisted_law" || c.kind == "section_composition") {
    allow_keys(j, path, {"kind", "label", "particles", "fiber_dim", "pairs"});
    c.samples = 1000;
    int_key("particles", c.particles, 2);
    int_key("fiber_dim", c.fiber_dim, 1);
    int_key("pairs", c.samples, 1);
    if (c.particles > 6 || c.fiber_dim > 4) throw ConfigError(path + ": tensor fiber too large");
  } else if (c.kind == "aharonov_casher") {
    allow_keys(j, path, {"kind", "label", "samples"});
    c.samples = 100;
    int_key("samples", c.samples, 1);
  } else if (c.kind == "commutant") {
    allow_keys(j, path, {"kind", "label", "particles", "spin_dim", "samples", "control"});
    c.samples = 32;
    int_key("particles", c.particles, 1);
    int_key("spin_dim", c.spin_dim, 2);
    int_key("samples", c.samples, 1);
    if (j.contains("control")) c.control = as_string(j.at("control"), path + ".control");
    if (c.control != "none" && c.control != "single" && c.control != "parallel") {
      throw ConfigError(path + ".control: expected none, single or parallel");
    }
  } else {
    throw ConfigError(path + ".kind: unknown check '" + c.kind +
                      "' (characters, fermion_twisted_law, section_composition, aharonov_casher, commutant)");
  }
  return c;
}

/// Throws AdmissibilityError if the potential does not commute with the factor.
inline void check_admissible(const Scenario& s) {
  const GridSpec g = build_grid(s.geometry);
  const PotentialField v = build_potential(g, s.potential);
  const double comm = max_commutator(v, s.twist());
  if (comm > 1e-12) {
    throw AdmissibilityError("potential does not commute with the topological factor; inadmissible scenario", comm);
  }
}

}  // namespace detail

/// Parses a scenario document. `origin` names the source in messages.
inline Config parse_config(const std::string& text, const std::string& origin = "<config>") {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte);
    std::string msg = e.what();
    if (const auto p = msg.find("]: "); p != std::string::npos) msg = msg.substr(p + 3);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " + msg);
  }
  if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
  try {
    detail::allow_keys(j, "", {"name", "seed", "geometry", "factor", "potential", "initial", "numerics", "algebra"});
    Config c;
    c.echo = j;
    Scenario& s = c.scenario;
    if (j.contains("name")) s.name = detail::as_string(j.at("name"), "name");
    detail::optional_number(j, "", "seed", s.seed);
    const bool has_geometry = j.contains("geometry");
    if (has_geometry) {
      c.has_dynamics = true;
      s.geometry = detail::parse_geometry(j.at("geometry"));
      s.factor = detail::parse_factor(detail::require(j, "", "factor"), s.geometry.fiber_dim());
      s.topological_factor = make_factor(s.factor, s.geometry.fiber_dim());
      s.potential = j.contains("potential") ? detail::parse_potential(j.at("potential")) : PotentialSpec{};
      s.initial = j.contains("initial") ? detail::parse_initial(j.at("initial"), s.geometry) : InitialSpec{};
      if (std::holds_alternative<ZeemanPotential>(s.potential) && s.geometry.fiber_dim() != 2) {
        throw ConfigError("potential.kind: zeeman needs the spin_annulus geometry");
      }
    } else {
      for (const char* k : {"factor", "potential", "initial"}) {
        if (j.contains(k)) throw ConfigError(std::string(k) + ": only valid together with a geometry block");
      }
    }
    if (j.contains("numerics")) s.numerics = detail::parse_numerics(j.at("numerics"));
    if (j.contains("algebra")) {
      const Json& a = j.at("algebra");
      detail::allow_keys(a, "algebra", {"checks"});
      const Json& checks = detail::require(a, "algebra", "checks");
      if (!checks.is_array() || checks.empty()) throw ConfigError("algebra.checks: expected a non-empty array");
      for (std::size_t k = 0; k < checks.size(); ++k) {
        c.algebra.push_back(detail::parse_check(checks[k], "algebra.checks[" + std::to_string(k) + "]"));
      }
    }
    if (!has_geometry && c.algebra.empty()) throw ConfigError("config needs a geometry block or an algebra block");
    if (c.has_dynamics) detail::check_admissible(s);
    return c;
  } catch (const AdmissibilityError& e) {
    throw AdmissibilityError(origin + ": potential does not commute with the topological factor; inadmissible scenario",
                             e.commutator_norm());
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace bohmcover
