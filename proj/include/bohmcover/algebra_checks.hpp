#pragma once

// Named, self-contained algebra checks. Each returns one or more results with
// a value, a threshold and the largest residual seen.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bohmcover/core.hpp"
#include "bohmcover/random.hpp"
#include "bohmcover/topo_algebra.hpp"
#include "bohmcover/words.hpp"

namespace bohmcover {

struct CheckResult {
  std::string name;
  std::string value;
  double threshold = 0.0;
  double max_residual = 0.0;
  bool pass = false;
};

// ---------------------------------------------------------------------------
// Random draws shared by the checks

inline Eigen::Vector3d random_unit_vector(RandomStream& rng) {
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  } while (v.norm() < 1e-6);
  return v.normalized();
}

/// Haar-ish unitary from the QR factor of a complex Gaussian matrix.
inline Matrix random_unitary(RandomStream& rng, int dim) {
  Matrix z(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) z(i, j) = Complex(rng.normal(), rng.normal());
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < dim; ++k) {
    const Complex d = r(k, k);
    if (std::abs(d) > 0.0) q.col(k) *= d / std::abs(d);
  }
  return q;
}

inline Permutation random_permutation(RandomStream& rng, int n) {
  Permutation p = identity_permutation(n);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

inline SemidirectElement random_semidirect(RandomStream& rng, int n, int max_winding = 3) {
  SemidirectElement s;
  s.perm = random_permutation(rng, n);
  for (int i = 0; i < n; ++i) {
    s.tuple.push_back(static_cast<long long>(rng.next() % static_cast<std::uint64_t>(2 * max_winding + 1)) -
                      max_winding);
  }
  return s;
}

/// N distinct ring configurations with random windings.
inline std::vector<CoverPoint> random_configuration(RandomStream& rng, int n) {
  std::vector<CoverPoint> q;
  for (int i = 0; i < n; ++i) {
    q.push_back({{1.0, (static_cast<double>(i) + 0.1 + 0.8 * rng.uniform()) * kTwoPi / n},
                 static_cast<long long>(rng.next() % 11) - 5});
  }
  return q;
}

// ---------------------------------------------------------------------------
// Characters

/// Characters with values in {+1, -1} found by trying every assignment.
inline long long count_sign_characters(const GroupPresentation& p) {
  const int g = p.generator_count();
  long long count = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << g); ++mask) {
    bool ok = true;
    for (const auto& r : p.relators) {
      long long neg = 0;
      for (int l : r.letters()) neg += (mask >> (std::abs(l) - 1)) & 1U;
      if (neg % 2 != 0) {
        ok = false;
        break;
      }
    }
    if (ok) ++count;
  }
  return count;
}

inline double character_relation_defect(const Character& c, const GroupPresentation& p) {
  double d = 0.0;
  for (const auto& r : p.relators) d = std::max(d, std::abs(c(r) - 1.0));
  return d;
}

inline GroupPresentation presentation_by_name(const std::string& name) {
  if (name.size() < 2) throw Error("unknown group '" + name + "'");
  const int n = std::stoi(name.substr(1));
  switch (name[0]) {
    case 'S': return GroupPresentation::symmetric(n);
    case 'B': return GroupPresentation::braid(n);
    case 'F': return GroupPresentation::free(n);
    default: throw Error("unknown group '" + name + "'");
  }
}

/// S_n: exactly two characters (trivial and sign) and brute force agrees.
/// B_n: one free angle, all generators equal, braid relations hold.
inline std::vector<CheckResult> check_characters(const std::string& group, std::uint64_t seed, int samples = 64) {
  const GroupPresentation p = presentation_by_name(group);
  const CharacterVariety v = classify_characters(p);
  std::vector<CheckResult> out;
  if (group[0] == 'S') {
    const long long n = v.finite_count();
    double worst = 0.0;
    bool signs_ok = n == 2;
    if (n > 0) {
      for (const auto& c : v.enumerate_finite()) {
        worst = std::max(worst, character_relation_defect(c, p));
        for (int k = 0; k < c.generator_count(); ++k) {
          signs_ok = signs_ok && std::abs(std::abs(c.phase(k).real()) - 1.0) < 1e-12;
        }
      }
    }
    out.push_back({"character_count", std::to_string(n), 2.0, worst, n == 2 && worst < 1e-12 && signs_ok});
    const long long brute = count_sign_characters(p);
    out.push_back({"brute_force_count", std::to_string(brute), 2.0, 0.0, brute == n});
    return out;
  }
  RandomStream rng(seed, 17);
  double relation = 0.0, equal = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> angles(static_cast<std::size_t>(v.free_dimension()));
    for (double& a : angles) a = (2.0 * rng.uniform() - 1.0) * kPi;
    std::vector<long long> tors(v.torsion_columns.size(), 0);
    const Character c = v.at(angles, tors);
    relation = std::max(relation, character_relation_defect(c, p));
    for (int k = 1; k < c.generator_count(); ++k) equal = std::max(equal, std::abs(c.phase(k) - c.phase(0)));
  }
  const bool braid = group[0] == 'B';
  const int expected_free = braid ? 1 : p.generator_count();
  out.push_back({"free_phase_count", std::to_string(v.free_dimension()), static_cast<double>(expected_free), 0.0,
                 v.free_dimension() == expected_free && v.torsion_columns.empty()});
  out.push_back({"relations_hold", relation < 1e-12 ? "true" : "false", 1e-12, relation, relation < 1e-12});
  if (braid) out.push_back({"generators_equal", equal < 1e-12 ? "true" : "false", 1e-12, equal, equal < 1e-12});
  return out;
}

// ---------------------------------------------------------------------------
// N-fermion factor and the semidirect product

/// Gamma_{ab} against P(p_b) Gamma_a P(p_b)^{-1} Gamma_b for random pairs,
/// and the action law (ab).q = a.(b.q) on random points.
inline std::vector<CheckResult> check_fermion_twisted_law(int particles, int fiber_dim, int pairs,
                                                          std::uint64_t seed) {
  RandomStream rng(seed, 29);
  double law = 0.0, unit = 0.0, action = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const Matrix u = random_unitary(rng, fiber_dim);
    const auto a = random_semidirect(rng, particles);
    const auto b = random_semidirect(rng, particles);
    const auto q = random_configuration(rng, particles);
    const Matrix lhs = fermion_factor(semidirect_mul(a, b), u, q);
    const Matrix pb = permutation_operator(b.perm, fiber_dim);
    const Matrix rhs = pb * fermion_factor(a, u, q) * pb.adjoint() * fermion_factor(b, u, q);
    law = std::max(law, (lhs - rhs).cwiseAbs().maxCoeff());
    unit = std::max(unit, unitarity_defect(lhs));

    const auto ab = semidirect_act(semidirect_mul(a, b), q);
    const auto a_b = semidirect_act(a, semidirect_act(b, q));
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = std::abs(ab[i].base.theta - a_b[i].base.theta) + std::abs(ab[i].base.r - a_b[i].base.r) +
                       static_cast<double>(std::llabs(ab[i].winding - a_b[i].winding));
      action = std::max(action, d);
    }
  }
  const std::string n = std::to_string(pairs);
  return {{"twisted_law", n, 1e-12, law, law <= 1e-12},
          {"fermion_unitary", n, 1e-12, unit, unit <= 1e-12},
          {"semidirect_action", n, 0.0, action, action == 0.0}};
}

// ---------------------------------------------------------------------------
// Aharonov-Casher factor

inline Matrix su2_closed_form(double alpha, const Eigen::Vector3d& axis) {
  const auto s = pauli_matrices();
  return std::cos(alpha) * identity(2) - kI * std::sin(alpha) * (axis.x() * s[0] + axis.y() * s[1] + axis.z() * s[2]);
}

inline std::vector<CheckResult> check_aharonov_casher(int samples, std::uint64_t seed) {
  RandomStream rng(seed, 31);
  double form = 0.0, det = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double alpha = (2.0 * rng.uniform() - 1.0) * kTwoPi;
    const Eigen::Vector3d e = random_unit_vector(rng);
    const Matrix g = aharonov_casher_factor(alpha / (4.0 * kPi), e);
    form = std::max(form, (g - su2_closed_form(alpha, e)).cwiseAbs().maxCoeff());
    det = std::max(det, std::abs(g.determinant() - 1.0));
  }
  const std::string n = std::to_string(samples);
  return {{"ac_closed_form", n, 1e-13, form, form <= 1e-13}, {"ac_determinant", n, 1e-12, det, det <= 1e-12}};
}

// ---------------------------------------------------------------------------
// Commutant of Pauli potentials

enum class FieldControl { None, Single, Parallel };

inline PauliPotential random_pauli_potential(RandomStream& rng, int particles, int spin_dim, int samples,
                                             FieldControl control = FieldControl::None) {
  PauliPotential pot;
  pot.particles = particles;
  pot.spin_dim = spin_dim;
  const int count = control == FieldControl::Single ? 1 : samples;
  for (int s = 0; s < count; ++s) {
    std::vector<Eigen::Vector3d> fields;
    for (int j = 0; j < particles; ++j) {
      if (control == FieldControl::Parallel) {
        fields.emplace_back(0.0, 0.0, rng.normal());
      } else {
        fields.emplace_back(rng.normal(), rng.normal(), rng.normal());
      }
    }
    pot.samples.push_back(std::move(fields));
  }
  return pot;
}

/// Scalar commutant expected for generic fields; the controls expect a
/// traceless witness that commutes with every sample.
inline std::vector<CheckResult> check_commutant(int particles, int spin_dim, int samples, FieldControl control,
                                                std::uint64_t seed) {
  RandomStream rng(seed, 37);
  const PauliPotential pot = random_pauli_potential(rng, particles, spin_dim, samples, control);
  const CommutantResult res = commutant_is_scalar(pot);
  const int d = pot.fiber_dim();
  double residual = 0.0;
  if (res.scalar) {
    const Matrix& b = res.basis.front();
    residual = (b - (b.trace() / static_cast<double>(d)) * identity(d)).norm() / b.norm();
    return {{"commutant_scalar", "true", 1e-10, residual, control == FieldControl::None && residual <= 1e-10}};
  }
  for (std::size_t k = 0; k < pot.samples.size(); ++k) {
    residual = std::max(residual, commutator_norm(pot.matrix(k), res.witness));
  }
  residual = std::max(residual, std::abs(res.witness.trace()));
  const bool pass = control != FieldControl::None && residual <= 1e-10 && std::abs(res.witness.norm() - 1.0) < 1e-12;
  return {{"commutant_scalar", "false", 1e-10, residual, pass},
          {"commutant_dimension", std::to_string(res.dimension), 1.0, 0.0, pass}};
}

// ---------------------------------------------------------------------------
// Periodicity sections

/// Twisted law on random words for the fermion section built from
/// generators, compared against the closed-form fermion factor.
inline std::vector<CheckResult> check_section_composition(int particles, int fiber_dim, int pairs,
                                                          std::uint64_t seed) {
  RandomStream rng(seed, 41);
  const Matrix u = random_unitary(rng, fiber_dim);
  // Generators: adjacent exchanges s_1..s_{N-1}, then unit windings t_1..t_N.
  PeriodicitySection sec;
  sec.dim = 1;
  for (int k = 0; k < particles; ++k) sec.dim *= fiber_dim;
  std::vector<SemidirectElement> gens;
  for (int i = 0; i + 1 < particles; ++i) {
    SemidirectElement s = SemidirectElement::identity(particles);
    std::swap(s.perm[i], s.perm[i + 1]);
    gens.push_back(s);
  }
  for (int j = 0; j < particles; ++j) {
    SemidirectElement t = SemidirectElement::identity(particles);
    t.tuple[j] = 1;
    gens.push_back(t);
  }
  const auto q = random_configuration(rng, particles);
  for (const auto& g : gens) {
    sec.base.push_back(fermion_factor(g, u, q));
    sec.holonomy.emplace_back(permutation_operator(g.perm, fiber_dim));
  }
  const int ng = static_cast<int>(gens.size());
  auto random_word = [&](SemidirectElement& elem) {
    Word w;
    elem = SemidirectElement::identity(particles);
    const int len = 1 + static_cast<int>(rng.next() % 6);
    for (int k = 0; k < len; ++k) {
      const int g = static_cast<int>(rng.next() % static_cast<std::uint64_t>(ng));
      const bool inv = (rng.next() & 1U) != 0;
      w = w * Word{inv ? -(g + 1) : g + 1};
      elem = semidirect_mul(elem, inv ? semidirect_inverse(gens[g]) : gens[g]);
    }
    return w;
  };
  double law = 0.0, closed = 0.0;
  for (int k = 0; k < pairs; ++k) {
    SemidirectElement e1, e2;
    const Word w1 = random_word(e1);
    const Word w2 = random_word(e2);
    const Matrix composed = compose_section(sec, w1, w2);
    law = std::max(law, (composed - sec(w1 * w2)).cwiseAbs().maxCoeff());
    closed = std::max(closed, (composed - fermion_factor(semidirect_mul(e1, e2), u, q)).cwiseAbs().maxCoeff());
  }
  const std::string n = std::to_string(pairs);
  return {{"section_composition", n, 1e-12, law, law <= 1e-12},
          {"section_matches_fermion_factor", n, 1e-12, closed, closed <= 1e-12}};
}

}  // namespace bohmcover
