#pragma once

// Algebra of topological factors: unitary representations, periodicity
// sections (holonomy-twisted representations), the semidirect-product deck
// group of N particles, N-fermion factors, SU(2) exponentials and the
// commutant test for Pauli potentials.

#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SVD>

#include "bohmcover/core.hpp"
#include "bohmcover/geometry.hpp"
#include "bohmcover/words.hpp"

namespace bohmcover {

// ---------------------------------------------------------------------------
// Small matrix helpers

inline Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

inline double unitarity_defect(const Matrix& u) {
  return (u.adjoint() * u - identity(u.rows())).cwiseAbs().maxCoeff();
}

inline double commutator_norm(const Matrix& a, const Matrix& b) {
  return (a * b - b * a).norm();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Integer power of a unitary matrix; negative powers use the adjoint.
inline Matrix unitary_power(const Matrix& u, long long n) {
  Matrix base = n >= 0 ? u : Matrix(u.adjoint());
  unsigned long long e = static_cast<unsigned long long>(n >= 0 ? n : -n);
  Matrix out = identity(u.rows());
  while (e != 0) {
    if (e & 1ULL) out = out * base;
    base = base * base;
    e >>= 1ULL;
  }
  return out;
}

inline std::array<Matrix, 3> pauli_matrices() {
  Matrix x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, -kI, kI, 0;
  z << 1, 0, 0, -1;
  return {x, y, z};
}

/// Spin matrices for spin s = (dim - 1)/2, scaled by 1/s so that dim = 2
/// gives the Pauli matrices.
inline std::array<Matrix, 3> spin_matrices(int dim) {
  if (dim < 2) throw Error("spin dimension must be >= 2");
  if (dim == 2) return pauli_matrices();
  const double s = 0.5 * (dim - 1);
  Matrix sp = Matrix::Zero(dim, dim);
  Matrix sz = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const double m = s - k;
    sz(k, k) = m;
    if (k > 0) sp(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
  }
  const Matrix sx = 0.5 * (sp + sp.adjoint());
  const Matrix sy = -0.5 * kI * (sp - sp.adjoint());
  return {sx / s, sy / s, sz / s};
}

/// exp(A) by scaling and squaring with a Taylor series, accurate to ~1e-15
/// relative for the small matrices used here.
inline Matrix expm(const Matrix& a) {
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = a / std::ldexp(1.0, squarings);
  Matrix term = identity(a.rows());
  Matrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int k = 0; k < squarings; ++k) sum = sum * sum;
  return sum;
}

/// exp(-i alpha e.sigma).
inline Matrix su2_exp(double alpha, const Eigen::Vector3d& axis) {
  if (std::abs(axis.norm() - 1.0) > 1e-12) throw Error("su2 axis is not a unit vector");
  const auto s = pauli_matrices();
  const Matrix gen = axis.x() * s[0] + axis.y() * s[1] + axis.z() * s[2];
  return expm(-kI * alpha * gen);
}

/// Topological factor for a neutral moment mu circling a line charge lambda.
inline Matrix aharonov_casher_factor(double mu_lambda_over_hbar, const Eigen::Vector3d& axis) {
  return su2_exp(4.0 * kPi * mu_lambda_over_hbar, axis);
}

// ---------------------------------------------------------------------------
// Representations and periodicity sections

/// Unitary representation given by one matrix per generator.
struct UnitaryRep {
  int dim = 1;
  std::vector<Matrix> matrices;

  int generator_count() const { return static_cast<int>(matrices.size()); }

  Matrix operator()(const Word& w) const {
    if (w.max_generator() >= generator_count()) throw Error("representation: unknown generator");
    Matrix out = identity(dim);
    for (int l : w.letters()) {
      const Matrix& m = matrices[static_cast<std::size_t>(std::abs(l) - 1)];
      out = l > 0 ? Matrix(out * m) : Matrix(out * m.adjoint());
    }
    return out;
  }

  double max_unitarity_defect() const {
    double d = 0.0;
    for (const auto& m : matrices) d = std::max(d, unitarity_defect(m));
    return d;
  }

  /// Largest deviation from Id over the images of the relators.
  double relation_defect(const GroupPresentation& p) const {
    double d = 0.0;
    for (const auto& r : p.relators) d = std::max(d, ((*this)(r) - identity(dim)).cwiseAbs().maxCoeff());
    return d;
  }

  void validate(const GroupPresentation& p, double tol = 1e-12) const {
    for (const auto& m : matrices) {
      if (m.rows() != dim || m.cols() != dim) throw Error("representation: matrix size mismatch");
    }
    if (generator_count() != p.generator_count()) throw Error("representation: generator count mismatch");
    if (max_unitarity_defect() > tol) throw Error("representation: matrix is not unitary");
    if (relation_defect(p) > tol) throw Error("representation: defining relation violated");
  }
};

/// Periodicity section at a fixed base fiber: Gamma per deck generator plus
/// the holonomy of the loop each generator projects to.
///
/// The values on arbitrary words follow the twisted law
///   Gamma_{s1 s2} = h_{s2} Gamma_{s1} h_{s2}^{-1} Gamma_{s2},
/// which is associative exactly when h_{s1 s2} = h_{s2} h_{s1}.
struct PeriodicitySection {
  int dim = 1;
  std::vector<Matrix> base;                      // per generator
  std::vector<std::optional<Matrix>> holonomy;   // per generator

  static PeriodicitySection from_rep(const UnitaryRep& rep) {
    PeriodicitySection s;
    s.dim = rep.dim;
    s.base = rep.matrices;
    s.holonomy.assign(rep.matrices.size(), identity(rep.dim));
    return s;
  }

  static PeriodicitySection from_character(const Character& c, int dim) {
    PeriodicitySection s;
    s.dim = dim;
    for (const auto& z : c.phases()) {
      s.base.push_back(z * identity(dim));
      s.holonomy.emplace_back(identity(dim));
    }
    return s;
  }

  int generator_count() const { return static_cast<int>(base.size()); }

  const Matrix& holonomy_of_generator(int g) const {
    const auto& h = holonomy.at(static_cast<std::size_t>(g));
    if (!h) throw Error("periodicity section: missing holonomy for generator " + std::to_string(g));
    return *h;
  }

  Matrix holonomy_of(const Word& w) const {
    Matrix h = identity(dim);
    for (int l : w.letters()) {
      const Matrix& hg = holonomy_of_generator(std::abs(l) - 1);
      h = l > 0 ? Matrix(hg * h) : Matrix(hg.adjoint() * h);
    }
    return h;
  }

  /// Gamma on a generator letter (possibly inverted).
  Matrix letter(int l) const {
    const int g = std::abs(l) - 1;
    if (g >= generator_count()) throw Error("periodicity section: unknown generator");
    if (l > 0) return base[static_cast<std::size_t>(g)];
    const Matrix& h = holonomy_of_generator(g);  // h_{g^-1} = h_g^{-1}
    return h.adjoint() * base[static_cast<std::size_t>(g)].adjoint() * h;
  }

  Matrix operator()(const Word& w) const {
    Matrix gamma = identity(dim);
    Word suffix;
    const auto& ls = w.letters();
    for (auto it = ls.rbegin(); it != ls.rend(); ++it) {
      const Matrix h = holonomy_of(suffix);
      gamma = h * letter(*it) * h.adjoint() * gamma;
      suffix = Word{*it} * suffix;
    }
    return gamma;
  }
};

inline Matrix compose_section(const PeriodicitySection& s, const Word& sigma1, const Word& sigma2) {
  const Matrix h = s.holonomy_of(sigma2);
  return h * s(sigma1) * h.adjoint() * s(sigma2);
}

/// True iff every generator's matrix agrees across the sampled base points.
inline bool check_parallel_constancy(std::span<const std::vector<Matrix>> samples, double tol = 1e-12) {
  if (samples.empty()) return true;
  const auto& ref = samples.front();
  for (const auto& s : samples) {
    if (s.size() != ref.size()) return false;
    for (std::size_t g = 0; g < s.size(); ++g) {
      if ((s[g] - ref[g]).cwiseAbs().maxCoeff() > tol) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Permutations and the semidirect product S_N x| Z^N

/// One-line form: p[i] is the image of i (0-based).
using Permutation = std::vector<int>;

inline Permutation identity_permutation(int n) {
  Permutation p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

/// (a b)(i) = a(b(i)).
inline Permutation compose(const Permutation& a, const Permutation& b) {
  Permutation out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = a[static_cast<std::size_t>(b[i])];
  return out;
}

inline Permutation inverse(const Permutation& p) {
  Permutation out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return out;
}

inline int sign(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  int s = 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    std::size_t len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(p[j])) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) s = -s;
  }
  return s;
}

inline bool is_permutation(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  for (int v : p) {
    if (v < 0 || static_cast<std::size_t>(v) >= p.size() || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

/// Operator on W^{(x)N} that moves the factor in slot p(i) to slot i.
inline Matrix permutation_operator(const Permutation& p, int fiber_dim) {
  const int n = static_cast<int>(p.size());
  long long size = 1;
  for (int k = 0; k < n; ++k) size *= fiber_dim;
  Matrix out = Matrix::Zero(size, size);
  std::vector<int> digits(static_cast<std::size_t>(n));
  for (long long src = 0; src < size; ++src) {
    long long rest = src;
    for (int k = n - 1; k >= 0; --k) {
      digits[k] = static_cast<int>(rest % fiber_dim);
      rest /= fiber_dim;
    }
    long long dst = 0;
    for (int k = 0; k < n; ++k) dst = dst * fiber_dim + digits[static_cast<std::size_t>(p[k])];
    out(dst, src) = 1.0;
  }
  return out;
}

/// sigma = p sigma~: a permutation after per-particle deck translations.
struct SemidirectElement {
  Permutation perm;
  std::vector<long long> tuple;

  int particles() const { return static_cast<int>(perm.size()); }

  static SemidirectElement identity(int n) {
    return {identity_permutation(n), std::vector<long long>(static_cast<std::size_t>(n), 0)};
  }

  void validate() const {
    if (!is_permutation(perm)) throw Error("semidirect element: invalid permutation");
    if (tuple.size() != perm.size()) throw Error("semidirect element: tuple length mismatch");
  }

  friend bool operator==(const SemidirectElement&, const SemidirectElement&) = default;
};

/// (p1, t1)(p2, t2) = (p1 p2, p2^{-1} t1 p2 + t2) with (p^{-1} t p)_i = t_{p(i)}.
inline SemidirectElement semidirect_mul(const SemidirectElement& a, const SemidirectElement& b) {
  if (a.particles() != b.particles()) throw Error("semidirect product: particle count mismatch");
  SemidirectElement out;
  out.perm = compose(a.perm, b.perm);
  out.tuple.resize(b.tuple.size());
  for (std::size_t i = 0; i < b.tuple.size(); ++i) {
    out.tuple[i] = a.tuple[static_cast<std::size_t>(b.perm[i])] + b.tuple[i];
  }
  return out;
}

inline SemidirectElement semidirect_inverse(const SemidirectElement& a) {
  SemidirectElement out;
  out.perm = inverse(a.perm);
  out.tuple.resize(a.tuple.size());
  // (p t)^{-1} = p^{-1} (p t^{-1} p^{-1}), and (p t p^{-1})_i = t_{p^{-1}(i)}.
  for (std::size_t i = 0; i < a.tuple.size(); ++i) {
    out.tuple[i] = -a.tuple[static_cast<std::size_t>(out.perm[i])];
  }
  return out;
}

/// Action on N-particle cover points: (sigma q)_i = sigma^(p^-1(i)) q_(p^-1(i)).
inline std::vector<CoverPoint> semidirect_act(const SemidirectElement& s, std::span<const CoverPoint> q) {
  if (q.size() != s.perm.size()) throw Error("semidirect action: point count mismatch");
  const Permutation pinv = inverse(s.perm);
  std::vector<CoverPoint> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto src = static_cast<std::size_t>(pinv[i]);
    out[i] = CoverPoint{q[src].base, q[src].winding + s.tuple[src]};
  }
  return out;
}

/// N-fermion factor sgn(p) (x)_j U^{t_j}, written in the slot ordering of q.
inline Matrix fermion_factor(const SemidirectElement& s, const Matrix& single_generator,
                             std::span<const CoverPoint> q, double coincidence_tol = 1e-12) {
  s.validate();
  if (q.size() != s.perm.size()) throw Error("fermion factor: point count mismatch");
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = i + 1; j < q.size(); ++j) {
      const double d = std::hypot(q[i].base.r - q[j].base.r,
                                  std::remainder(q[i].base.theta - q[j].base.theta, kTwoPi));
      if (d <= coincidence_tol) throw Error("fermion factor: configuration lies on the extended diagonal");
    }
  }
  Matrix out = Matrix::Identity(1, 1);
  for (long long t : s.tuple) out = kron(out, unitary_power(single_generator, t));
  return static_cast<double>(sign(s.perm)) * out;
}

// ---------------------------------------------------------------------------
// Pauli potentials and their commutant

/// V(q) = -mu sum_j B_j(q) . sigma_j on (C^spin_dim)^{(x)N}; one entry of
/// `samples` per configuration, holding the field at each particle.
struct PauliPotential {
  int particles = 1;
  int spin_dim = 2;
  double mu = 1.0;
  std::vector<std::vector<Eigen::Vector3d>> samples;

  int fiber_dim() const {
    int d = 1;
    for (int k = 0; k < particles; ++k) d *= spin_dim;
    return d;
  }

  Matrix matrix(std::size_t sample) const {
    const auto& fields = samples.at(sample);
    if (static_cast<int>(fields.size()) != particles) throw Error("pauli potential: field count mismatch");
    const auto s = spin_matrices(spin_dim);
    const int d = fiber_dim();
    Matrix v = Matrix::Zero(d, d);
    for (int j = 0; j < particles; ++j) {
      const Matrix local = fields[j].x() * s[0] + fields[j].y() * s[1] + fields[j].z() * s[2];
      Matrix term = Matrix::Identity(1, 1);
      for (int k = 0; k < particles; ++k) term = kron(term, k == j ? local : identity(spin_dim));
      v -= mu * term;
    }
    return v;
  }
};

struct CommutantResult {
  bool scalar = false;
  int dimension = 0;        // dimension of the commutant
  Matrix witness;           // traceless unit-norm element when not scalar
  std::vector<Matrix> basis;
};

/// Commutant {X : [V_k, X] = 0 for all k}. Singular values below
/// rel_threshold * (largest) count as zero.
inline CommutantResult commutant(std::span<const Matrix> ops, double rel_threshold = 1e-8) {
  if (ops.empty()) throw Error("commutant: no operators supplied; too few samples to decide");
  const Eigen::Index d = ops.front().rows();
  const Eigen::Index d2 = d * d;
  Matrix system(static_cast<Eigen::Index>(ops.size()) * d2, d2);
  for (std::size_t k = 0; k < ops.size(); ++k) {
    // vec(VX - XV) = (I (x) V - V^T (x) I) vec(X), column-major vec.
    const Matrix& v = ops[k];
    system.block(static_cast<Eigen::Index>(k) * d2, 0, d2, d2) =
        kron(identity(d), v) - kron(v.transpose(), identity(d));
  }
  Eigen::JacobiSVD<Matrix> svd(system, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (top > 0.0 && sv(k) > rel_threshold * top) ++rank;
  }
  CommutantResult out;
  out.dimension = static_cast<int>(d2 - rank);
  const Matrix& v = svd.matrixV();
  for (Eigen::Index k = rank; k < d2; ++k) {
    out.basis.push_back(Eigen::Map<const Matrix>(v.col(k).data(), d, d));
  }
  out.scalar = out.dimension == 1;
  if (!out.scalar) {
    // Remove the identity component from each basis element; keep the largest remainder.
    double best = -1.0;
    for (const auto& b : out.basis) {
      Matrix t = b - (b.trace() / static_cast<double>(d)) * identity(d);
      const double n = t.norm();
      if (n > best) {
        best = n;
        out.witness = t / n;
      }
    }
  }
  return out;
}

inline CommutantResult commutant_is_scalar(const PauliPotential& pot, double rel_threshold = 1e-8) {
  if (pot.samples.empty()) throw Error("commutant: no field samples; too few samples to decide");
  std::vector<Matrix> ops;
  ops.reserve(pot.samples.size());
  for (std::size_t k = 0; k < pot.samples.size(); ++k) ops.push_back(pot.matrix(k));
  return commutant(ops, rel_threshold);
}

/// Orthogonal projection (Frobenius) of m onto the span of an orthonormal basis.
inline Matrix project_onto(std::span<const Matrix> basis, const Matrix& m) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (const auto& b : basis) out += (b.adjoint() * m).trace() * b;
  return out;
}

}  // namespace bohmcover
