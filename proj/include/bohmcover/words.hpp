#pragma once

// Free-group words, finite presentations and the character variety
// Hom(G, U(1)) of a finitely presented group.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bohmcover/core.hpp"

namespace bohmcover {

/// Freely reduced word. Letter g+1 stands for generator g, -(g+1) for its inverse.
class Word {
 public:
  Word() = default;

  explicit Word(std::span<const int> letters) {
    for (int l : letters) push(l);
  }
  Word(std::initializer_list<int> letters) {
    for (int l : letters) push(l);
  }

  static Word generator(int g, long long power = 1) {
    Word w;
    const int letter = power >= 0 ? g + 1 : -(g + 1);
    for (long long k = 0; k < std::llabs(power); ++k) w.push(letter);
    return w;
  }

  const std::vector<int>& letters() const { return letters_; }
  std::size_t length() const { return letters_.size(); }
  bool is_identity() const { return letters_.empty(); }

  Word inverse() const {
    Word w;
    w.letters_.reserve(letters_.size());
    for (auto it = letters_.rbegin(); it != letters_.rend(); ++it) w.letters_.push_back(-*it);
    return w;
  }

  long long exponent_sum(int g) const {
    long long s = 0;
    for (int l : letters_) {
      if (l == g + 1) ++s;
      if (l == -(g + 1)) --s;
    }
    return s;
  }

  /// Largest generator index used, or -1 for the identity.
  int max_generator() const {
    int m = -1;
    for (int l : letters_) m = std::max(m, std::abs(l) - 1);
    return m;
  }

  friend Word operator*(const Word& a, const Word& b) {
    Word w = a;
    for (int l : b.letters_) w.push(l);
    return w;
  }

  friend bool operator==(const Word& a, const Word& b) = default;

  /// Renders e.g. "a^2 b^-1"; the identity is "1".
  std::string to_string(std::span<const std::string> names = {}) const {
    if (letters_.empty()) return "1";
    std::string out;
    std::size_t k = 0;
    while (k < letters_.size()) {
      const int l = letters_[k];
      std::size_t run = 1;
      while (k + run < letters_.size() && letters_[k + run] == l) ++run;
      const int g = std::abs(l) - 1;
      if (!out.empty()) out += ' ';
      out += static_cast<std::size_t>(g) < names.size() ? names[static_cast<std::size_t>(g)]
                                                        : "g" + std::to_string(g);
      const long long e = (l > 0 ? 1 : -1) * static_cast<long long>(run);
      if (e != 1) out += "^" + std::to_string(e);
      k += run;
    }
    return out;
  }

 private:
  void push(int letter) {
    if (letter == 0) throw Error("word letter 0 is not a generator");
    if (!letters_.empty() && letters_.back() == -letter) {
      letters_.pop_back();
    } else {
      letters_.push_back(letter);
    }
  }

  std::vector<int> letters_;
};

/// Finite presentation <generators | relators>.
struct GroupPresentation {
  std::string name;
  std::vector<std::string> generators;
  std::vector<Word> relators;

  int generator_count() const { return static_cast<int>(generators.size()); }

  void validate() const {
    for (const auto& r : relators) {
      if (r.max_generator() >= generator_count()) {
        throw Error("presentation " + name + ": relator " + r.to_string() +
                    " uses an undeclared generator");
      }
    }
  }

  static GroupPresentation free(int rank) {
    GroupPresentation p;
    p.name = "F" + std::to_string(rank);
    for (int g = 0; g < rank; ++g) p.generators.push_back(std::string(1, static_cast<char>('a' + g)));
    return p;
  }

  /// Coxeter presentation of S_n on adjacent transpositions s_1..s_{n-1}.
  static GroupPresentation symmetric(int n) {
    if (n < 2) throw Error("symmetric group needs n >= 2");
    GroupPresentation p;
    p.name = "S" + std::to_string(n);
    for (int i = 1; i < n; ++i) p.generators.push_back("s" + std::to_string(i));
    const int m = n - 1;
    for (int i = 0; i < m; ++i) {
      p.relators.push_back(Word{i + 1, i + 1});
      if (i + 1 < m) p.relators.push_back(Word{i + 1, i + 2, i + 1, i + 2, i + 1, i + 2});
      for (int j = i + 2; j < m; ++j) p.relators.push_back(Word{i + 1, j + 1, i + 1, j + 1});
    }
    return p;
  }

  /// Artin presentation of the braid group B_n.
  static GroupPresentation braid(int n) {
    if (n < 2) throw Error("braid group needs n >= 2");
    GroupPresentation p;
    p.name = "B" + std::to_string(n);
    for (int i = 1; i < n; ++i) p.generators.push_back("b" + std::to_string(i));
    const int m = n - 1;
    for (int i = 0; i < m; ++i) {
      const int a = i + 1;
      if (i + 1 < m) {
        const int b = i + 2;
        p.relators.push_back(Word{a, b, a, -b, -a, -b});
      }
      for (int j = i + 2; j < m; ++j) p.relators.push_back(Word{a, j + 1, -a, -(j + 1)});
    }
    return p;
  }
};

/// One-dimensional unitary representation: a unit phase per generator.
class Character {
 public:
  Character() = default;
  explicit Character(std::vector<Complex> phases) : phases_(std::move(phases)) {
    for (const auto& z : phases_) {
      if (std::abs(std::abs(z) - 1.0) > 1e-12) throw Error("character phase is not unimodular");
    }
  }

  static Character from_angles(std::span<const double> angles) {
    std::vector<Complex> z;
    z.reserve(angles.size());
    for (double a : angles) z.push_back(std::polar(1.0, a));
    return Character(std::move(z));
  }

  static Character trivial(int generators) {
    return Character(std::vector<Complex>(static_cast<std::size_t>(generators), Complex{1.0, 0.0}));
  }

  int generator_count() const { return static_cast<int>(phases_.size()); }
  const std::vector<Complex>& phases() const { return phases_; }
  Complex phase(int g) const { return phases_.at(static_cast<std::size_t>(g)); }

  /// Product of generator phases along the word.
  Complex operator()(const Word& w) const {
    if (w.max_generator() >= generator_count()) {
      throw Error("character has no phase for generator " + std::to_string(w.max_generator()));
    }
    Complex z{1.0, 0.0};
    for (int l : w.letters()) {
      const Complex p = phases_[static_cast<std::size_t>(std::abs(l) - 1)];
      z *= l > 0 ? p : std::conj(p);
    }
    return z;
  }

 private:
  std::vector<Complex> phases_;
};

inline Complex char_eval(const Character& gamma, const Word& sigma) { return gamma(sigma); }

using IntMatrix = std::vector<std::vector<long long>>;

/// Diagonalization D = P A Q of an integer matrix by unimodular row (P) and
/// column (Q) operations. Only Q and the diagonal are kept.
struct IntegerDiagonalForm {
  std::vector<long long> diagonal;  // length min(rows, cols); nonnegative
  IntMatrix column_transform;       // Q, cols x cols, det +-1
};

inline IntegerDiagonalForm diagonalize(IntMatrix a, int cols) {
  const int rows = static_cast<int>(a.size());
  IntMatrix q(static_cast<std::size_t>(cols), std::vector<long long>(static_cast<std::size_t>(cols), 0));
  for (int c = 0; c < cols; ++c) q[c][c] = 1;

  auto swap_cols = [&](int c1, int c2) {
    for (auto& row : a) std::swap(row[c1], row[c2]);
    for (auto& row : q) std::swap(row[c1], row[c2]);
  };
  auto add_col = [&](int dst, int src, long long k) {  // col dst -= k * col src
    for (auto& row : a) row[dst] -= k * row[src];
    for (auto& row : q) row[dst] -= k * row[src];
  };

  const int steps = std::min(rows, cols);
  for (int t = 0; t < steps; ++t) {
    while (true) {
      int pr = -1, pc = -1;
      long long best = 0;
      for (int r = t; r < rows; ++r) {
        for (int c = t; c < cols; ++c) {
          const long long v = std::llabs(a[r][c]);
          if (v != 0 && (best == 0 || v < best)) {
            best = v;
            pr = r;
            pc = c;
          }
        }
      }
      if (pr < 0) {
        IntegerDiagonalForm out;
        for (int k = 0; k < steps; ++k) out.diagonal.push_back(k < t ? std::llabs(a[k][k]) : 0);
        out.column_transform = std::move(q);
        return out;
      }
      std::swap(a[t], a[pr]);
      if (pc != t) swap_cols(t, pc);

      bool clean = true;
      for (int r = t + 1; r < rows; ++r) {
        const long long k = a[r][t] / a[t][t];
        if (k != 0) {
          for (int c = t; c < cols; ++c) a[r][c] -= k * a[t][c];
        }
        if (a[r][t] != 0) clean = false;
      }
      for (int c = t + 1; c < cols; ++c) {
        const long long k = a[t][c] / a[t][t];
        if (k != 0) add_col(c, t, k);
        if (a[t][c] != 0) clean = false;
      }
      if (clean) break;
    }
  }
  IntegerDiagonalForm out;
  for (int k = 0; k < steps; ++k) out.diagonal.push_back(std::llabs(a[k][k]));
  out.column_transform = std::move(q);
  return out;
}

/// Hom(G, U(1)) for a finitely presented G, parameterized as a torus of
/// free angles times a finite abelian group. Generator g carries phase
/// exp(i * sum_k Q[g][k] psi_k) where psi_k is free for k in free_columns
/// and psi_k = 2 pi n / d_k for torsion columns.
class CharacterVariety {
 public:
  int generator_count = 0;
  IntMatrix transform;                 // Q
  std::vector<int> free_columns;       // unconstrained angles
  std::vector<int> torsion_columns;    // angle quantized to 2 pi / order
  std::vector<long long> torsion_orders;

  int free_dimension() const { return static_cast<int>(free_columns.size()); }

  /// Number of characters when the variety is finite; 0 if it is continuous.
  long long finite_count() const {
    if (!free_columns.empty()) return 0;
    long long n = 1;
    for (long long d : torsion_orders) n *= d;
    return n;
  }

  Character at(std::span<const double> free_angles, std::span<const long long> torsion_index) const {
    if (free_angles.size() != free_columns.size() || torsion_index.size() != torsion_columns.size()) {
      throw Error("character variety parameter count mismatch");
    }
    std::vector<double> psi(transform.empty() ? 0 : transform.front().size(), 0.0);
    for (std::size_t k = 0; k < free_columns.size(); ++k) psi[free_columns[k]] = free_angles[k];
    for (std::size_t k = 0; k < torsion_columns.size(); ++k) {
      psi[torsion_columns[k]] = kTwoPi * static_cast<double>(torsion_index[k]) /
                                static_cast<double>(torsion_orders[k]);
    }
    std::vector<double> angles(static_cast<std::size_t>(generator_count), 0.0);
    for (int g = 0; g < generator_count; ++g) {
      double s = 0.0;
      for (std::size_t k = 0; k < psi.size(); ++k) s += static_cast<double>(transform[g][k]) * psi[k];
      angles[g] = std::remainder(s, kTwoPi);
    }
    return Character::from_angles(angles);
  }

  std::vector<Character> enumerate_finite() const {
    if (!free_columns.empty()) throw Error("character variety is continuous; cannot enumerate");
    std::vector<Character> out;
    std::vector<long long> idx(torsion_columns.size(), 0);
    while (true) {
      out.push_back(at({}, idx));
      std::size_t k = 0;
      while (k < idx.size() && ++idx[k] == torsion_orders[k]) idx[k++] = 0;
      if (k == idx.size()) break;
    }
    return out;
  }
};

/// Abelianizes the relators (exponent-sum matrix) and diagonalizes it.
inline CharacterVariety classify_characters(const GroupPresentation& presentation) {
  presentation.validate();
  const int g = presentation.generator_count();
  if (g == 0) throw Error("presentation has no generators");
  IntMatrix rel;
  for (const auto& r : presentation.relators) {
    std::vector<long long> row(static_cast<std::size_t>(g));
    for (int k = 0; k < g; ++k) row[k] = r.exponent_sum(k);
    rel.push_back(std::move(row));
  }
  CharacterVariety v;
  v.generator_count = g;
  if (rel.empty()) {
    v.transform.assign(static_cast<std::size_t>(g), std::vector<long long>(static_cast<std::size_t>(g), 0));
    for (int k = 0; k < g; ++k) {
      v.transform[k][k] = 1;
      v.free_columns.push_back(k);
    }
    return v;
  }
  auto form = diagonalize(rel, g);
  v.transform = std::move(form.column_transform);
  for (int k = 0; k < g; ++k) {
    const long long d = k < static_cast<int>(form.diagonal.size()) ? form.diagonal[k] : 0;
    if (d == 0) {
      v.free_columns.push_back(k);
    } else if (d > 1) {
      v.torsion_columns.push_back(k);
      v.torsion_orders.push_back(d);
    }
  }
  return v;
}

}  // namespace bohmcover
