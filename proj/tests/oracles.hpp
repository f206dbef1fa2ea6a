#pragma once

// Independent reference computations used by the tests. None of these call
// into the library's solvers; they rebuild the quantity from scratch.

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
constexpr double pi = 3.14159265358979323846;

/// Dense ring Laplacian -(1/2mR^2) d^2/dtheta^2 with twisted wrap (phase on the seam bond).
inline Mat twisted_ring(int n, double beta, double mass = 1.0, double radius = 1.0) {
  const double h = 2.0 * pi / n;
  const double c = 1.0 / (2.0 * mass * radius * radius * h * h);
  Mat a = Mat::Zero(n, n);
  const cd g = std::polar(1.0, beta);
  for (int j = 0; j < n; ++j) {
    a(j, j) = 2.0 * c;
    const int jp = (j + 1) % n, jm = (j + n - 1) % n;
    a(j, jp) += j + 1 == n ? -c * g : cd(-c);
    a(j, jm) += j == 0 ? -c * std::conj(g) : cd(-c);
  }
  return a;
}

/// Same spectrum from a Peierls gauge: every bond carries exp(i beta / n), no seam twist.
inline Mat peierls_ring(int n, double beta) {
  const double h = 2.0 * pi / n;
  const double c = 1.0 / (2.0 * h * h);
  const cd link = std::polar(1.0, beta / n);
  Mat a = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    a(j, j) = 2.0 * c;
    a(j, (j + 1) % n) += -c * link;
    a(j, (j + n - 1) % n) += -c * std::conj(link);
  }
  return a;
}

inline Eigen::VectorXd dense_eigenvalues(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// exp(A) by the plain Taylor series with many terms and no scaling; fine for |A| <~ 10.
inline Mat series_exp(const Mat& a, int terms = 80) {
  Mat sum = Mat::Identity(a.rows(), a.cols());
  Mat term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

inline std::array<Mat, 3> pauli() {
  Mat x(2, 2), y(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  y << 0, cd(0, -1), cd(0, 1), 0;
  z << 1, 0, 0, -1;
  return {x, y, z};
}

/// Dimension of {X : [V_k, X] = 0 for all k} via a full-pivot LU kernel.
inline int commutant_dimension(const std::vector<Mat>& ops) {
  const Eigen::Index d = ops.front().rows();
  Mat sys = Mat::Zero(static_cast<Eigen::Index>(ops.size()) * d * d, d * d);
  for (std::size_t k = 0; k < ops.size(); ++k) {
    // Entry (i, j) of V X - X V, with X_{ab} at column a + b d.
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::Index row = static_cast<Eigen::Index>(k) * d * d + i + j * d;
        for (Eigen::Index m = 0; m < d; ++m) {
          sys(row, m + j * d) += ops[k](i, m);
          sys(row, i + m * d) -= ops[k](m, j);
        }
      }
    }
  }
  Eigen::FullPivLU<Mat> lu(sys);
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.dimensionOfKernel());
}

/// Number of homomorphisms to the m-th roots of unity, by enumerating all
/// assignments of exponents 0..m-1 to the generators of a relator list
/// given as exponent-sum rows.
inline long long count_root_characters(const std::vector<std::vector<long long>>& rel, int generators, int m) {
  long long count = 0;
  std::vector<int> e(static_cast<std::size_t>(generators), 0);
  while (true) {
    bool ok = true;
    for (const auto& row : rel) {
      long long s = 0;
      for (int g = 0; g < generators; ++g) s += row[g] * e[g];
      if (((s % m) + m) % m != 0) {
        ok = false;
        break;
      }
    }
    if (ok) ++count;
    int k = 0;
    while (k < generators && ++e[k] == m) e[k++] = 0;
    if (k == generators) break;
  }
  return count;
}

/// Least-squares slope of log(err) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(x[k]), ly = std::log(err[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
