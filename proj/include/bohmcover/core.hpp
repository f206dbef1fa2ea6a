#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bohmcover {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A (potential, factor) pair that violates [V, Gamma] = 0 somewhere.
class AdmissibilityError : public Error {
 public:
  AdmissibilityError(const std::string& what, double commutator_norm)
      : Error(what + " (commutator norm " + std::to_string(commutator_norm) + ")"),
        commutator_norm_(commutator_norm) {}

  double commutator_norm() const { return commutator_norm_; }

 private:
  double commutator_norm_;
};

}  // namespace bohmcover
