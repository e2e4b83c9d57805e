#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace arraycal {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSpeedOfLight = 299792458.0;

// Error categories. Each maps onto one CLI exit code (see cli.hpp).

/// Input violates a documented invariant (shape, range, index).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The numerical problem has no well-defined solution for the given input
/// (zero distances, zero channel entries, all-zero vectors).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A calibration record was produced from a different input than the one
/// it is being applied to.
class ProvenanceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps an angle to [0, 2π).
inline double wrap_to_2pi(double angle) {
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

/// Wraps an angle to [-π, π).
inline double wrap_to_pi(double angle) {
  return wrap_to_2pi(angle + kPi) - kPi;
}

}  // namespace arraycal
