#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace helmscat {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;

// Error taxonomy. The CLI maps each class onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input or configuration (exit 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A mathematical precondition does not hold: point on the obstacle, Im k < 0,
// degenerate shape (exit 2 when raised from user input).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Linear solve failed its residual or conditioning contract (exit 3).
class SolverError : public Error {
 public:
  using Error::Error;
};

// Internal consistency check failed (exit 5).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace helmscat
