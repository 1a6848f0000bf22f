#pragma once

#include <stdexcept>
#include <string>

#include "pkm/linalg.hpp"

namespace pkm {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: malformed geometry, wrong dimensions, invalid modes,
// unparseable files.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Inverse kinematics asked for a pose outside the reachable set. Carries the
// first leg whose branch discriminant went negative.
class OutOfReachError : public Error {
 public:
  OutOfReachError(const std::string& msg, int leg) : Error(msg), leg_index(leg) {}
  int leg_index;
};

// Forward kinematics: the given joint values admit no closure.
class NoAssemblyError : public Error {
 public:
  using Error::Error;
};

// Iterative forward kinematics failed to converge.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, int iters) : Error(msg), iterations(iters) {}
  int iterations;
};

// Operation not defined for this mechanism model.
class UnsupportedOperationError : public Error {
 public:
  using Error::Error;
};

// Pose and joint values do not satisfy the loop-closure equations.
class InvalidConfigurationError : public Error {
 public:
  using Error::Error;
};

// A finite-difference probe could not be validated against closed-form
// kinematics (branch flip or solver failure near the probe point).
class OracleInvalidError : public Error {
 public:
  using Error::Error;
};

// Force amplification is unbounded: some tool-force direction meets no
// actuator resistance. Carries that direction.
class InfiniteFactorError : public Error {
 public:
  InfiniteFactorError(const std::string& msg, const Vec& dir)
      : Error(msg), direction(dir) {}
  Vec direction;
};

// The manipulability ellipsoid degenerates (singular Jacobian).
class DegenerateEllipsoidError : public Error {
 public:
  using Error::Error;
};

// Dimensional synthesis cannot meet the requested performance window.
class InfeasibleSpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace pkm
