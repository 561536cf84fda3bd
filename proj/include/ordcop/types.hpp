#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace ordcop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::VectorXi;
using Index = Eigen::Index;

// Probability clamp: u, v arguments of copula routines are kept inside
// [prob_eps, 1 - prob_eps].
inline constexpr double prob_eps = std::numeric_limits<double>::epsilon() * 1e6;

// Safety margin used by the dependence-parameter transforms so that mapped
// values stay strictly inside open parameter ranges.
inline constexpr double range_eps = std::numeric_limits<double>::min() * 1e6;

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double clamp_prob(double p) {
  if (p < prob_eps) return prob_eps;
  if (p > 1.0 - prob_eps) return 1.0 - prob_eps;
  return p;
}

// Error hierarchy. Invalid user input and structural problems throw; the
// likelihood itself never throws on infeasible parameter values (it returns a
// flagged sentinel instead, see likelihood.hpp).
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InputError : Error {
  using Error::Error;
};

struct OutOfRangeGamma : Error {
  using Error::Error;
};

struct UnattainableTau : Error {
  using Error::Error;
};

struct EmptyCategory : InputError {
  using InputError::InputError;
};

struct SupportViolation : InputError {
  using InputError::InputError;
};

struct MissingCovariate : InputError {
  using InputError::InputError;
};

struct DisconnectedRegion : InputError {
  using InputError::InputError;
};

struct UnknownLevel : InputError {
  using InputError::InputError;
};

struct NegativeLambda : InputError {
  using InputError::InputError;
};

struct StalledRadius : Error {
  using Error::Error;
};

struct DegenerateCovariance : Error {
  using Error::Error;
};

struct StudyAborted : Error {
  using Error::Error;
};

}  // namespace ordcop
