#ifndef GMLAB_COMMON_HPP
#define GMLAB_COMMON_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace gmlab {

using VecD = Eigen::VectorXd;
using MatD = Eigen::MatrixXd;

// Bad or inconsistent user-facing configuration. Maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (integration breakdown, underflow, divergence).
// Maps to CLI exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Singularity margin delta: schedule conversions and samplers stay on
// [0, 1 - kTimeMargin] because e.g. the flow-matching drift f = -1/(1-t)
// blows up at t = 1.
inline constexpr double kTimeMargin = 1e-3;

}  // namespace gmlab

#endif
