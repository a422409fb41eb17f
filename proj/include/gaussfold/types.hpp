#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gaussfold {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Bad user input: dimensions, parameter ranges, malformed plans or configs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (non-PD matrix, eigensolver, optimizer).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an independent split is requested for a single multivariate
/// Gaussian whose covariance is unknown. No such split exists; callers should
/// fall back to a dependent plan and use conditional laws downstream.
class ImpossibleDecomposition : public InvalidArgument {
public:
    ImpossibleDecomposition()
        : InvalidArgument(
              "cannot split a single multivariate Gaussian (n=1, p>1) with unknown covariance "
              "into independent folds; use a dependent plan (make_plan_dependent) and "
              "conditional laws instead") {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace gaussfold
