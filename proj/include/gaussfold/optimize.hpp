#pragma once

#include "gaussfold/types.hpp"

#include <functional>
#include <string>

namespace gaussfold {

struct ScalarMinimum {
    double x = 0.0;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Golden-section search for a minimum of f on [lo, hi]; stops when the
/// bracket is narrower than tol.
ScalarMinimum golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-6,
                             int max_iter = 500);

/// Objective for minimization. Returns f(x) and, when grad is non-null,
/// writes the gradient into it.
using Objective = std::function<double(const Vec& x, Vec* grad)>;

struct BfgsOptions {
    double grad_tol = 1e-6;  // stop when ||grad||_inf falls below this
    int max_iter = 500;
    double c1 = 1e-4;        // sufficient decrease
    double c2 = 0.9;         // curvature
    int max_line_evals = 40;
    /// Starting inverse-Hessian approximation; empty means a scaled identity.
    Mat initial_inverse_hessian;
};

struct BfgsResult {
    Vec x;
    double f = 0.0;
    Vec grad;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;  // gradient tolerance reached
    bool stalled = false;    // line search could not make progress
    std::string message;
    Mat inverse_hessian;     // final quasi-Newton approximation
};

/// Quasi-Newton minimization with a strong-Wolfe line search. Always returns
/// the best iterate found; `converged` tells whether the gradient test passed.
BfgsResult bfgs_minimize(const Objective& f, Vec x0, const BfgsOptions& opts = {});

}  // namespace gaussfold
