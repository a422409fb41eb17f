#pragma once

#include "gaussfold/decompose.hpp"
#include "gaussfold/linalg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gaussfold {

/// Parametric Gaussian model mu(theta), Sigma(phi). Derivatives come from the
/// optional analytic callbacks, otherwise from central differences with step
/// 1e-5 * max(1, |param|).
struct ParamModel {
    Vec theta;
    Vec phi;
    std::function<Vec(const Vec&)> mu_of_theta;
    std::function<CovModel(const Vec&)> sigma_of_phi;
    std::function<Mat(const Vec&)> mu_jacobian;                  // p x M, optional
    std::function<std::vector<Mat>(const Vec&)> sigma_derivs;    // N matrices p x p, optional

    Eigen::Index dim() const;
    Vec mu() const { return mu_of_theta(theta); }
    CovModel sigma() const { return sigma_of_phi(phi); }
    Mat jacobian() const;
    std::vector<Mat> sigma_derivatives() const;
    void validate() const;
};

/// Mean vector theta (identity map) with a fixed covariance.
ParamModel mean_model(const Vec& theta, const CovModel& sigma);

struct FisherReport {
    double q1 = 0.0;
    Mat i1_theta, i2_theta, total_theta;
    Mat i1_phi, i2_phi, total_phi;

    std::string table() const;
};

/// Information about theta and phi in fold one (q1) and in fold two given fold
/// one, for a two-fold single-observation plan. I2 = total - I1.
FisherReport fisher_fission(const ParamModel& pm, double q1, const CovModel& sigma_prime);

/// Information of the full observation: J^T Sigma^-1 J and
/// 1/2 tr(Sigma^-1 dSigma_j Sigma^-1 dSigma_j').
Mat total_info_theta(const ParamModel& pm);
Mat total_info_phi(const ParamModel& pm);

struct FoldFraction {
    double mean = 0.0;  // share of the information about mu
    double cov = 0.0;   // share of the information about Sigma
};

/// Per-fold information shares for a plan with r = 0 (i.i.d. rows):
/// (1^T Q_k^T Q_k 1) / n for the mean and n_k / n for the covariance.
std::vector<FoldFraction> fisher_split(const Mat& q, const std::vector<int>& sizes);
std::vector<FoldFraction> fisher_split(const OrthogonalPlan& plan);

struct TuneResult {
    double q1 = 0.0;
    double sigma_prime = 0.0;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Squared mismatch between the trace terms of S and of
/// E = sqrt(gamma) S + (1 - sqrt(gamma)) c^2 I, summed over parameter pairs
/// j < j' (and j = j' when include_diagonal is set).
double tuning_objective(double gamma, const Mat& s_guess, const std::vector<Mat>& dsigma, double c,
                        bool include_diagonal = false);

/// Fixes q1 = gamma^(1/4) and picks sigma' by golden-section search on
/// log sigma' over [1e-3, 1e3]. Derivatives of Sigma come from pm.
TuneResult tune_sigma_prime(double gamma, const CovModel& s_guess, const ParamModel& pm,
                            bool include_diagonal = false);

}  // namespace gaussfold
