#pragma once

#include "gaussfold/decompose.hpp"
#include "gaussfold/linalg.hpp"

#include <utility>
#include <vector>

namespace gaussfold {

struct GaussianLaw {
    Vec mean;
    CovModel cov;

    Eigen::Index dim() const { return mean.size(); }
};

/// Law of one Gaussian block given another. `coefficients` holds (q1, q2) for
/// fold-pair conditionals and (d_A, d_B) for collapsed groups.
struct ConditionalLaw {
    GaussianLaw base;
    Vec conditioning_value;
    std::pair<double, double> coefficients;
};

/// Law of vec(X'^T) for a one-observation dependent plan with first column q_col:
/// mean vec(mu q^T), covariance q q^T ⊗ Sigma + (I - q q^T) ⊗ Sigma'.
GaussianLaw joint_law(const Vec& q_col, const Vec& mu, const CovModel& sigma, const CovModel& sigma_prime);

/// N(q mu, q^2 Sigma + (1 - q^2) Sigma').
GaussianLaw fold_marginal(double q, const Vec& mu, const CovModel& sigma, const CovModel& sigma_prime);

/// Law of the second fold given the first fold equals x1 (two-fold plans).
ConditionalLaw conditional_law(const Vec& x1, double q1, double q2, const Vec& mu, const CovModel& sigma,
                               const CovModel& sigma_prime);

/// Two disjoint groups of folds from a single-observation plan, collapsed into
/// x_A = sum_{k in A} q_k x^(k) and likewise x_B.
struct CollapsedFolds {
    Vec x_a;
    Vec x_b;
    double d_a = 0.0;
    double d_b = 0.0;

    /// Joint law of (x_A, x_B), dimension 2p.
    GaussianLaw joint_law(const Vec& mu, const CovModel& sigma, const CovModel& sigma_prime) const;
    /// Law of x_B given x_A at the observed x_A.
    ConditionalLaw conditional_law(const Vec& mu, const CovModel& sigma, const CovModel& sigma_prime) const;
};

/// Fold indices are 0-based. Requires A ∩ B = ∅ and a single-observation plan.
CollapsedFolds collapse(const FoldSet& fs, const std::vector<int>& a, const std::vector<int>& b);

double log_density(const GaussianLaw& law, const Vec& x);
double log_density(const ConditionalLaw& law, const Vec& x);

struct PairLogDensity {
    double first = 0.0;        // log p(x1)
    double second_given = 0.0; // log p(x2 | x1)
};

/// Log-densities of x1 and of x2 | x1 for a two-fold plan with isotropic
/// Sigma' = sigma_prime_sq * I, evaluated coordinate-wise in the eigenbasis of
/// sigma_star. Kronecker models are rotated factor by factor.
PairLogDensity fast_log_density_pair(const Vec& x1, const Vec& x2, const Vec& mu, const CovModel& sigma_star,
                                     double sigma_prime_sq, double q1, double q2);
PairLogDensity fast_log_density_pair(const Vec& x1, const Vec& x2, const Vec& mu, const SpectralBasis& basis,
                                     double sigma_prime_sq, double q1, double q2);

/// Same pair of log-densities through dense Cholesky algebra.
PairLogDensity dense_log_density_pair(const Vec& x1, const Vec& x2, const Vec& mu, const CovModel& sigma,
                                      const CovModel& sigma_prime, double q1, double q2);

/// Fold one as a latent Gaussian with an independent emission layer:
/// x1_j | Y ~ N(q1 Y_j, (1 - q1^2) s_j^2), Y ~ N(mu, Sigma).
struct LatentForm {
    double emission_scale = 0.0;
    Vec emission_variances;
    GaussianLaw latent;
    bool degenerate = false;  // q1 = 1 leaves no emission noise
    bool isotropic = false;   // all emission variances equal

    /// Marginal law of fold one implied by the two layers.
    GaussianLaw marginal() const;
};

LatentForm latent_form(double q1, const Vec& mu, const CovModel& sigma, const Vec& sigma_prime_diag);

}  // namespace gaussfold
