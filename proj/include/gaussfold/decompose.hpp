#pragma once

#include "gaussfold/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gaussfold {

enum class PlanKind { SampleSplit, Thinning, Fission, InfoPreserving, Dependent, Block, Custom };

std::string to_string(PlanKind kind);
PlanKind plan_kind_from_string(const std::string& name);

/// Everything needed to run (and exactly replay) the augment-rotate-partition
/// decomposition of an n x p data matrix.
///
/// Rows of the augmented matrix are `interleave[a]`: values < n refer to data
/// rows, values >= n to noise rows (n + noise index). After rotation by Q the
/// rows listed in `row_order` are cut into consecutive folds of `sizes`.
struct OrthogonalPlan {
    Mat q;
    int n = 0;
    int r = 0;
    std::vector<int> interleave;
    std::vector<int> row_order;
    std::vector<int> sizes;
    PlanKind kind = PlanKind::Custom;
    Vec params;  // eps for thinning, first column of the block for dependent kinds
    std::optional<std::uint64_t> seed;

    int rows() const { return n + r; }
    int folds() const { return static_cast<int>(sizes.size()); }
    /// Rows of X' belonging to fold k, in fold order.
    std::vector<int> fold_rows(int k) const;
    /// Column of Q that multiplies the data row (n = 1 plans only).
    Vec data_column() const;
    /// Throws InvalidArgument describing the first violated invariant.
    void validate() const;
};

struct FoldSet {
    std::vector<Mat> folds;
    OrthogonalPlan plan;
    CovModel sigma_prime;
    int n = 0;
    int p = 0;

    Mat stacked() const;  // X' in its original row order
};

/// Custom plan from an explicit orthogonal Q. With no interleave given, data
/// rows come first; with no row order, folds are consecutive rows of X'.
OrthogonalPlan make_plan_custom(Mat q, int n, std::vector<int> sizes, std::vector<int> interleave = {},
                                std::vector<int> row_order = {});

/// Uniformly random permutation Q with r = 0: ordinary sample splitting.
OrthogonalPlan make_plan_sample_split(int n, std::vector<int> sizes, std::uint64_t seed);

/// K-fold thinning with known covariance. For n > 1 uses Q = I_n ⊗ Q' with
/// each data row followed by its K-1 noise rows; fold k takes rows k, k+K, ...
OrthogonalPlan make_plan_thinning(const Vec& eps, int n = 1);

/// Random orthogonal Q with Q 1 = 1 (r = 0). Folds are new i.i.d. draws of the
/// row distribution rather than copies of rows. Rejects n = 1.
OrthogonalPlan make_plan_info_preserving(int n, std::vector<int> sizes, std::uint64_t seed);

/// Dependent K-fold plan with first column q_col; block-diagonal for n > 1.
OrthogonalPlan make_plan_dependent(int n, int k, const Vec& q_col, std::uint64_t seed = 0);

/// Dependent two-fold plan with Q = [[1,1],[1,-1]]/sqrt(2).
OrthogonalPlan make_plan_fission(int n = 1);

/// Dispatches a request for independent folds. Throws ImpossibleDecomposition
/// when n = 1, p > 1 and the covariance is unknown.
OrthogonalPlan plan_independent(int n, int p, int k, bool covariance_known, std::uint64_t seed);

/// Augment X with r rows of N_p(0, sigma_prime) noise, rotate by Q, partition.
FoldSet general_decompose(const Mat& x, const OrthogonalPlan& plan, const CovModel& sigma_prime,
                          std::uint64_t seed);

/// Inverts general_decompose: stacks folds, premultiplies by Q^T, keeps data rows.
Mat reconstruct(const FoldSet& fs);

/// Splits (x - mu)^2 into K independent Gamma(eps_k / 2, rate 1/(2 sigma^2))
/// pieces by Dirichlet(eps/2) proportions. Scalar observation, known mean.
Vec gamma_dirichlet_thin(double x, double mu, const Vec& eps, std::uint64_t seed);

}  // namespace gaussfold
