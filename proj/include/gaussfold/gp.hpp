#pragma once

#include "gaussfold/decompose.hpp"
#include "gaussfold/laws.hpp"

#include <functional>
#include <string>

namespace gaussfold {

/// Covariance function C(t, t') on R^d. Index points are the rows of a matrix.
class CovFunction {
public:
    enum class Kind { WhiteNoise, SquaredExponential, Matern32, User };
    using Kernel = std::function<double(const Vec&, const Vec&)>;

    static CovFunction white_noise(double variance);
    static CovFunction squared_exponential(double variance, double lengthscale);
    static CovFunction matern32(double variance, double lengthscale);
    static CovFunction user(Kernel k, std::string name = "user");

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    double variance() const { return variance_; }
    double lengthscale() const { return lengthscale_; }

    double operator()(const Vec& t, const Vec& u) const;
    /// Gram matrix on the given points, as a CovModel (isotropic for white noise).
    CovModel gram(const Mat& points) const;

private:
    CovFunction() = default;
    Kind kind_ = Kind::User;
    std::string name_;
    double variance_ = 1.0;
    double lengthscale_ = 1.0;
    Kernel user_;
};

using MeanFunction = std::function<double(const Vec&)>;

/// Mean function evaluated at each point.
Vec evaluate_mean(const MeanFunction& mu, const Mat& points);

/// Fold processes evaluated on a finite index set declared up front.
struct GPFoldSet {
    Mat points;               // one index point per row
    std::vector<Vec> folds;   // fold values on the points
    OrthogonalPlan plan;
    CovFunction cprime;

    /// Q^T applied to the fold values: recovers the decomposed process values.
    Vec reconstruct() const;
};

/// Decomposes one realization observed at `points`. The plan must be a
/// single-observation plan with one row per fold.
GPFoldSet gp_decompose(const Vec& x_values, const Mat& points, const OrthogonalPlan& plan,
                       const CovFunction& cprime, std::uint64_t seed);

/// Law of fold k (0-based) on the index set.
GaussianLaw gp_fold_marginal(int k, const OrthogonalPlan& plan, const Mat& points, const MeanFunction& mu,
                             const CovFunction& c, const CovFunction& cprime);

/// Joint law of all folds on the index set, fold-major.
GaussianLaw gp_joint_law(const OrthogonalPlan& plan, const Mat& points, const MeanFunction& mu,
                         const CovFunction& c, const CovFunction& cprime);

/// Law of fold two given fold one equals x1_values (two-fold plans).
ConditionalLaw gp_conditional(const Vec& x1_values, const OrthogonalPlan& plan, const Mat& points,
                              const MeanFunction& mu, const CovFunction& c, const CovFunction& cprime);

}  // namespace gaussfold
