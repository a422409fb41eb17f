#include "gaussfold/gp.hpp"

#include <cmath>

namespace gaussfold {

namespace {

void check_points(const Mat& points) {
    require(points.rows() >= 1 && points.cols() >= 1, "index set must contain at least one point");
    require(points.allFinite(), "index points must be finite");
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            require(points.row(i) != points.row(j),
                    "index points must be distinct (white-noise Gram on repeated points is singular)");
}

// Weights q_k of the data row, one per fold.
Vec fold_weights(const OrthogonalPlan& plan) {
    plan.validate();
    require(plan.n == 1, "process decompositions use single-observation plans");
    for (int s : plan.sizes) require(s == 1, "process decompositions need one row per fold");
    const Vec col = plan.data_column();
    Vec q(plan.folds());
    for (int k = 0; k < plan.folds(); ++k) q(k) = col(plan.fold_rows(k).front());
    return q;
}

}  // namespace

CovFunction CovFunction::white_noise(double variance) {
    require(variance > 0.0, "white-noise variance must be positive");
    CovFunction f;
    f.kind_ = Kind::WhiteNoise;
    f.name_ = "white_noise";
    f.variance_ = variance;
    return f;
}

CovFunction CovFunction::squared_exponential(double variance, double lengthscale) {
    require(variance > 0.0 && lengthscale > 0.0, "kernel variance and lengthscale must be positive");
    CovFunction f;
    f.kind_ = Kind::SquaredExponential;
    f.name_ = "squared_exponential";
    f.variance_ = variance;
    f.lengthscale_ = lengthscale;
    return f;
}

CovFunction CovFunction::matern32(double variance, double lengthscale) {
    require(variance > 0.0 && lengthscale > 0.0, "kernel variance and lengthscale must be positive");
    CovFunction f;
    f.kind_ = Kind::Matern32;
    f.name_ = "matern32";
    f.variance_ = variance;
    f.lengthscale_ = lengthscale;
    return f;
}

CovFunction CovFunction::user(Kernel k, std::string name) {
    require(static_cast<bool>(k), "user kernel must be callable");
    CovFunction f;
    f.kind_ = Kind::User;
    f.name_ = std::move(name);
    f.user_ = std::move(k);
    return f;
}

double CovFunction::operator()(const Vec& t, const Vec& u) const {
    switch (kind_) {
        case Kind::WhiteNoise:
            return t == u ? variance_ : 0.0;
        case Kind::SquaredExponential: {
            const double r2 = (t - u).squaredNorm() / (lengthscale_ * lengthscale_);
            return variance_ * std::exp(-0.5 * r2);
        }
        case Kind::Matern32: {
            const double r = std::sqrt(3.0) * (t - u).norm() / lengthscale_;
            return variance_ * (1.0 + r) * std::exp(-r);
        }
        case Kind::User:
            return user_(t, u);
    }
    return 0.0;
}

CovModel CovFunction::gram(const Mat& points) const {
    check_points(points);
    if (kind_ == Kind::WhiteNoise) return CovModel::isotropic(variance_, points.rows());
    const Eigen::Index d = points.rows();
    Mat g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = i; j < d; ++j) {
            const Vec a = points.row(i).transpose(), b = points.row(j).transpose();
            g(i, j) = (*this)(a, b);
            g(j, i) = g(i, j);
        }
    return CovModel::dense(std::move(g));
}

Vec evaluate_mean(const MeanFunction& mu, const Mat& points) {
    Vec m(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) m(i) = mu ? mu(points.row(i).transpose()) : 0.0;
    return m;
}

Vec GPFoldSet::reconstruct() const {
    FoldSet fs{{}, plan, cprime.gram(points), 1, static_cast<int>(points.rows())};
    for (const Vec& f : folds) fs.folds.push_back(f.transpose());
    return gaussfold::reconstruct(fs).row(0).transpose();
}

GPFoldSet gp_decompose(const Vec& x_values, const Mat& points, const OrthogonalPlan& plan,
                       const CovFunction& cprime, std::uint64_t seed) {
    require(x_values.size() == points.rows(), "one process value per index point");
    fold_weights(plan);
    const CovModel sp = cprime.gram(points);
    const FoldSet fs = general_decompose(x_values.transpose(), plan, sp, seed);
    GPFoldSet out{points, {}, plan, cprime};
    for (const Mat& f : fs.folds) out.folds.push_back(f.row(0).transpose());
    return out;
}

GaussianLaw gp_fold_marginal(int k, const OrthogonalPlan& plan, const Mat& points, const MeanFunction& mu,
                             const CovFunction& c, const CovFunction& cprime) {
    const Vec q = fold_weights(plan);
    require(k >= 0 && k < q.size(), "fold index out of range");
    return fold_marginal(q(k), evaluate_mean(mu, points), c.gram(points), cprime.gram(points));
}

GaussianLaw gp_joint_law(const OrthogonalPlan& plan, const Mat& points, const MeanFunction& mu,
                         const CovFunction& c, const CovFunction& cprime) {
    return joint_law(fold_weights(plan), evaluate_mean(mu, points), c.gram(points), cprime.gram(points));
}

ConditionalLaw gp_conditional(const Vec& x1_values, const OrthogonalPlan& plan, const Mat& points,
                              const MeanFunction& mu, const CovFunction& c, const CovFunction& cprime) {
    const Vec q = fold_weights(plan);
    require(q.size() == 2, "conditional process law needs a two-fold plan");
    require(x1_values.size() == points.rows(), "one fold value per index point");
    return conditional_law(x1_values, q(0), q(1), evaluate_mean(mu, points), c.gram(points), cprime.gram(points));
}

}  // namespace gaussfold
