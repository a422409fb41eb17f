#include "gaussfold/laws.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace gaussfold {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_pair(const Vec& mu, const CovModel& sigma, const CovModel& sigma_prime) {
    require(sigma.dim() == mu.size(), "Sigma dimension must match mu");
    require(sigma_prime.dim() == mu.size(), "Sigma' dimension must match mu");
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

GaussianLaw joint_law(const Vec& q_col, const Vec& mu, const CovModel& sigma, const CovModel& sigma_prime) {
    check_pair(mu, sigma, sigma_prime);
    require(q_col.size() >= 1 && std::abs(q_col.norm() - 1.0) <= 1e-10, "q_col must have unit norm");
    const Eigen::Index k = q_col.size(), p = mu.size();
    const Mat s = sigma.materialize();
    const Mat sp = sigma_prime.materialize();
    Vec mean(k * p);
    Mat cov(k * p, k * p);
    for (Eigen::Index i = 0; i < k; ++i) {
        mean.segment(i * p, p) = q_col(i) * mu;
        for (Eigen::Index j = 0; j < k; ++j) {
            const double qq = q_col(i) * q_col(j);
            cov.block(i * p, j * p, p, p) = qq * s + ((i == j ? 1.0 : 0.0) - qq) * sp;
        }
    }
    return {std::move(mean), CovModel::dense(sym(cov))};
}

GaussianLaw fold_marginal(double q, const Vec& mu, const CovModel& sigma, const CovModel& sigma_prime) {
    check_pair(mu, sigma, sigma_prime);
    require(std::isfinite(q) && std::abs(q) <= 1.0, "fold weight must satisfy |q| <= 1");
    const double q2 = q * q;
    if (q2 == 1.0) return {q * mu, sigma};
    if (q2 == 0.0) return {Vec::Zero(mu.size()), sigma_prime};
    double vs = 0.0, vp = 0.0;
    if (sigma.is_isotropic(&vs) && sigma_prime.is_isotropic(&vp))
        return {q * mu, CovModel::isotropic(q2 * vs + (1.0 - q2) * vp, mu.size())};
    if (sigma.is_diagonal() && sigma_prime.is_diagonal())
        return {q * mu, CovModel::diagonal(q2 * sigma.diagonal() + (1.0 - q2) * sigma_prime.diagonal())};
    return {q * mu, CovModel::dense(q2 * sigma.materialize() + (1.0 - q2) * sigma_prime.materialize())};
}

ConditionalLaw conditional_law(const Vec& x1, double q1, double q2, const Vec& mu, const CovModel& sigma,
                               const CovModel& sigma_prime) {
    check_pair(mu, sigma, sigma_prime);
    require(x1.size() == mu.size(), "conditioning value dimension must match mu");
    require(std::abs(q1 * q1 + q2 * q2 - 1.0) <= 1e-10, "two-fold weights need q1^2 + q2^2 = 1");
    const Mat s = sigma.materialize();
    const Mat sp = sigma_prime.materialize();
    const Mat d = q1 * q1 * s + (1.0 - q1 * q1) * sp;
    const Mat diff = s - sp;
    const auto llt = cholesky_with_jitter(d, "q1^2 Sigma + (1 - q1^2) Sigma'");
    const Vec mean = q2 * mu + q1 * q2 * diff * llt.solve(x1 - q1 * mu);
    const Mat cov = q2 * q2 * s + (1.0 - q2 * q2) * sp - q1 * q1 * q2 * q2 * diff * llt.solve(diff);
    return {{mean, CovModel::dense(sym(cov))}, x1, {q1, q2}};
}

GaussianLaw CollapsedFolds::joint_law(const Vec& mu, const CovModel& sigma, const CovModel& sigma_prime) const {
    check_pair(mu, sigma, sigma_prime);
    const Eigen::Index p = mu.size();
    const Mat s = sigma.materialize();
    const Mat sp = sigma_prime.materialize();
    Vec mean(2 * p);
    mean << d_a * mu, d_b * mu;
    Mat cov(2 * p, 2 * p);
    cov.topLeftCorner(p, p) = d_a * d_a * s + d_a * (1.0 - d_a) * sp;
    cov.bottomRightCorner(p, p) = d_b * d_b * s + d_b * (1.0 - d_b) * sp;
    cov.topRightCorner(p, p) = d_a * d_b * (s - sp);
    cov.bottomLeftCorner(p, p) = d_a * d_b * (s - sp);
    return {std::move(mean), CovModel::dense(sym(cov))};
}

ConditionalLaw CollapsedFolds::conditional_law(const Vec& mu, const CovModel& sigma,
                                               const CovModel& sigma_prime) const {
    check_pair(mu, sigma, sigma_prime);
    require(x_a.size() == mu.size(), "collapsed vectors do not match mu");
    const Mat s = sigma.materialize();
    const Mat sp = sigma_prime.materialize();
    if (d_a == 0.0) {
        // empty conditioning group: plain marginal of x_B
        return {{d_b * mu, CovModel::dense(sym(d_b * d_b * s + d_b * (1.0 - d_b) * sp))}, x_a, {d_a, d_b}};
    }
    const Mat diff = s - sp;
    const auto llt = cholesky_with_jitter(d_a * s + (1.0 - d_a) * sp, "d_A Sigma + (1 - d_A) Sigma'");
    const Vec mean = d_b * mu + d_b * diff * llt.solve(x_a - d_a * mu);
    const Mat cov = d_b * d_b * s + d_b * (1.0 - d_b) * sp - d_a * d_b * d_b * diff * llt.solve(diff);
    return {{mean, CovModel::dense(sym(cov))}, x_a, {d_a, d_b}};
}

CollapsedFolds collapse(const FoldSet& fs, const std::vector<int>& a, const std::vector<int>& b) {
    require(fs.n == 1, "collapse is defined for single-observation fold sets");
    const int k = fs.plan.folds();
    for (int s : fs.plan.sizes) require(s == 1, "collapse needs one row per fold");
    std::set<int> seen;
    for (int i : a) {
        require(i >= 0 && i < k, "fold index out of range in A");
        require(seen.insert(i).second, "fold index repeated in A");
    }
    std::set<int> seen_b;
    for (int i : b) {
        require(i >= 0 && i < k, "fold index out of range in B");
        require(seen_b.insert(i).second, "fold index repeated in B");
        require(!seen.count(i), "fold groups A and B overlap");
    }
    const Vec q = fs.plan.data_column();
    CollapsedFolds out{Vec::Zero(fs.p), Vec::Zero(fs.p), 0.0, 0.0};
    auto add = [&](int fold, Vec& x, double& d) {
        const double w = q(fs.plan.fold_rows(fold).front());
        x += w * fs.folds[static_cast<std::size_t>(fold)].row(0).transpose();
        d += w * w;
    };
    for (int i : a) add(i, out.x_a, out.d_a);
    for (int i : b) add(i, out.x_b, out.d_b);
    return out;
}

double log_density(const GaussianLaw& law, const Vec& x) {
    require(x.size() == law.dim() && law.cov.dim() == law.dim(), "log_density dimension mismatch");
    const CovFactor f(law.cov);
    const Vec z = f.whiten(x - law.mean);
    return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + f.log_det() + z.squaredNorm());
}

double log_density(const ConditionalLaw& law, const Vec& x) { return log_density(law.base, x); }

PairLogDensity fast_log_density_pair(const Vec& x1, const Vec& x2, const Vec& mu, const SpectralBasis& basis,
                                     double sigma_prime_sq, double q1, double q2) {
    const Eigen::Index p = basis.dim();
    require(x1.size() == p && x2.size() == p && mu.size() == p, "fast path dimension mismatch");
    require(sigma_prime_sq > 0.0, "sigma'^2 must be positive");
    require(std::abs(q1 * q1 + q2 * q2 - 1.0) <= 1e-10, "two-fold weights need q1^2 + q2^2 = 1");
    const Vec& lam = basis.values();
    const Vec rmu = basis.rotate(mu);
    const Vec t = basis.rotate(x1) - q1 * rmu;
    const Vec r2 = basis.rotate(x2) - q2 * rmu;
    const double c = 1.0 - q1 * q1;
    PairLogDensity out;
    for (Eigen::Index k = 0; k < p; ++k) {
        const double d = q1 * q1 * lam(k) + c * sigma_prime_sq;  // fold-one variance
        const double g = q1 * q2 * (lam(k) - sigma_prime_sq) / d;
        const double h = sigma_prime_sq * lam(k) / d;             // conditional variance
        const double e = r2(k) - g * t(k);
        out.first += std::log(d) + t(k) * t(k) / d;
        out.second_given += std::log(h) + e * e / h;
    }
    out.first = -0.5 * (static_cast<double>(p) * kLog2Pi + out.first);
    out.second_given = -0.5 * (static_cast<double>(p) * kLog2Pi + out.second_given);
    return out;
}

PairLogDensity fast_log_density_pair(const Vec& x1, const Vec& x2, const Vec& mu, const CovModel& sigma_star,
                                     double sigma_prime_sq, double q1, double q2) {
    const SpectralBasis basis(sigma_star);
    if ((basis.values().array() <= 0.0).any())
        throw NumericalError("candidate covariance is not positive definite");
    return fast_log_density_pair(x1, x2, mu, basis, sigma_prime_sq, q1, q2);
}

PairLogDensity dense_log_density_pair(const Vec& x1, const Vec& x2, const Vec& mu, const CovModel& sigma,
                                      const CovModel& sigma_prime, double q1, double q2) {
    PairLogDensity out;
    out.first = log_density(fold_marginal(q1, mu, sigma, sigma_prime), x1);
    out.second_given = log_density(conditional_law(x1, q1, q2, mu, sigma, sigma_prime), x2);
    return out;
}

GaussianLaw LatentForm::marginal() const {
    const Eigen::Index p = latent.dim();
    Mat cov = emission_scale * emission_scale * latent.cov.materialize();
    cov.diagonal() += emission_variances;
    if (latent.cov.is_diagonal())
        return {emission_scale * latent.mean, CovModel::diagonal(cov.diagonal())};
    (void)p;
    return {emission_scale * latent.mean, CovModel::dense(cov)};
}

LatentForm latent_form(double q1, const Vec& mu, const CovModel& sigma, const Vec& sigma_prime_diag) {
    require(sigma.dim() == mu.size() && sigma_prime_diag.size() == mu.size(), "latent form dimension mismatch");
    require(std::isfinite(q1) && std::abs(q1) <= 1.0, "q1 must satisfy |q1| <= 1");
    require((sigma_prime_diag.array() > 0.0).all(), "Sigma' must be diagonal with positive entries");
    LatentForm out{q1, (1.0 - q1 * q1) * sigma_prime_diag, {mu, sigma}, false, false};
    out.degenerate = (1.0 - q1 * q1) == 0.0;
    out.isotropic = (sigma_prime_diag.array() == sigma_prime_diag(0)).all();
    return out;
}

}  // namespace gaussfold
