#include "gaussfold/gp.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace gaussfold;

namespace {

Mat random_points(int n, int d, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Mat t(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) t(i, j) = u(gen);
    return t;
}

Mat se_gram(const Mat& t, double var, double len) {
    Mat g(t.rows(), t.rows());
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.rows(); ++j)
            g(i, j) = var * std::exp(-0.5 * (t.row(i) - t.row(j)).squaredNorm() / (len * len));
    return g;
}

OrthogonalPlan two_fold(double q1) {
    Vec q(2);
    q << q1, std::sqrt(1 - q1 * q1);
    return make_plan_dependent(1, 2, q);
}

}  // namespace

TEST_CASE("kernel gram matrices") {
    std::mt19937_64 gen(1);
    const Mat t = random_points(5, 2, gen);
    CHECK((CovFunction::squared_exponential(1.3, 0.7).gram(t).materialize() - se_gram(t, 1.3, 0.7)).norm() < 1e-14);
    const CovModel wn = CovFunction::white_noise(0.4).gram(t);
    CHECK(wn.kind() == CovModel::Kind::Isotropic);
    CHECK((wn.materialize() - 0.4 * Mat::Identity(5, 5)).norm() == 0.0);
    const CovFunction m = CovFunction::matern32(2.0, 1.0);
    const Vec a = t.row(0).transpose(), b = t.row(1).transpose();
    const double r = std::sqrt(3.0) * (a - b).norm();
    CHECK(m(a, b) == doctest::Approx(2.0 * (1 + r) * std::exp(-r)));

    Mat dup(2, 1);
    dup << 0.5, 0.5;
    CHECK_THROWS_AS(CovFunction::white_noise(1.0).gram(dup), InvalidArgument);
}

TEST_CASE("single-fold process decomposition is the identity") {
    std::mt19937_64 gen(2);
    const Mat t = random_points(4, 1, gen);
    const Vec x = oracle::random_vec(4, gen);
    const GPFoldSet fs = gp_decompose(x, t, make_plan_thinning(Vec::Ones(1)), CovFunction::white_noise(1.0), 3);
    CHECK((fs.folds[0] - x).norm() == 0.0);
    CHECK((fs.reconstruct() - x).norm() < 1e-14);
}

TEST_CASE("process decomposition reduces to the finite-dimensional one") {
    std::mt19937_64 gen(3);
    const Mat t = random_points(5, 2, gen);
    const Vec x = oracle::random_vec(5, gen);
    const CovFunction cp = CovFunction::squared_exponential(0.5, 1.2);
    const OrthogonalPlan plan = two_fold(0.7);
    const GPFoldSet g = gp_decompose(x, t, plan, cp, 21);
    const FoldSet f = general_decompose(x.transpose(), plan, CovModel::dense(se_gram(t, 0.5, 1.2)), 21);
    CHECK((g.folds[0] - f.folds[0].row(0).transpose()).norm() < 1e-12);
    CHECK((g.folds[1] - f.folds[1].row(0).transpose()).norm() < 1e-12);
    CHECK((g.reconstruct() - x).norm() < 1e-12);
}

TEST_CASE("thinning a process with its own covariance gives independent folds") {
    std::mt19937_64 gen(4);
    const Mat t = random_points(3, 1, gen);
    const CovFunction c = CovFunction::squared_exponential(1.0, 0.8);
    const Mat g = c.gram(t).materialize();
    Vec eps(2);
    eps << 0.3, 0.7;
    const OrthogonalPlan plan = make_plan_thinning(eps);
    Rng rng(9);
    const int reps = 10000;
    std::vector<double> cross, m0;
    for (int r = 0; r < reps; ++r) {
        const Vec x = Vec::Constant(3, 2.0) + CovFactor(CovModel::dense(g)).apply(rng.normal_vec(3));
        const GPFoldSet fs = gp_decompose(x, t, plan, c, derive_seed(9, r));
        cross.push_back((fs.folds[0](0) - std::sqrt(0.3) * 2.0) * (fs.folds[1](1) - std::sqrt(0.7) * 2.0));
        m0.push_back(fs.folds[0](2));
    }
    const auto mc = oracle::moments(cross), mm = oracle::moments(m0);
    CHECK(std::abs(mc.mean) < 4.0 * mc.se);
    CHECK(std::abs(mm.mean - std::sqrt(0.3) * 2.0) < 4.0 * mm.se);
}

TEST_CASE("process marginals") {
    std::mt19937_64 gen(5);
    const Mat t = random_points(4, 1, gen);
    const CovFunction c = CovFunction::squared_exponential(1.5, 0.9);
    const MeanFunction mu = [](const Vec& v) { return std::sin(v(0)); };
    const Vec m = evaluate_mean(mu, t);

    Vec e(2);
    e << 1, 0;
    const GaussianLaw one = gp_fold_marginal(0, make_plan_dependent(1, 2, e), t, mu, c, CovFunction::white_noise(1.0));
    CHECK((one.cov.materialize() - c.gram(t).materialize()).norm() < 1e-14);
    CHECK((one.mean - m).norm() < 1e-15);

    const double q = 0.6;
    const GaussianLaw w = gp_fold_marginal(0, two_fold(q), t, mu, c, CovFunction::white_noise(0.3));
    CHECK((w.cov.materialize() - (q * q * c.gram(t).materialize() + (1 - q * q) * 0.3 * Mat::Identity(4, 4))).norm() < 1e-14);
    const GaussianLaw f = fold_marginal(q, m, c.gram(t), CovModel::isotropic(0.3, 4));
    CHECK((w.cov.materialize() - f.cov.materialize()).norm() < 1e-15);
    CHECK((w.mean - f.mean).norm() < 1e-15);
}

TEST_CASE("process conditionals") {
    std::mt19937_64 gen(6);
    const CovFunction c = CovFunction::squared_exponential(1.0, 1.0);
    const MeanFunction zero;
    Mat t1(1, 1);
    t1 << 0.3;
    Vec x1(1);
    x1 << 0.8;
    const double q1 = 0.6, q2 = 0.8, sp = 0.5;
    const ConditionalLaw cl = gp_conditional(x1, two_fold(q1), t1, zero, c, CovFunction::white_noise(sp));
    // scalar plug-in: variance 1, auxiliary variance sp
    const double v1 = q1 * q1 + (1 - q1 * q1) * sp;
    const double cov12 = q1 * q2 * (1 - sp);
    CHECK(cl.base.mean(0) == doctest::Approx(cov12 / v1 * 0.8).epsilon(1e-14));
    CHECK(cl.base.cov.materialize()(0, 0) ==
          doctest::Approx(q2 * q2 + (1 - q2 * q2) * sp - cov12 * cov12 / v1).epsilon(1e-14));

    const Mat t = random_points(5, 1, gen);
    const Vec a = oracle::random_vec(5, gen), b = oracle::random_vec(5, gen);
    const ConditionalLaw same1 = gp_conditional(a, two_fold(q1), t, zero, c, c);
    const ConditionalLaw same2 = gp_conditional(b, two_fold(q1), t, zero, c, c);
    CHECK((same1.base.mean - same2.base.mean).norm() < 1e-10);

    const CovFunction cp = CovFunction::white_noise(0.7);
    const GaussianLaw joint = gp_joint_law(two_fold(q1), t, zero, c, cp);
    const GaussianLaw marg = gp_fold_marginal(0, two_fold(q1), t, zero, c, cp);
    const ConditionalLaw cond = gp_conditional(a, two_fold(q1), t, zero, c, cp);
    Vec ab(10);
    ab << a, b;
    // a smooth kernel on nearby points is badly conditioned, so compare relative to the joint value
    const double lj = log_density(joint, ab);
    CHECK(std::abs(lj - log_density(marg, a) - log_density(cond, b)) < 1e-9 * std::max(1.0, std::abs(lj)));
}
