#include "gaussfold/fisher.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace gaussfold;

namespace {

// mu = A theta with a fixed design, Sigma = phi1 I + phi2 11^T.
ParamModel compound_model(int p, const Vec& theta, double phi1, double phi2) {
    ParamModel pm;
    pm.theta = theta;
    pm.phi.resize(2);
    pm.phi << phi1, phi2;
    Mat design(p, theta.size());
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < theta.size(); ++j) design(i, j) = 1.0 / (1.0 + i + j);
    pm.mu_of_theta = [design](const Vec& t) { return Vec(design * t); };
    pm.sigma_of_phi = [p](const Vec& f) {
        return CovModel::dense(f(0) * Mat::Identity(p, p) + f(1) * Mat::Ones(p, p));
    };
    return pm;
}

ParamModel scalar_variance_model(double s2) {
    ParamModel pm;
    pm.phi = Vec::Constant(1, s2);
    pm.mu_of_theta = [](const Vec&) { return Vec(Vec::Zero(1)); };
    pm.sigma_of_phi = [](const Vec& f) { return CovModel::isotropic(f(0), 1); };
    return pm;
}

}  // namespace

TEST_CASE("information shares of row-mixing plans") {
    const Mat perm = [] {
        Mat m = Mat::Zero(5, 5);
        const int order[] = {3, 0, 4, 1, 2};
        for (int i = 0; i < 5; ++i) m(i, order[i]) = 1.0;
        return m;
    }();
    const auto f = fisher_split(perm, {2, 3});
    CHECK(f[0].mean == doctest::Approx(0.4));
    CHECK(f[1].mean == doctest::Approx(0.6));
    CHECK(f[0].cov == doctest::Approx(0.4));

    const auto one = fisher_split(Mat::Identity(3, 3), {3});
    CHECK(one[0].mean == doctest::Approx(1.0));
    CHECK(one[0].cov == doctest::Approx(1.0));

    const OrthogonalPlan ip = make_plan_info_preserving(4, {2, 2}, 9);
    const auto g = fisher_split(ip);
    const Vec ones = Vec::Ones(4);
    Mat reordered(4, 4);
    for (int i = 0; i < 4; ++i) reordered.row(i) = ip.q.row(ip.row_order[static_cast<std::size_t>(i)]);
    CHECK(g[0].mean == doctest::Approx((reordered.topRows(2) * ones).squaredNorm() / 4.0));
    CHECK(g[1].mean == doctest::Approx((reordered.bottomRows(2) * ones).squaredNorm() / 4.0));
    CHECK(g[0].cov == doctest::Approx(0.5));
    CHECK(g[1].cov == doctest::Approx(0.5));
    CHECK(g[0].mean + g[1].mean == doctest::Approx(1.0));
}

TEST_CASE("fission information with matching auxiliary covariance") {
    Vec theta(2);
    theta << 0.5, -1.0;
    const ParamModel pm = compound_model(3, theta, 1.5, 0.4);
    const double q1 = 0.7;
    const FisherReport r = fisher_fission(pm, q1, pm.sigma());
    CHECK((r.i1_theta - q1 * q1 * r.total_theta).norm() < 1e-10);
    CHECK((r.i1_phi - std::pow(q1, 4) * r.total_phi).norm() < 1e-6);
    CHECK((r.i1_theta + r.i2_theta - r.total_theta).norm() < 1e-12);
    CHECK((r.i1_phi + r.i2_phi - r.total_phi).norm() < 1e-12);
    CHECK_FALSE(r.table().empty());
}

TEST_CASE("scalar variance information") {
    const double s2 = 1.7;
    const ParamModel pm = scalar_variance_model(s2);
    const FisherReport r = fisher_fission(pm, std::sqrt(0.5), CovModel::identity(1));
    const double v = s2 / 2 + 0.5;
    CHECK(r.i1_phi(0, 0) == doctest::Approx(0.5 * 0.25 / (v * v)).epsilon(1e-8));
    CHECK(r.total_phi(0, 0) == doctest::Approx(0.5 / (s2 * s2)).epsilon(1e-8));
}

TEST_CASE("thinning share of mean information equals eps") {
    std::mt19937_64 gen(4);
    const CovModel sigma = CovModel::dense(oracle::random_spd(3, gen));
    const ParamModel pm = mean_model(oracle::random_vec(3, gen), sigma);
    for (double eps : {0.2, 0.5, 0.9}) {
        const FisherReport r = fisher_fission(pm, std::sqrt(eps), sigma);
        CHECK((r.i1_theta - eps * r.total_theta).norm() < 1e-10);
    }
}

TEST_CASE("fold-one information matches the empirical score covariance") {
    Vec theta(2);
    theta << 0.3, 0.8;
    const ParamModel pm = compound_model(3, theta, 1.0, 0.5);
    const double q1 = 0.6;
    const Mat sp = 2.0 * Mat::Identity(3, 3);
    const FisherReport r = fisher_fission(pm, q1, CovModel::dense(sp));

    // score of the fold-one density by central differences of a dense log-pdf
    auto logpdf = [&](const Vec& x, const Vec& th) {
        const Vec mu = pm.mu_of_theta(th);
        const Mat cov = q1 * q1 * pm.sigma().materialize() + (1 - q1 * q1) * sp;
        return oracle::mvn_logpdf(x, q1 * mu, cov);
    };
    Rng rng(13);
    const int draws = 10000;
    const CovModel fold_cov = CovModel::dense(q1 * q1 * pm.sigma().materialize() + (1 - q1 * q1) * sp);
    std::vector<Vec> scores;
    for (int d = 0; d < draws; ++d) {
        const Vec x = sample_mvn(q1 * pm.mu(), fold_cov, rng);
        Vec s(2);
        for (int k = 0; k < 2; ++k) {
            Vec tp = theta, tm = theta;
            tp(k) += 1e-5;
            tm(k) -= 1e-5;
            s(k) = (logpdf(x, tp) - logpdf(x, tm)) / 2e-5;
        }
        scores.push_back(s);
    }
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
            std::vector<double> prod;
            for (const Vec& s : scores) prod.push_back(s(j) * s(k));
            const auto m = oracle::moments(prod);
            CHECK(std::abs(m.mean - r.i1_theta(j, k)) < 3.0 * m.se);
        }
}

TEST_CASE("sigma prime tuner") {
    Vec theta(1);
    theta << 0.0;
    const ParamModel pm = compound_model(3, theta, 1.0, 0.3);
    const TuneResult t = tune_sigma_prime(0.5, CovModel::identity(3), pm);
    CHECK(t.converged);
    CHECK(t.q1 == doctest::Approx(std::pow(0.5, 0.25)));
    CHECK(std::abs(t.sigma_prime - 1.0) < 1e-5);

    const std::vector<Mat> d = pm.sigma_derivatives();
    const Mat id = Mat::Identity(3, 3);
    CHECK(tuning_objective(0.99, id, d, 1.0) <= tuning_objective(0.5, id, d, 1.0));
    Vec sd(3);
    sd << 4, 1, 1;
    const Mat s = sd.asDiagonal();
    CHECK(tuning_objective(0.99, s, d, 1.0) < tuning_objective(0.5, s, d, 1.0));
}

TEST_CASE("sigma prime tuner against a dense grid") {
    ParamModel pm;
    pm.theta = Vec::Zero(0);
    pm.phi.resize(3);
    pm.phi << 4.0, 1.0, 0.2;
    pm.mu_of_theta = [](const Vec&) { return Vec(Vec::Zero(2)); };
    pm.sigma_of_phi = [](const Vec& f) {
        Mat m(2, 2);
        m << f(0), f(2), f(2), f(1);
        return CovModel::dense(m);
    };
    Vec sd(2);
    sd << 4, 1;
    const TuneResult t = tune_sigma_prime(0.5, CovModel::diagonal(sd), pm);
    const Mat s = sd.asDiagonal();
    const auto d = pm.sigma_derivatives();
    double best = std::numeric_limits<double>::infinity(), arg = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double c = std::exp(std::log(1e-3) + i * (std::log(1e3) - std::log(1e-3)) / 200000);
        const double f = tuning_objective(0.5, s, d, c);
        if (f < best) {
            best = f;
            arg = c;
        }
    }
    CHECK(std::abs(t.sigma_prime - arg) < 1e-3);
    CHECK(t.objective <= best + 1e-12);
}

TEST_CASE("tuner rejects an empty objective") {
    const ParamModel pm = scalar_variance_model(1.0);
    CHECK_THROWS_AS(tune_sigma_prime(0.5, CovModel::identity(1), pm), InvalidArgument);
    CHECK_NOTHROW(tune_sigma_prime(0.5, CovModel::identity(1), pm, true));
}

TEST_CASE("parameter model checks") {
    ParamModel pm;
    CHECK_THROWS_AS(pm.validate(), InvalidArgument);
    CHECK_THROWS_AS(fisher_fission(mean_model(Vec::Zero(2), CovModel::identity(2)), 1.0, CovModel::identity(2)),
                    InvalidArgument);
}
