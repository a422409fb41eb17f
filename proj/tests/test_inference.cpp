#include "gaussfold/decompose.hpp"
#include "gaussfold/inference.hpp"
#include "gaussfold/stats.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace gaussfold;

namespace {

struct PairData {
    Mat x, x1, x2;
    double q1, q2;
};

PairData split_pair(const Mat& delta, double rho, int b, double q1, std::uint64_t seed) {
    const int a = static_cast<int>(delta.rows());
    PairData d;
    d.x = sample_matrix_normal(Mat::Zero(a, b), CovModel::dense(delta), CovModel::ar1(rho, b), seed);
    d.q1 = q1;
    d.q2 = std::sqrt(1 - q1 * q1);
    Vec q(2);
    q << d.q1, d.q2;
    const FoldSet fs = general_decompose(vectorize(d.x).transpose(), make_plan_dependent(1, 2, q),
                                         CovModel::identity(a * b), derive_seed(seed, 1));
    d.x1 = reshape_cols(fs.folds[0].row(0).transpose(), a, b);
    d.x2 = reshape_cols(fs.folds[1].row(0).transpose(), a, b);
    return d;
}

}  // namespace

TEST_CASE("sample row covariance") {
    const Mat ones = Mat::Ones(3, 7);
    CHECK((sample_rowcov(ones) - Mat::Ones(3, 3)).norm() < 1e-15);

    Mat delta(2, 2);
    delta << 1, 0.5, 0.5, 1;
    const Mat x = sample_matrix_normal(Mat::Zero(2, 100000), CovModel::dense(delta), CovModel::identity(100000), 3);
    const Mat s = sample_rowcov(x);
    CHECK(std::abs(s(0, 1) - 0.5) < 4.0 * std::sqrt(1.25 / 100000));

    std::vector<int> idx(7);
    for (int i = 0; i < 7; ++i) idx[static_cast<std::size_t>(i)] = (3 * i + 2) % 7;
    Rng rng(4);
    const Mat y = rng.normal_mat(3, 7);
    Mat yp(3, 7);
    for (int i = 0; i < 7; ++i) yp.col(i) = y.col(idx[static_cast<std::size_t>(i)]);
    CHECK((sample_rowcov(y) - sample_rowcov(yp)).norm() < 1e-14);
    CHECK((sample_rowcov(y, true) - sample_rowcov(yp, true)).norm() < 1e-14);
}

TEST_CASE("entry selection") {
    Mat d = Mat::Identity(4, 4);
    d(0, 1) = d(1, 0) = 0.3;
    const SelectionResult s = select_entry(d);
    CHECK(s.i == 0);
    CHECK(s.j == 1);

    Mat eq = Mat::Constant(4, 4, 0.2);
    eq.diagonal().setOnes();
    CHECK(select_entry(eq).i == 0);
    CHECK(select_entry(eq).j == 1);

    std::mt19937_64 gen(5);
    for (int t = 0; t < 20; ++t) {
        Mat r = oracle::random_spd(6, gen);
        int bi = 0, bj = 1;
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                if (std::abs(r(i, j)) > std::abs(r(bi, bj))) {
                    bi = i;
                    bj = j;
                }
        const SelectionResult sr = select_entry(r);
        CHECK(sr.i == bi);
        CHECK(sr.j == bj);
        CHECK(sr.value == r(bi, bj));
    }
}

TEST_CASE("AR(1) eigenpairs") {
    const EigenPair e = ar1_eigen(0.7, 6);
    const Mat g = oracle::ar1_matrix(0.7, 6);
    CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - g).norm() < 1e-10);
    for (int i = 1; i < 6; ++i) CHECK(e.values(i - 1) >= e.values(i));
}

TEST_CASE("likelihood forms against dense Gaussian log-densities") {
    std::mt19937_64 gen(6);
    const int a = 3, b = 5;
    const Mat delta = oracle::random_correlation(a, gen);
    const double rho = 0.6;
    const Mat star = oracle::kron(oracle::ar1_matrix(rho, b), delta);
    const PairData d = split_pair(Mat::Identity(a, a), 0.5, b, 0.7, 8);
    const int p = a * b;

    CHECK(std::abs(KronLikelihood::full(d.x).value(delta, rho) - oracle::mvn_logpdf(vectorize(d.x), Vec::Zero(p), star)) < 1e-9);

    const double s2 = 1.4;
    const Mat marg = d.q2 * d.q2 * star + (1 - d.q2 * d.q2) * s2 * Mat::Identity(p, p);
    CHECK(std::abs(KronLikelihood::marginal(d.x2, d.q2, s2).value(delta, rho) -
                   oracle::mvn_logpdf(vectorize(d.x2), Vec::Zero(p), marg)) < 1e-9);

    Mat joint(2 * p, 2 * p);
    const Mat sp = s2 * Mat::Identity(p, p);
    joint << d.q1 * d.q1 * star + (1 - d.q1 * d.q1) * sp, d.q1 * d.q2 * (star - sp),
             d.q1 * d.q2 * (star - sp), d.q2 * d.q2 * star + (1 - d.q2 * d.q2) * sp;
    const auto c = oracle::condition(Vec::Zero(2 * p), joint, p, vectorize(d.x1));
    CHECK(std::abs(KronLikelihood::conditional(d.x1, d.x2, d.q1, d.q2, s2).value(delta, rho) -
                   oracle::mvn_logpdf(vectorize(d.x2), c.mean, c.cov)) < 1e-9);
}

TEST_CASE("likelihood gradients match finite differences") {
    std::mt19937_64 gen(7);
    const int a = 3, b = 6;
    const Mat delta = oracle::random_correlation(a, gen);
    const double rho = 0.55;
    const PairData d = split_pair(Mat::Identity(a, a), 0.5, b, 0.6, 9);
    for (const KronLikelihood& lik : {KronLikelihood::full(d.x), KronLikelihood::marginal(d.x2, d.q2),
                                      KronLikelihood::conditional(d.x1, d.x2, d.q1, d.q2)}) {
        Mat gd;
        double gr = 0.0;
        lik.value_and_grad(delta, rho, &gd, &gr);
        const double h = 1e-6;
        CHECK(std::abs(gr - (lik.value(delta, rho + h) - lik.value(delta, rho - h)) / (2 * h)) < 1e-5);
        for (int i = 0; i < a; ++i)
            for (int j = 0; j <= i; ++j) {
                Mat e = Mat::Zero(a, a);
                e(i, j) = e(j, i) = h;
                const double fd = (lik.value(delta + e, rho) - lik.value(delta - e, rho)) / (2 * h);
                const double an = i == j ? gd(i, i) : 2.0 * gd(i, j);
                CHECK(std::abs(fd - an) < 1e-5 * std::max(1.0, std::abs(fd)));
            }
    }
}

TEST_CASE("correlation parameterization") {
    std::mt19937_64 gen(8);
    for (int a : {2, 3, 6}) {
        const Mat c = oracle::random_correlation(a, gen);
        const Vec y = params_from_corr(c);
        CHECK(y.size() == corr_param_count(a));
        CHECK((corr_from_params(y, a) - c).cwiseAbs().maxCoeff() < 1e-12);
        const Mat r = corr_from_params(oracle::random_vec(corr_param_count(a), gen), a);
        CHECK((r.diagonal() - Vec::Ones(a)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(r.llt().info() == Eigen::Success);
    }
    const Vec y = oracle::random_vec(corr_param_count(4), gen);
    const Vec g = corr_entry_grad(y, 4, 1, 3);
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        Vec yp = y, ym = y;
        yp(k) += 1e-6;
        ym(k) -= 1e-6;
        const double fd = (corr_from_params(yp, 4)(3, 1) - corr_from_params(ym, 4)(3, 1)) / 2e-6;
        CHECK(std::abs(fd - g(k)) < 1e-7);
    }
}

TEST_CASE("maximum likelihood fit") {
    const int a = 5, b = 200;
    const double rho = 0.5;
    const Mat x = sample_matrix_normal(Mat::Zero(a, b), CovModel::identity(a), CovModel::ar1(rho, b), 10);
    const KronLikelihood lik = KronLikelihood::full(x);
    MatrixNormalModel init{a, b, Mat::Identity(a, a), 0.2};
    const FitResult f = optimize_model(lik, init);
    CHECK(f.converged);
    CHECK(std::abs(f.model.rho - rho) < 0.05);
    CHECK(f.loglik >= lik.value(Mat::Identity(a, a), rho));
    CHECK(f.params.size() == 1 + corr_param_count(a));

    FitOptions pen;
    pen.penalty = 5e5;
    pen.pen_i = 0;
    pen.pen_j = 2;
    const FitResult n = optimize_model(lik, f.model, pen);
    CHECK(std::abs(n.model.delta(0, 2)) < 1e-3);
    CHECK(n.loglik <= f.loglik + 1e-8);
}

TEST_CASE("likelihood ratio tests") {
    const PairData d = split_pair(Mat::Identity(6, 6), 0.8, 40, 0.71, 11);
    const SelectionResult sel = select_entry(sample_rowcov(d.x1));
    for (Method m : {Method::Naive, Method::Marginal, Method::Conditional}) {
        const TestResult t = lrt_test(m, d.x, d.x1, d.x2, d.q1, d.q2, sel);
        CHECK(t.statistic >= 0.0);
        CHECK(t.p_value >= 0.0);
        CHECK(t.p_value <= 1.0);
        CHECK(std::abs(t.null_delta) < 1e-3);
        CHECK(t.p_value == doctest::Approx(chi2_1_sf(t.statistic)));
    }
}

TEST_CASE("test statistic does not depend on row labels") {
    const PairData d = split_pair(Mat::Identity(5, 5), 0.7, 40, 0.71, 12);
    const SelectionResult sel = select_entry(sample_rowcov(d.x1));
    const int perm[] = {4, 2, 0, 3, 1};  // new row r holds old row perm[r]
    auto permute = [&](const Mat& m) {
        Mat out(m.rows(), m.cols());
        for (int r = 0; r < 5; ++r) out.row(r) = m.row(perm[r]);
        return out;
    };
    int inv[5];
    for (int r = 0; r < 5; ++r) inv[perm[r]] = r;
    SelectionResult ps = sel;
    ps.i = std::min(inv[sel.i], inv[sel.j]);
    ps.j = std::max(inv[sel.i], inv[sel.j]);
    const TestResult t0 = lrt_test(Method::Conditional, d.x, d.x1, d.x2, d.q1, d.q2, sel);
    const TestResult t1 = lrt_test(Method::Conditional, permute(d.x), permute(d.x1), permute(d.x2), d.q1, d.q2, ps);
    CHECK(std::abs(t0.statistic - t1.statistic) < 1e-4 * std::max(1.0, t0.statistic));
}

TEST_CASE("method codes") {
    for (Method m : {Method::Naive, Method::Marginal, Method::Conditional}) CHECK(method_from_code(method_code(m)) == m);
    CHECK_THROWS_AS(method_from_code('z'), InvalidArgument);
}

TEST_CASE("simulation rows are ordered and reproducible") {
    SimConfig cfg;
    cfg.a = 4;
    cfg.b = 20;
    cfg.rho = 0.5;
    cfg.q1 = {0.6, 0.8};
    cfg.replicates = 2;
    const auto rows = simulate(cfg);
    REQUIRE(rows.size() == 2 * (1 + 2 * 2));
    CHECK(rows[0].method == Method::Naive);
    CHECK(rows[0].q1 == 1.0);
    CHECK(rows[1].q1 == 0.6);
    CHECK(rows[1].method == Method::Marginal);
    CHECK(rows[2].method == Method::Conditional);
    CHECK(rows[3].q1 == 0.8);
    CHECK(rows[5].replicate == 1);
    CHECK(rows[5].seed == cfg.seed + 1);

    cfg.threads = 2;
    const auto again = simulate(cfg);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].statistic == again[i].statistic);
        CHECK(rows[i].ok == again[i].ok);
    }
    for (const auto& r : rows) CHECK(r.ok);

    cfg.null_setting = false;
    cfg.omega = 0.5;
    const Mat d = setting_delta(cfg);
    CHECK(d(0, 1) == 0.5);
    CHECK(d(2, 3) == 0.0);
}

TEST_CASE("chi-square and Kolmogorov-Smirnov helpers") {
    CHECK(chi2_1_sf(0.0) == 1.0);
    CHECK(chi2_1_sf(3.841458820694124) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(chi2_1_sf(6.634896601021214) == doctest::Approx(0.01).epsilon(1e-12));

    // n = 1: P(D < d) = 2d - 1 for d in [1/2, 1]
    CHECK(ks_cdf(1, 0.75) == doctest::Approx(0.5).epsilon(1e-12));
    std::vector<double> grid;
    for (int i = 0; i < 200; ++i) grid.push_back((i + 0.5) / 200);
    const KsResult even = ks_uniform(grid);
    CHECK(even.statistic == doctest::Approx(0.0025));
    CHECK(even.p_value > 0.99);
    std::vector<double> skew;
    for (int i = 0; i < 200; ++i) skew.push_back(std::pow((i + 0.5) / 200, 3.0));
    CHECK(ks_uniform(skew).p_value < 1e-6);
}
