#include "gaussfold/decompose.hpp"
#include "gaussfold/laws.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace gaussfold;

namespace {

Mat gaussian_data(int n, int p, std::uint64_t seed) {
    Rng rng(seed);
    return rng.normal_mat(n, p);
}

}  // namespace

TEST_CASE("identity plan returns the data") {
    const Mat x = gaussian_data(3, 2, 1);
    const OrthogonalPlan plan = make_plan_custom(Mat::Identity(3, 3), 3, {3});
    const FoldSet fs = general_decompose(x, plan, CovModel::identity(2), 5);
    REQUIRE(fs.folds.size() == 1);
    CHECK(fs.folds[0] == x);
    CHECK(reconstruct(fs) == x);
}

TEST_CASE("fission folds are (X + W)/sqrt2 and (X - W)/sqrt2") {
    const Mat x = gaussian_data(1, 4, 2);
    const FoldSet fs = general_decompose(x, make_plan_fission(), CovModel::isotropic(4.0, 4), 17);
    const double s = std::sqrt(2.0);
    const Mat w = (fs.folds[0] - fs.folds[1]) / s;
    CHECK(((fs.folds[0] + fs.folds[1]) / s - x).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((fs.folds[0] - (x + w) / s).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((reconstruct(fs) - x).cwiseAbs().maxCoeff() < 1e-14);

    // W carries the auxiliary covariance: variance 4 per coordinate
    std::vector<double> sq;
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        const FoldSet f = general_decompose(x, make_plan_fission(), CovModel::isotropic(4.0, 4), seed);
        sq.push_back(((f.folds[0] - f.folds[1]) / s)(0, 1) * ((f.folds[0] - f.folds[1]) / s)(0, 1));
    }
    const auto m = oracle::moments(sq);
    CHECK(std::abs(m.mean - 4.0) < 4.0 * m.se);
}

TEST_CASE("thinning plans") {
    Vec eps(2);
    eps << 0.5, 0.5;
    const OrthogonalPlan plan = make_plan_thinning(eps);
    CHECK(std::abs(plan.q(0, 0) - 1 / std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(plan.q(1, 0) - 1 / std::sqrt(2.0)) < 1e-15);
    CHECK((plan.q.transpose() * plan.q - Mat::Identity(2, 2)).norm() < 1e-14);

    const OrthogonalPlan one = make_plan_thinning(Vec::Ones(1));
    CHECK(one.q.size() == 1);
    CHECK(one.q(0, 0) == 1.0);
    const Mat x = gaussian_data(1, 3, 3);
    CHECK(general_decompose(x, one, CovModel::identity(3), 1).folds[0] == x);

    Vec e3(3);
    e3 << 0.2, 0.3, 0.5;
    const OrthogonalPlan multi = make_plan_thinning(e3, 4);
    CHECK(multi.n == 4);
    CHECK(multi.r == 8);
    const Mat xm = gaussian_data(4, 2, 4);
    const FoldSet fs = general_decompose(xm, multi, CovModel::identity(2), 9);
    CHECK(fs.folds.size() == 3);
    CHECK(fs.folds[0].rows() == 4);
    CHECK((reconstruct(fs) - xm).cwiseAbs().maxCoeff() < 1e-12);

    Vec bad(2);
    bad << 0.5, 0.6;
    CHECK_THROWS_AS(make_plan_thinning(bad), InvalidArgument);
}

TEST_CASE("thinning with known covariance gives independent scaled folds") {
    std::mt19937_64 gen(21);
    const Mat sigma = oracle::random_spd(2, gen);
    Vec mu(2);
    mu << 1.0, -2.0;
    Vec eps(2);
    eps << 0.25, 0.75;
    const OrthogonalPlan plan = make_plan_thinning(eps);
    Rng rng(5);
    const int reps = 10000;
    std::vector<double> f1, f2, cross;
    for (int r = 0; r < reps; ++r) {
        const Vec x = sample_mvn(mu, CovModel::dense(sigma), rng);
        const FoldSet fs = general_decompose(x.transpose(), plan, CovModel::dense(sigma), derive_seed(5, r));
        f1.push_back(fs.folds[0](0, 0));
        f2.push_back(fs.folds[1](0, 1));
        cross.push_back((fs.folds[0](0, 0) - std::sqrt(eps(0)) * mu(0)) * (fs.folds[1](0, 1) - std::sqrt(eps(1)) * mu(1)));
    }
    const auto m1 = oracle::moments(f1), m2 = oracle::moments(f2), mc = oracle::moments(cross);
    CHECK(std::abs(m1.mean - 0.5 * mu(0)) < 4.0 * m1.se);
    CHECK(std::abs(m2.mean - std::sqrt(0.75) * mu(1)) < 4.0 * m2.se);
    CHECK(std::abs(mc.mean) < 4.0 * mc.se);
}

TEST_CASE("sample splitting permutes rows") {
    int identity_count = 0;
    const int seeds = 10000;
    for (int s = 0; s < seeds; ++s) {
        const OrthogonalPlan plan = make_plan_sample_split(2, {1, 1}, static_cast<std::uint64_t>(s));
        if (plan.q(0, 0) == 1.0) ++identity_count;
        else CHECK(plan.q(0, 1) == 1.0);
    }
    const double f = static_cast<double>(identity_count) / seeds;
    CHECK(std::abs(f - 0.5) < 3.0 * std::sqrt(0.25 / seeds));

    const Mat x = gaussian_data(3, 2, 6);
    const OrthogonalPlan all = make_plan_sample_split(3, {3}, 8);
    const FoldSet fs = general_decompose(x, all, CovModel::identity(2), 0);
    CHECK(reconstruct(fs) == x);
    for (int i = 0; i < 3; ++i) {
        bool found = false;
        for (int j = 0; j < 3; ++j) found = found || fs.folds[0].row(i) == x.row(j);
        CHECK(found);
    }
}

TEST_CASE("information-preserving plans fix the ones vector") {
    const OrthogonalPlan plan = make_plan_info_preserving(5, {2, 3}, 4);
    CHECK((plan.q * Vec::Ones(5) - Vec::Ones(5)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((plan.q.transpose() * plan.q - Mat::Identity(5, 5)).norm() < 1e-12);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const OrthogonalPlan two = make_plan_info_preserving(2, {1, 1}, s);
        CHECK((two.q * Vec::Ones(2) - Vec::Ones(2)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((two.q.transpose() * two.q - Mat::Identity(2, 2)).norm() < 1e-12);
    }
    CHECK_THROWS_AS(make_plan_info_preserving(1, {1}, 0), ImpossibleDecomposition);
}

TEST_CASE("dependent plan from a weight column") {
    const double q1 = std::pow(0.5, 0.25);
    const double q2 = std::sqrt(1.0 - std::sqrt(0.5));
    Vec q(2);
    q << q1, q2;
    const OrthogonalPlan plan = make_plan_dependent(1, 2, q);
    Mat expected(2, 2);
    expected << q1, q2, q2, -q1;
    CHECK((plan.q - expected).cwiseAbs().maxCoeff() < 1e-14);

    Vec e(3);
    e << 1, 0, 0;
    const Mat x = gaussian_data(1, 2, 10);
    const FoldSet fs = general_decompose(x, make_plan_dependent(1, 3, e), CovModel::identity(2), 3);
    CHECK((fs.folds[0] - x).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(make_plan_dependent(1, 2, Vec::Ones(2)), InvalidArgument);
}

TEST_CASE("dependent folds follow the joint law empirically") {
    std::mt19937_64 gen(31);
    const Mat sigma = oracle::random_spd(2, gen);
    const Mat sp = 0.5 * Mat::Identity(2, 2);
    Vec q(2);
    q << 0.6, 0.8;
    const OrthogonalPlan plan = make_plan_dependent(1, 2, q);
    Rng rng(77);
    const int reps = 20000;
    Mat acc = Mat::Zero(4, 4);
    for (int r = 0; r < reps; ++r) {
        const Vec x = sample_mvn(Vec::Zero(2), CovModel::dense(sigma), rng);
        const FoldSet fs = general_decompose(x.transpose(), plan, CovModel::dense(sp), derive_seed(77, r));
        Vec v(4);
        v << fs.folds[0].row(0).transpose(), fs.folds[1].row(0).transpose();
        acc += v * v.transpose();
    }
    acc /= reps;
    const Mat truth = joint_law(q, Vec::Zero(2), CovModel::dense(sigma), CovModel::dense(sp)).cov.materialize();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double se = std::sqrt((truth(i, i) * truth(j, j) + truth(i, j) * truth(i, j)) / reps);
            CHECK(std::abs(acc(i, j) - truth(i, j)) < 4.0 * se);
        }
}

TEST_CASE("gamma dirichlet thinning") {
    Vec one(1);
    one << 1.0;
    CHECK(gamma_dirichlet_thin(3.0, 1.0, one, 0)(0) == 4.0);

    Vec eps(3);
    eps << 0.2, 0.3, 0.5;
    const Vec f = gamma_dirichlet_thin(2.5, 0.5, eps, 4);
    CHECK(std::abs(f.sum() - 4.0) < 1e-12);
    CHECK((f.array() >= 0.0).all());

    Vec half(2);
    half << 0.5, 0.5;
    Rng rng(12);
    const double sigma2 = 2.0;
    std::vector<double> first;
    for (int r = 0; r < 100000; ++r) {
        const double x = std::sqrt(sigma2) * rng.normal();
        first.push_back(gamma_dirichlet_thin(x, 0.0, half, derive_seed(12, r))(0));
    }
    const auto m = oracle::moments(first);
    CHECK(std::abs(m.mean - sigma2 / 2.0) < 3.0 * m.se);
}

TEST_CASE("independent split requests") {
    CHECK_THROWS_AS(plan_independent(1, 3, 2, false, 0), ImpossibleDecomposition);
    CHECK_THROWS_AS(plan_independent(1, 1, 2, false, 0), InvalidArgument);
    CHECK(plan_independent(1, 3, 2, true, 0).kind == PlanKind::Thinning);
    CHECK(plan_independent(6, 3, 2, false, 0).kind == PlanKind::InfoPreserving);
    try {
        plan_independent(1, 4, 2, false, 0);
        FAIL("expected an exception");
    } catch (const ImpossibleDecomposition& e) {
        CHECK(std::string(e.what()).find("dependent plan") != std::string::npos);
    }
}

TEST_CASE("plan validation") {
    Mat q(2, 2);
    q << 1, 1, 0, 1;
    CHECK_THROWS_AS(make_plan_custom(q, 1, {1, 1}), InvalidArgument);
    CHECK_THROWS_AS(make_plan_custom(Mat::Identity(2, 2), 2, {1}), InvalidArgument);
    CHECK_THROWS_AS(general_decompose(gaussian_data(2, 2, 1), make_plan_fission(), CovModel::identity(2), 0),
                    InvalidArgument);
}

TEST_CASE("plan kind names round trip") {
    for (PlanKind k : {PlanKind::SampleSplit, PlanKind::Thinning, PlanKind::Fission, PlanKind::InfoPreserving,
                       PlanKind::Dependent, PlanKind::Block, PlanKind::Custom})
        CHECK(plan_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(plan_kind_from_string("nope"), InvalidArgument);
}
