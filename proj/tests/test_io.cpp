#include "gaussfold/csv.hpp"
#include "gaussfold/serialize.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace gaussfold;

TEST_CASE("csv round trip is exact") {
    std::mt19937_64 gen(1);
    Mat m(3, 2);
    m << oracle::random_vec(3, gen), oracle::random_vec(3, gen);
    m(0, 0) = 1e-300;
    const std::string text = csv::format_matrix(m, {"a", "b"}, {"made by a test"});
    CHECK(text.rfind("# made by a test", 0) == 0);
    const csv::Table t = csv::parse_matrix(text);
    CHECK(t.header == std::vector<std::string>{"a", "b"});
    CHECK(t.values == m);
}

TEST_CASE("csv parsing") {
    const csv::Table t = csv::parse_matrix("# c\n1,2\n\n3,4\n");
    CHECK(t.header.empty());
    CHECK(t.values.rows() == 2);
    CHECK(t.values(1, 0) == 3.0);
    CHECK_THROWS_AS(csv::parse_matrix("1,2\n3\n"), InvalidArgument);
    CHECK_THROWS_AS(csv::parse_matrix("1,x\n"), InvalidArgument);
    CHECK(csv::quote("a,b") == "\"a,b\"");
    CHECK(csv::quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv::quote("plain") == "plain");
}

TEST_CASE("covariance models serialize") {
    std::mt19937_64 gen(2);
    const Mat d = oracle::random_spd(3, gen);
    Vec diag(2);
    diag << 1.5, 2.5;
    for (const CovModel& c : {CovModel::dense(d), CovModel::diagonal(diag), CovModel::isotropic(2.0, 4), CovModel::ar1(0.3, 5),
                              CovModel::kronecker(CovModel::ar1(0.9, 2), CovModel::dense(d))}) {
        const CovModel back = cov_from_json(Json::parse(cov_to_json(c).dump()));
        CHECK(back.kind() == c.kind());
        CHECK(back.materialize() == c.materialize());
    }
    CHECK(cov_from_json(Json{{"kind", "identity"}}, 3).materialize() == Mat::Identity(3, 3));
    CHECK_THROWS_AS(cov_from_json(Json{{"kind", "nope"}}), InvalidArgument);
}

TEST_CASE("plans serialize and replay") {
    Vec q(3);
    q << 0.6, 0.48, 0.64;
    for (const OrthogonalPlan& p : {make_plan_dependent(1, 3, q), make_plan_sample_split(5, {2, 3}, 4),
                                    make_plan_thinning(Vec::Constant(2, 0.5), 3)}) {
        const OrthogonalPlan back = plan_from_json(Json::parse(plan_to_json(p).dump()));
        CHECK(back.q == p.q);
        CHECK(back.interleave == p.interleave);
        CHECK(back.row_order == p.row_order);
        CHECK(back.sizes == p.sizes);
        CHECK(back.kind == p.kind);
        CHECK(back.seed == p.seed);
    }
    Json bad = plan_to_json(make_plan_fission());
    bad["q"][0][0] = 2.0;
    CHECK_THROWS_AS(plan_from_json(bad), InvalidArgument);
}
