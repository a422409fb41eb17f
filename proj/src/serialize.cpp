#include "gaussfold/serialize.hpp"

namespace gaussfold {

Json mat_to_json(const Mat& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Mat mat_from_json(const Json& j) {
    require(j.is_array(), "matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j.at(static_cast<std::size_t>(i));
        require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, "ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

Json vec_to_json(const Vec& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vec vec_from_json(const Json& j) {
    require(j.is_array(), "vector must be an array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

Json cov_to_json(const CovModel& c) {
    switch (c.kind()) {
        case CovModel::Kind::Dense: return {{"kind", "dense"}, {"matrix", mat_to_json(c.dense_matrix())}};
        case CovModel::Kind::Diagonal: return {{"kind", "diagonal"}, {"values", vec_to_json(c.diagonal_values())}};
        case CovModel::Kind::Isotropic:
            return {{"kind", "isotropic"}, {"variance", c.variance()}, {"dim", c.dim()}};
        case CovModel::Kind::AR1: return {{"kind", "ar1"}, {"rho", c.rho()}, {"dim", c.dim()}};
        case CovModel::Kind::Kronecker:
            return {{"kind", "kronecker"}, {"outer", cov_to_json(c.outer())}, {"inner", cov_to_json(c.inner())}};
    }
    return {};
}

CovModel cov_from_json(const Json& j, Eigen::Index dim_hint) {
    require(j.is_object() && j.contains("kind"), "covariance spec needs a \"kind\"");
    const std::string kind = j.at("kind").get<std::string>();
    auto dim = [&]() -> Eigen::Index {
        if (j.contains("dim")) return j.at("dim").get<Eigen::Index>();
        require(dim_hint > 0, "covariance spec needs \"dim\"");
        return dim_hint;
    };
    if (kind == "dense") return CovModel::dense(mat_from_json(j.at("matrix")));
    if (kind == "diagonal") return CovModel::diagonal(vec_from_json(j.at("values")));
    if (kind == "isotropic") return CovModel::isotropic(j.value("variance", 1.0), dim());
    if (kind == "identity") return CovModel::identity(dim());
    if (kind == "ar1") return CovModel::ar1(j.at("rho").get<double>(), dim());
    if (kind == "kronecker") return CovModel::kronecker(cov_from_json(j.at("outer")), cov_from_json(j.at("inner")));
    throw InvalidArgument("unknown covariance kind '" + kind + "'");
}

Json plan_to_json(const OrthogonalPlan& plan) {
    Json j = {{"kind", to_string(plan.kind)}, {"n", plan.n},       {"r", plan.r},
              {"q", mat_to_json(plan.q)},     {"interleave", plan.interleave},
              {"row_order", plan.row_order},  {"sizes", plan.sizes}, {"params", vec_to_json(plan.params)}};
    j["seed"] = plan.seed ? Json(*plan.seed) : Json(nullptr);
    return j;
}

OrthogonalPlan plan_from_json(const Json& j) {
    require(j.is_object(), "plan must be a JSON object");
    OrthogonalPlan plan;
    plan.kind = plan_kind_from_string(j.at("kind").get<std::string>());
    plan.n = j.at("n").get<int>();
    plan.r = j.at("r").get<int>();
    plan.q = mat_from_json(j.at("q"));
    plan.interleave = j.at("interleave").get<std::vector<int>>();
    plan.row_order = j.at("row_order").get<std::vector<int>>();
    plan.sizes = j.at("sizes").get<std::vector<int>>();
    if (j.contains("params")) plan.params = vec_from_json(j.at("params"));
    if (j.contains("seed") && !j.at("seed").is_null()) plan.seed = j.at("seed").get<std::uint64_t>();
    plan.validate();
    return plan;
}

Json law_to_json(const GaussianLaw& law) {
    return {{"mean", vec_to_json(law.mean)}, {"covariance", cov_to_json(law.cov)}};
}

Json law_to_json(const ConditionalLaw& law) {
    return {{"law", law_to_json(law.base)},
            {"conditioning_value", vec_to_json(law.conditioning_value)},
            {"coefficients", {law.coefficients.first, law.coefficients.second}}};
}

Json report_to_json(const FisherReport& r) {
    return {{"q1", r.q1},
            {"theta", {{"fold1", mat_to_json(r.i1_theta)}, {"fold2_given_fold1", mat_to_json(r.i2_theta)},
                       {"total", mat_to_json(r.total_theta)}}},
            {"phi", {{"fold1", mat_to_json(r.i1_phi)}, {"fold2_given_fold1", mat_to_json(r.i2_phi)},
                     {"total", mat_to_json(r.total_phi)}}}};
}

Json curve_to_json(const ValidationCurve& c) {
    Json pts = Json::array();
    for (const CurvePoint& p : c.points)
        pts.push_back({{"h", p.h}, {"cll", p.cll}, {"repaired", p.repaired}, {"large_repair", p.large_repair},
                       {"repair_change", p.repair_change}});
    return {{"h_hat", c.h_hat}, {"points", pts}};
}

}  // namespace gaussfold
