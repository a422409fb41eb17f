#pragma once

#include "gaussfold/casestudy.hpp"
#include "gaussfold/decompose.hpp"
#include "gaussfold/fisher.hpp"
#include "gaussfold/laws.hpp"

#include <json.hpp>

namespace gaussfold {

using Json = nlohmann::json;

Json mat_to_json(const Mat& m);  // array of rows
Mat mat_from_json(const Json& j);
Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j);

/// {"kind": "dense" | "diagonal" | "isotropic" | "ar1" | "kronecker", ...}
Json cov_to_json(const CovModel& c);
CovModel cov_from_json(const Json& j, Eigen::Index dim_hint = 0);

Json plan_to_json(const OrthogonalPlan& plan);
OrthogonalPlan plan_from_json(const Json& j);

Json law_to_json(const GaussianLaw& law);
Json law_to_json(const ConditionalLaw& law);

Json report_to_json(const FisherReport& r);
Json curve_to_json(const ValidationCurve& c);

}  // namespace gaussfold
