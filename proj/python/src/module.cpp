#include "gaussfold/casestudy.hpp"
#include "gaussfold/decompose.hpp"
#include "gaussfold/fisher.hpp"
#include "gaussfold/gp.hpp"
#include "gaussfold/inference.hpp"
#include "gaussfold/laws.hpp"
#include "gaussfold/serialize.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace gaussfold;
using namespace pybind11::literals;

namespace {

py::dict replicate_dict(const ReplicateRow& r) {
    return py::dict("replicate"_a = r.replicate, "seed"_a = r.seed, "omega"_a = r.omega,
                    "method"_a = std::string(1, method_code(r.method)), "q1"_a = r.q1, "sel_i"_a = r.sel_i,
                    "sel_j"_a = r.sel_j, "detected"_a = r.detected, "statistic"_a = r.statistic,
                    "p_value"_a = r.p_value, "ok"_a = r.ok, "error"_a = r.error, "converged"_a = r.converged);
}

py::dict curve_dict(const ValidationCurve& c) {
    py::list h, cll, repaired;
    for (const auto& pt : c.points) {
        h.append(pt.h);
        cll.append(pt.cll);
        repaired.append(pt.repaired);
    }
    return py::dict("h"_a = h, "cll"_a = cll, "repaired"_a = repaired, "h_hat"_a = c.h_hat);
}

}  // namespace

PYBIND11_MODULE(_gaussfold, m) {
    m.doc() = "Gaussian fold decomposition: splitting, fold laws, Fisher information, inference";
    m.attr("__version__") = GAUSSFOLD_VERSION;

    auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<ImpossibleDecomposition>(m, "ImpossibleDecomposition", invalid.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<CovModel>(m, "CovModel")
        .def_static("dense", &CovModel::dense, "m"_a)
        .def_static("diagonal", py::overload_cast<Vec>(&CovModel::diagonal), "d"_a)
        .def_static("isotropic", &CovModel::isotropic, "variance"_a, "dim"_a)
        .def_static("identity", &CovModel::identity, "dim"_a)
        .def_static("ar1", &CovModel::ar1, "rho"_a, "dim"_a)
        .def_static("kronecker", &CovModel::kronecker, "outer"_a, "inner"_a)
        .def_property_readonly("dim", &CovModel::dim)
        .def("materialize", &CovModel::materialize)
        .def("to_json", [](const CovModel& c) { return cov_to_json(c).dump(); })
        .def("__repr__", [](const CovModel& c) { return "CovModel(" + cov_to_json(c).dump() + ")"; });

    // plans and decomposition
    py::class_<OrthogonalPlan>(m, "OrthogonalPlan")
        .def_readonly("q", &OrthogonalPlan::q)
        .def_readonly("n", &OrthogonalPlan::n)
        .def_readonly("r", &OrthogonalPlan::r)
        .def_readonly("sizes", &OrthogonalPlan::sizes)
        .def_readonly("interleave", &OrthogonalPlan::interleave)
        .def_readonly("row_order", &OrthogonalPlan::row_order)
        .def_property_readonly("kind", [](const OrthogonalPlan& p) { return to_string(p.kind); })
        .def_property_readonly("folds", &OrthogonalPlan::folds)
        .def("to_json", [](const OrthogonalPlan& p) { return plan_to_json(p).dump(); })
        .def_static("from_json", [](const std::string& s) { return plan_from_json(Json::parse(s)); });

    m.def("make_plan_custom", &make_plan_custom, "q"_a, "n"_a, "sizes"_a, "interleave"_a = std::vector<int>{},
          "row_order"_a = std::vector<int>{});
    m.def("make_plan_sample_split", &make_plan_sample_split, "n"_a, "sizes"_a, "seed"_a);
    m.def("make_plan_thinning", &make_plan_thinning, "eps"_a, "n"_a = 1);
    m.def("make_plan_info_preserving", &make_plan_info_preserving, "n"_a, "sizes"_a, "seed"_a);
    m.def("make_plan_dependent", &make_plan_dependent, "n"_a, "k"_a, "q_col"_a, "seed"_a = 0);
    m.def("make_plan_fission", &make_plan_fission, "n"_a = 1);
    m.def("plan_independent", &plan_independent, "n"_a, "p"_a, "k"_a, "covariance_known"_a, "seed"_a);

    py::class_<FoldSet>(m, "FoldSet")
        .def_readonly("folds", &FoldSet::folds)
        .def_readonly("plan", &FoldSet::plan)
        .def_readonly("sigma_prime", &FoldSet::sigma_prime)
        .def_readonly("n", &FoldSet::n)
        .def_readonly("p", &FoldSet::p)
        .def("stacked", &FoldSet::stacked);
    m.def("general_decompose", &general_decompose, "x"_a, "plan"_a, "sigma_prime"_a, "seed"_a);
    m.def("reconstruct", &reconstruct, "folds"_a);
    m.def("gamma_dirichlet_thin", &gamma_dirichlet_thin, "x"_a, "mu"_a, "eps"_a, "seed"_a);

    // fold laws
    py::class_<GaussianLaw>(m, "GaussianLaw")
        .def_readonly("mean", &GaussianLaw::mean)
        .def_readonly("cov", &GaussianLaw::cov)
        .def("log_density", [](const GaussianLaw& l, const Vec& x) { return log_density(l, x); });
    py::class_<ConditionalLaw>(m, "ConditionalLaw")
        .def_readonly("base", &ConditionalLaw::base)
        .def_property_readonly("mean", [](const ConditionalLaw& l) { return l.base.mean; })
        .def_property_readonly("cov", [](const ConditionalLaw& l) { return l.base.cov; })
        .def("log_density", [](const ConditionalLaw& l, const Vec& x) { return log_density(l, x); });
    m.def("joint_law", &joint_law, "q_col"_a, "mu"_a, "sigma"_a, "sigma_prime"_a);
    m.def("fold_marginal", &fold_marginal, "q"_a, "mu"_a, "sigma"_a, "sigma_prime"_a);
    m.def("conditional_law", &conditional_law, "x1"_a, "q1"_a, "q2"_a, "mu"_a, "sigma"_a, "sigma_prime"_a);
    m.def(
        "fast_log_density_pair",
        [](const Vec& x1, const Vec& x2, const Vec& mu, const CovModel& sigma, double sp2, double q1, double q2) {
            const PairLogDensity r = fast_log_density_pair(x1, x2, mu, sigma, sp2, q1, q2);
            return py::make_tuple(r.first, r.second_given);
        },
        "x1"_a, "x2"_a, "mu"_a, "sigma"_a, "sigma_prime_sq"_a, "q1"_a, "q2"_a);

    // Fisher information
    py::class_<ParamModel>(m, "ParamModel");
    m.def("mean_model", &mean_model, "theta"_a, "sigma"_a);
    py::class_<FisherReport>(m, "FisherReport")
        .def_readonly("q1", &FisherReport::q1)
        .def_readonly("i1_theta", &FisherReport::i1_theta)
        .def_readonly("i2_theta", &FisherReport::i2_theta)
        .def_readonly("total_theta", &FisherReport::total_theta)
        .def_readonly("i1_phi", &FisherReport::i1_phi)
        .def_readonly("i2_phi", &FisherReport::i2_phi)
        .def_readonly("total_phi", &FisherReport::total_phi)
        .def("table", &FisherReport::table);
    m.def("fisher_fission", &fisher_fission, "model"_a, "q1"_a, "sigma_prime"_a);
    m.def(
        "fisher_split",
        [](const OrthogonalPlan& plan) {
            py::list out;
            for (const auto& f : fisher_split(plan)) out.append(py::make_tuple(f.mean, f.cov));
            return out;
        },
        "plan"_a);

    // Gaussian processes
    py::class_<CovFunction>(m, "CovFunction")
        .def_static("white_noise", &CovFunction::white_noise, "variance"_a)
        .def_static("squared_exponential", &CovFunction::squared_exponential, "variance"_a, "lengthscale"_a)
        .def_static("matern32", &CovFunction::matern32, "variance"_a, "lengthscale"_a)
        .def_static("user", &CovFunction::user, "kernel"_a, "name"_a = "user")
        .def("__call__", &CovFunction::operator(), "t"_a, "u"_a)
        .def("gram", &CovFunction::gram, "points"_a);
    py::class_<GPFoldSet>(m, "GPFoldSet")
        .def_readonly("folds", &GPFoldSet::folds)
        .def("reconstruct", &GPFoldSet::reconstruct);
    m.def("gp_decompose", &gp_decompose, "x_values"_a, "points"_a, "plan"_a, "cprime"_a, "seed"_a);
    m.def("gp_fold_marginal", &gp_fold_marginal, "k"_a, "plan"_a, "points"_a, "mu"_a, "c"_a, "cprime"_a);
    m.def("gp_joint_law", &gp_joint_law, "plan"_a, "points"_a, "mu"_a, "c"_a, "cprime"_a);
    m.def("gp_conditional", &gp_conditional, "x1_values"_a, "plan"_a, "points"_a, "mu"_a, "c"_a, "cprime"_a);

    // matrix-normal inference
    m.def("sample_matrix_normal",
          py::overload_cast<const Mat&, const CovModel&, const CovModel&, std::uint64_t>(&sample_matrix_normal),
          "mean"_a, "rowcov"_a, "colcov"_a, "seed"_a);
    m.def("sample_rowcov", &sample_rowcov, "x"_a, "centered"_a = false);
    m.def(
        "select_entry",
        [](const Mat& d) {
            const SelectionResult s = select_entry(d);
            return py::make_tuple(s.i, s.j, s.value);
        },
        "delta_hat"_a);
    py::class_<KronLikelihood>(m, "KronLikelihood")
        .def_static("full", &KronLikelihood::full, "x"_a)
        .def_static("marginal", &KronLikelihood::marginal, "x"_a, "q"_a, "s2"_a = 1.0)
        .def_static("conditional", &KronLikelihood::conditional, "x1"_a, "x2"_a, "q1"_a, "q2"_a, "s2"_a = 1.0)
        .def("value", &KronLikelihood::value, "delta"_a, "rho"_a);
    m.def(
        "simulate",
        [](int a, int b, double rho, std::optional<double> omega, std::vector<double> q1, std::string methods,
           int replicates, std::uint64_t seed, int threads) {
            SimConfig c;
            c.a = a;
            c.b = b;
            c.rho = rho;
            c.null_setting = !omega.has_value();
            c.omega = omega.value_or(0.0);
            c.q1 = std::move(q1);
            c.methods.clear();
            for (char ch : methods) c.methods.push_back(method_from_code(ch));
            c.replicates = replicates;
            c.seed = seed;
            c.threads = threads;
            std::vector<ReplicateRow> rows;
            {
                py::gil_scoped_release release;
                rows = simulate(c);
            }
            py::list out;
            for (const auto& r : rows) out.append(replicate_dict(r));
            return out;
        },
        "a"_a = 10, "b"_a = 50, "rho"_a = 0.9, "omega"_a = py::none(), "q1"_a = std::vector<double>{0.6, 0.71, 0.8},
        "methods"_a = "abc", "replicates"_a = 400, "seed"_a = 20240101, "threads"_a = 1);

    // cluster validation
    m.def("hier_cluster",
          [](const Mat& d, const std::string& linkage) { return hier_cluster(d, linkage_from_string(linkage)).assignments; },
          "delta_hat"_a, "linkage"_a = "average");
    m.def(
        "validate_clusters",
        [](const Mat& x, double q1, std::uint64_t seed, const std::string& linkage) {
            const ClusterRun run = run_cluster_validation(x, q1, seed, linkage_from_string(linkage));
            py::dict d = curve_dict(run.curve);
            d["rho_hat"] = run.estimate.rho_hat;
            d["delta_hat"] = run.estimate.delta_hat;
            d["assignments"] = run.path.clusters(run.curve.h_hat);
            return d;
        },
        "x"_a, "q1"_a, "seed"_a, "linkage"_a = "average");
    m.def(
        "cluster_study",
        [](int replicates, std::uint64_t seed, int threads) {
            ClusterStudyConfig c;
            c.replicates = replicates;
            c.seed = seed;
            c.threads = threads;
            std::vector<ClusterStudyRow> rows;
            {
                py::gil_scoped_release release;
                rows = cluster_study(c);
            }
            py::list out;
            for (const auto& r : rows)
                out.append(py::dict("replicate"_a = r.replicate, "h_hat"_a = r.h_hat, "rho_hat"_a = r.rho_hat,
                                    "recovered"_a = r.recovered, "ok"_a = r.ok));
            return out;
        },
        "replicates"_a = 100, "seed"_a = 7, "threads"_a = 1);
}
