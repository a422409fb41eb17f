#include "gaussfold/casestudy.hpp"

#include "gaussfold/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gaussfold {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Mat to_correlation(const Mat& m) {
    const Vec s = m.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Mat c = s.asDiagonal() * m * s.asDiagonal();
    c.diagonal().setOnes();
    return 0.5 * (c + c.transpose());
}

}  // namespace

double ar1_noise_loglik(const Vec& y, double rho, double innovation_var, double emission_var) {
    require(rho > -1.0 && rho < 1.0, "AR(1) coefficient must lie in (-1, 1)");
    require(innovation_var > 0.0 && emission_var >= 0.0, "variances must be positive");
    double m = 0.0;
    double p = innovation_var / (1.0 - rho * rho);
    double ll = 0.0;
    for (Eigen::Index t = 0; t < y.size(); ++t) {
        if (t > 0) {
            m *= rho;
            p = rho * rho * p + innovation_var;
        }
        const double f = p + emission_var;
        const double v = y(t) - m;
        ll -= 0.5 * (kLog2Pi + std::log(f) + v * v / f);
        const double k = p / f;
        m += k * v;
        p *= (1.0 - k);
    }
    return ll;
}

DeltaRhoEstimate estimate_delta_rho(const Mat& x1, double q1, LatentVariance latent) {
    require(q1 > 0.0 && q1 < 1.0, "q1 must lie strictly between 0 and 1");
    require(x1.rows() >= 1 && x1.cols() >= 2, "fold one must be a x b with b >= 2");
    const double qq = q1 * q1;
    const Eigen::Index a = x1.rows();
    DeltaRhoEstimate out;
    const Mat s = sample_rowcov(x1);
    Mat ds = (s - (1.0 - qq) * Mat::Identity(a, a)) / qq;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (ds + ds.transpose()));
    Vec ev = es.eigenvalues();
    if ((ev.array() < 0.0).any()) {
        out.floored = true;
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (ev(i) < 0.0) ev(i) = 0.1;
        ds = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    }
    out.delta_star = ds;
    out.delta_hat = to_correlation(ds);

    const double emission = 1.0 - qq;
    auto total = [&](double rho) {
        const double innov = latent == LatentVariance::Unit ? 1.0 : qq * (1.0 - rho * rho);
        double ll = 0.0;
        for (Eigen::Index i = 0; i < a; ++i) ll += ar1_noise_loglik(x1.row(i).transpose(), rho, innov, emission);
        return ll;
    };
    // coarse grid, then golden-section refinement around the best cell
    const int grid = 100;
    const double lo = 1e-4, hi = 0.9999;
    int best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int g = 0; g <= grid; ++g) {
        const double r = lo + (hi - lo) * g / grid;
        const double v = total(r);
        if (v > best_ll) {
            best_ll = v;
            best = g;
        }
    }
    const double step = (hi - lo) / grid;
    const double left = std::max(lo, lo + (best - 1) * step), right = std::min(hi, lo + (best + 1) * step);
    const ScalarMinimum m = golden_section([&](double r) { return -total(r); }, left, right, 1e-8);
    out.rho_hat = -m.f >= best_ll ? m.x : lo + best * step;
    return out;
}

DeltaRhoEstimate estimate_delta_rho(const Vec& x1_vec, double q1, int a, int b, LatentVariance latent) {
    require(a >= 1 && b >= 2 && x1_vec.size() == static_cast<Eigen::Index>(a) * b, "fold vector must have length a*b");
    return estimate_delta_rho(reshape_cols(x1_vec, a, b), q1, latent);
}

Linkage linkage_from_string(const std::string& name) {
    if (name == "average") return Linkage::Average;
    if (name == "single") return Linkage::Single;
    if (name == "complete") return Linkage::Complete;
    throw InvalidArgument("unknown linkage '" + name + "' (expected average, single or complete)");
}

std::string to_string(Linkage l) {
    switch (l) {
        case Linkage::Average: return "average";
        case Linkage::Single: return "single";
        case Linkage::Complete: return "complete";
    }
    return "average";
}

const std::vector<int>& ClusterPath::clusters(int h) const {
    require(h >= 1 && h <= a, "cluster count out of range");
    return assignments[static_cast<std::size_t>(h - 1)];
}

ClusterPath hier_cluster(const Mat& delta_hat, Linkage linkage) {
    const int a = static_cast<int>(delta_hat.rows());
    require(a >= 1 && delta_hat.cols() == a, "clustering needs a square matrix");
    const Mat dist = (Mat::Ones(a, a) - delta_hat);

    struct Cluster {
        int id;
        std::vector<int> members;  // sorted
    };
    std::vector<Cluster> active;
    for (int i = 0; i < a; ++i) active.push_back({i, {i}});

    auto linkage_dist = [&](const Cluster& x, const Cluster& y) {
        double acc = linkage == Linkage::Single ? std::numeric_limits<double>::infinity()
                     : linkage == Linkage::Complete ? -std::numeric_limits<double>::infinity()
                                                    : 0.0;
        for (int u : x.members)
            for (int v : y.members) {
                const double d = dist(u, v);
                if (linkage == Linkage::Single) acc = std::min(acc, d);
                else if (linkage == Linkage::Complete) acc = std::max(acc, d);
                else acc += d;
            }
        if (linkage == Linkage::Average) acc /= static_cast<double>(x.members.size() * y.members.size());
        return acc;
    };
    auto labels_of = [&]() {
        std::vector<int> lab(static_cast<std::size_t>(a));
        // active is kept ordered by smallest member
        for (std::size_t c = 0; c < active.size(); ++c)
            for (int m : active[c].members) lab[static_cast<std::size_t>(m)] = static_cast<int>(c);
        return lab;
    };

    ClusterPath path;
    path.a = a;
    path.assignments.assign(static_cast<std::size_t>(a), {});
    path.assignments[static_cast<std::size_t>(a - 1)] = labels_of();
    int next_id = a;
    while (active.size() > 1) {
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < active.size(); ++i)
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const double d = linkage_dist(active[i], active[j]);
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        path.merges.push_back({active[bi].id, active[bj].id, best});
        Cluster merged{next_id++, active[bi].members};
        merged.members.insert(merged.members.end(), active[bj].members.begin(), active[bj].members.end());
        std::sort(merged.members.begin(), merged.members.end());
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active[bi] = std::move(merged);
        std::sort(active.begin(), active.end(),
                  [](const Cluster& x, const Cluster& y) { return x.members.front() < y.members.front(); });
        path.assignments[active.size() - 1] = labels_of();
    }
    return path;
}

Mat zero_between(const Mat& delta_hat, const std::vector<int>& labels) {
    require(static_cast<Eigen::Index>(labels.size()) == delta_hat.rows(), "one label per row");
    Mat out = delta_hat;
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j)
            if (labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) out(i, j) = 0.0;
    return out;
}

PdRepair repair_correlation(const Mat& m) {
    PdRepair out;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed during PD repair");
    Vec ev = es.eigenvalues();
    if (ev.minCoeff() > 0.0) {
        out.matrix = m;
        return out;
    }
    ev = ev.cwiseMax(1e-6);
    out.matrix = to_correlation(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
    out.repaired = true;
    out.frobenius_change = (out.matrix - m).norm();
    out.large = out.frobenius_change > 0.1 * m.norm();
    return out;
}

ValidationCurve select_clusters(const ClusterPath& path, const Mat& delta_hat, double rho_hat, const Mat& x1,
                                const Mat& x2, double q1, double q2, double s2) {
    require(delta_hat.rows() == path.a, "path and Delta_hat sizes differ");
    const KronLikelihood lik = KronLikelihood::conditional(x1, x2, q1, q2, s2);
    ValidationCurve curve;
    double best = -std::numeric_limits<double>::infinity();
    for (int h = 1; h <= path.a; ++h) {
        const PdRepair rep = repair_correlation(zero_between(delta_hat, path.clusters(h)));
        CurvePoint pt;
        pt.h = h;
        pt.cll = lik.value(rep.matrix, rho_hat);
        pt.repaired = rep.repaired;
        pt.large_repair = rep.large;
        pt.repair_change = rep.frobenius_change;
        if (!std::isfinite(pt.cll)) throw NumericalError("conditional log-likelihood is not finite");
        if (pt.cll > best) {
            best = pt.cll;
            curve.h_hat = h;
        }
        curve.points.push_back(pt);
    }
    return curve;
}

Mat block_truth(int a, int blocks, double within) {
    require(blocks >= 1 && blocks <= a, "block count must lie in [1, a]");
    require(within > -1.0 / (a - 1.0 + 1e-300) && within < 1.0, "within-block correlation out of range");
    Mat d = Mat::Identity(a, a);
    for (int i = 0; i < a; ++i)
        for (int j = 0; j < a; ++j)
            if (i != j && (i * blocks) / a == (j * blocks) / a) d(i, j) = within;
    return d;
}

ClusterRun run_cluster_validation(const Mat& x, double q1, std::uint64_t seed, Linkage linkage, LatentVariance latent) {
    require(q1 > 0.0 && q1 < 1.0, "q1 must lie strictly between 0 and 1");
    const int a = static_cast<int>(x.rows()), b = static_cast<int>(x.cols());
    Vec qcol(2);
    qcol << q1, std::sqrt(1.0 - q1 * q1);
    const OrthogonalPlan plan = make_plan_dependent(1, 2, qcol);
    const FoldSet fs = general_decompose(vectorize(x).transpose(), plan, CovModel::identity(a * b), seed);
    const Vec dc = plan.data_column();
    const double w1 = dc(plan.fold_rows(0).front()), w2 = dc(plan.fold_rows(1).front());
    ClusterRun run;
    run.x1 = reshape_cols(fs.folds[0].row(0).transpose(), a, b);
    run.x2 = reshape_cols(fs.folds[1].row(0).transpose(), a, b);
    run.estimate = estimate_delta_rho(run.x1, w1, latent);
    run.path = hier_cluster(run.estimate.delta_hat, linkage);
    run.curve = select_clusters(run.path, run.estimate.delta_hat, run.estimate.rho_hat, run.x1, run.x2, w1, w2);
    return run;
}

std::vector<ClusterStudyRow> cluster_study(const ClusterStudyConfig& cfg) {
    require(cfg.replicates >= 1, "at least one replicate");
    require(cfg.rho > 0.0 && cfg.rho < 1.0, "rho must lie in (0, 1)");
    const CovModel rowcov = CovModel::dense(block_truth(cfg.a, cfg.blocks, cfg.within));
    const CovModel colcov = CovModel::ar1(cfg.rho, cfg.b);
    std::vector<ClusterStudyRow> rows(static_cast<std::size_t>(cfg.replicates));
    parallel_for(cfg.replicates, cfg.threads, [&](int r) {
        ClusterStudyRow& row = rows[static_cast<std::size_t>(r)];
        row.replicate = r;
        row.seed = cfg.seed + static_cast<std::uint64_t>(r);
        try {
            Rng rng(row.seed);
            const Mat x = sample_matrix_normal(Mat::Zero(cfg.a, cfg.b), rowcov, colcov, rng);
            const ClusterRun run = run_cluster_validation(x, cfg.q1, derive_seed(row.seed, 1), cfg.linkage, cfg.latent);
            row.h_hat = run.curve.h_hat;
            row.rho_hat = run.estimate.rho_hat;
            row.recovered = row.h_hat == cfg.blocks;
            row.any_repair = std::any_of(run.curve.points.begin(), run.curve.points.end(),
                                         [](const CurvePoint& p) { return p.repaired; });
            row.curve = run.curve;
        } catch (const std::exception& ex) {
            row.ok = false;
            row.error = ex.what();
        }
    });
    return rows;
}

}  // namespace gaussfold
