#include "gaussfold/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gaussfold {

std::string to_string(PlanKind kind) {
    switch (kind) {
        case PlanKind::SampleSplit: return "sample_split";
        case PlanKind::Thinning: return "thinning";
        case PlanKind::Fission: return "fission";
        case PlanKind::InfoPreserving: return "info_preserving";
        case PlanKind::Dependent: return "dependent";
        case PlanKind::Block: return "block";
        case PlanKind::Custom: return "custom";
    }
    return "custom";
}

PlanKind plan_kind_from_string(const std::string& name) {
    for (auto k : {PlanKind::SampleSplit, PlanKind::Thinning, PlanKind::Fission, PlanKind::InfoPreserving,
                   PlanKind::Dependent, PlanKind::Block, PlanKind::Custom})
        if (to_string(k) == name) return k;
    throw InvalidArgument("unknown plan kind: " + name);
}

namespace {

bool is_permutation_of_range(const std::vector<int>& v, int m) {
    if (static_cast<int>(v.size()) != m) return false;
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    for (int x : v) {
        if (x < 0 || x >= m || seen[static_cast<std::size_t>(x)]) return false;
        seen[static_cast<std::size_t>(x)] = 1;
    }
    return true;
}

std::vector<int> iota_vec(int m) {
    std::vector<int> v(static_cast<std::size_t>(m));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

void check_sizes(const std::vector<int>& sizes, int total) {
    require(!sizes.empty(), "fold sizes must be non-empty");
    for (int s : sizes) require(s > 0, "fold sizes must be positive");
    require(std::accumulate(sizes.begin(), sizes.end(), 0) == total,
            "fold sizes must sum to " + std::to_string(total));
}

// Q = I_n ⊗ block with each data row followed by its K-1 noise rows and
// fold k collecting rows k, k+K, ..., k+(n-1)K.
OrthogonalPlan block_plan(const Mat& block, int n, PlanKind kind, Vec params) {
    const int k = static_cast<int>(block.rows());
    OrthogonalPlan plan;
    plan.n = n;
    plan.r = n * (k - 1);
    plan.q = Mat::Zero(n * k, n * k);
    for (int i = 0; i < n; ++i) plan.q.block(i * k, i * k, k, k) = block;
    plan.interleave.resize(static_cast<std::size_t>(n * k));
    for (int i = 0; i < n; ++i) {
        plan.interleave[static_cast<std::size_t>(i * k)] = i;
        for (int j = 1; j < k; ++j)
            plan.interleave[static_cast<std::size_t>(i * k + j)] = n + i * (k - 1) + (j - 1);
    }
    for (int f = 0; f < k; ++f)
        for (int i = 0; i < n; ++i) plan.row_order.push_back(f + k * i);
    plan.sizes.assign(static_cast<std::size_t>(k), n);
    plan.kind = kind;
    plan.params = std::move(params);
    plan.validate();
    return plan;
}

}  // namespace

std::vector<int> OrthogonalPlan::fold_rows(int k) const {
    require(k >= 0 && k < folds(), "fold index out of range");
    const int offset = std::accumulate(sizes.begin(), sizes.begin() + k, 0);
    return {row_order.begin() + offset, row_order.begin() + offset + sizes[static_cast<std::size_t>(k)]};
}

Vec OrthogonalPlan::data_column() const {
    require(n == 1, "data_column is defined for single-observation plans");
    const auto it = std::find(interleave.begin(), interleave.end(), 0);
    require(it != interleave.end(), "plan has no data row");
    return q.col(static_cast<Eigen::Index>(it - interleave.begin()));
}

void OrthogonalPlan::validate() const {
    const int m = rows();
    require(n >= 1, "plan must have at least one data row");
    require(r >= 0, "plan noise count must be non-negative");
    require(q.rows() == m && q.cols() == m, "plan Q must be (n+r) x (n+r)");
    require(q.allFinite(), "plan Q has non-finite entries");
    const double err = (q.transpose() * q - Mat::Identity(m, m)).cwiseAbs().maxCoeff();
    require(err <= 1e-10, "plan Q is not orthogonal (max |Q^T Q - I| = " + std::to_string(err) + ")");
    check_sizes(sizes, m);
    require(r >= std::max(folds() - n, 0), "plan needs r >= max(K - n, 0)");
    require(is_permutation_of_range(interleave, m), "plan interleave is not a permutation of the augmented rows");
    require(is_permutation_of_range(row_order, m), "plan row order is not a permutation of the rotated rows");
}

Mat FoldSet::stacked() const {
    plan.validate();
    require(static_cast<int>(folds.size()) == plan.folds(), "fold count does not match plan");
    Mat out(plan.rows(), p);
    int idx = 0;
    for (int k = 0; k < plan.folds(); ++k) {
        const Mat& f = folds[static_cast<std::size_t>(k)];
        require(f.rows() == plan.sizes[static_cast<std::size_t>(k)] && f.cols() == p,
                "fold " + std::to_string(k) + " does not match plan partition");
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            out.row(plan.row_order[static_cast<std::size_t>(idx++)]) = f.row(i);
    }
    return out;
}

OrthogonalPlan make_plan_custom(Mat q, int n, std::vector<int> sizes, std::vector<int> interleave,
                                std::vector<int> row_order) {
    OrthogonalPlan plan;
    const int m = static_cast<int>(q.rows());
    plan.n = n;
    plan.r = m - n;
    plan.q = std::move(q);
    plan.sizes = std::move(sizes);
    plan.interleave = interleave.empty() ? iota_vec(m) : std::move(interleave);
    plan.row_order = row_order.empty() ? iota_vec(m) : std::move(row_order);
    plan.kind = PlanKind::Custom;
    plan.validate();
    return plan;
}

OrthogonalPlan make_plan_sample_split(int n, std::vector<int> sizes, std::uint64_t seed) {
    require(n > 1, "sample splitting needs n > 1");
    check_sizes(sizes, n);
    Rng rng(seed);
    OrthogonalPlan plan = make_plan_custom(random_permutation(n, rng), n, std::move(sizes));
    plan.kind = PlanKind::SampleSplit;
    plan.seed = seed;
    return plan;
}

OrthogonalPlan make_plan_thinning(const Vec& eps, int n) {
    require(n >= 1, "n must be positive");
    require(eps.size() >= 1, "eps must be non-empty");
    require((eps.array() > 0.0).all() && eps.allFinite(), "eps entries must be positive");
    require(std::abs(eps.sum() - 1.0) <= 1e-12, "eps must sum to 1");
    const Vec col = eps.cwiseSqrt();
    return block_plan(orth_with_first_column(col / col.norm()), n, PlanKind::Thinning, eps);
}

OrthogonalPlan make_plan_info_preserving(int n, std::vector<int> sizes, std::uint64_t seed) {
    if (n == 1) throw ImpossibleDecomposition();
    require(n > 1, "n must be > 1");
    check_sizes(sizes, n);
    Rng rng(seed);
    const Mat v = orth_with_first_column(Vec::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
    Mat inner = Mat::Identity(n, n);
    inner.bottomRightCorner(n - 1, n - 1) = haar_orthogonal(n - 1, rng);
    OrthogonalPlan plan = make_plan_custom(v * inner * v.transpose(), n, std::move(sizes));
    plan.kind = PlanKind::InfoPreserving;
    plan.seed = seed;
    return plan;
}

OrthogonalPlan make_plan_dependent(int n, int k, const Vec& q_col, std::uint64_t seed) {
    require(n >= 1, "n must be positive");
    require(k >= 1 && q_col.size() == k, "q_col must have K entries");
    require(q_col.allFinite() && std::abs(q_col.norm() - 1.0) <= 1e-10, "q_col must have unit norm");
    OrthogonalPlan plan = block_plan(orth_with_first_column(q_col), n,
                                     n == 1 ? PlanKind::Dependent : PlanKind::Block, q_col);
    plan.seed = seed;
    return plan;
}

OrthogonalPlan make_plan_fission(int n) {
    const double s = 1.0 / std::sqrt(2.0);
    OrthogonalPlan plan = make_plan_dependent(n, 2, Vec::Constant(2, s));
    plan.kind = PlanKind::Fission;
    return plan;
}

OrthogonalPlan plan_independent(int n, int p, int k, bool covariance_known, std::uint64_t seed) {
    require(n >= 1 && p >= 1 && k >= 1, "n, p and K must be positive");
    if (n == 1 && !covariance_known) {
        if (p > 1) throw ImpossibleDecomposition();
        throw InvalidArgument(
            "a single univariate Gaussian with unknown variance has no Gaussian independent split; "
            "with a known mean use gamma_dirichlet_thin");
    }
    if (covariance_known) return make_plan_thinning(Vec::Constant(k, 1.0 / k), n);
    require(k <= n, "independent folds with unknown covariance need K <= n");
    std::vector<int> sizes(static_cast<std::size_t>(k), n / k);
    for (int i = 0; i < n % k; ++i) ++sizes[static_cast<std::size_t>(i)];
    return make_plan_info_preserving(n, std::move(sizes), seed);
}

FoldSet general_decompose(const Mat& x, const OrthogonalPlan& plan, const CovModel& sigma_prime,
                          std::uint64_t seed) {
    plan.validate();
    require(x.rows() == plan.n, "data has " + std::to_string(x.rows()) + " rows but plan expects " +
                                    std::to_string(plan.n));
    require(x.allFinite(), "data has non-finite entries");
    const auto p = x.cols();
    require(sigma_prime.dim() == p, "sigma_prime dimension must equal the number of columns");

    Mat noise(plan.r, p);
    if (plan.r > 0) {
        Rng rng(seed);
        const Mat z = rng.normal_mat(p, plan.r);
        noise = CovFactor(sigma_prime).apply_cols(z).transpose();
    }

    Mat aug(plan.rows(), p);
    for (int a = 0; a < plan.rows(); ++a) {
        const int src = plan.interleave[static_cast<std::size_t>(a)];
        if (src < plan.n) aug.row(a) = x.row(src);
        else aug.row(a) = noise.row(src - plan.n);
    }
    const Mat rotated = plan.q * aug;

    FoldSet fs{{}, plan, sigma_prime, plan.n, static_cast<int>(p)};
    for (int k = 0; k < plan.folds(); ++k) {
        const auto rows = plan.fold_rows(k);
        Mat f(static_cast<Eigen::Index>(rows.size()), p);
        for (std::size_t i = 0; i < rows.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = rotated.row(rows[i]);
        fs.folds.push_back(std::move(f));
    }
    return fs;
}

Mat reconstruct(const FoldSet& fs) {
    require(fs.plan.n == fs.n, "fold set metadata inconsistent: n differs from plan");
    const Mat aug = fs.plan.q.transpose() * fs.stacked();
    Mat x(fs.n, fs.p);
    for (int a = 0; a < fs.plan.rows(); ++a) {
        const int src = fs.plan.interleave[static_cast<std::size_t>(a)];
        if (src < fs.n) x.row(src) = aug.row(a);
    }
    return x;
}

Vec gamma_dirichlet_thin(double x, double mu, const Vec& eps, std::uint64_t seed) {
    require(eps.size() >= 1 && (eps.array() > 0.0).all() && eps.allFinite(), "eps entries must be positive");
    require(std::abs(eps.sum() - 1.0) <= 1e-12, "eps must sum to 1");
    require(std::isfinite(x) && std::isfinite(mu), "x and mu must be finite");
    const double sq = (x - mu) * (x - mu);
    if (eps.size() == 1) return Vec::Constant(1, sq);
    Rng rng(seed);
    Vec z(eps.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) z(k) = rng.gamma(eps(k) / 2.0);
    z /= z.sum();
    Vec out = sq * z;
    // pin the sum exactly
    out(out.size() - 1) = sq - out.head(out.size() - 1).sum();
    if (out(out.size() - 1) < 0.0) out(out.size() - 1) = 0.0;
    return out;
}

}  // namespace gaussfold
