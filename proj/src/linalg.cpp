#include "gaussfold/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gaussfold {

Vec Rng::normal_vec(Eigen::Index n) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
}

Mat Rng::normal_mat(Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    // column-major fill keeps vec(m) equal to a normal_vec of the same seed
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
}

double Rng::gamma(double shape) {
    std::gamma_distribution<double> dist(shape, 1.0);
    return dist(engine_);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------- CovModel

CovModel CovModel::dense(Mat m) {
    require(m.rows() == m.cols() && m.rows() > 0, "dense covariance must be square and non-empty");
    require(m.allFinite(), "dense covariance has non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
            "dense covariance is not symmetric");
    Mat sym = 0.5 * (m + m.transpose());
    return CovModel(Dense{std::move(sym)});
}

CovModel CovModel::diagonal(Vec d) {
    require(d.size() > 0, "diagonal covariance must be non-empty");
    require(d.allFinite() && (d.array() > 0.0).all(), "diagonal covariance entries must be positive");
    return CovModel(Diagonal{std::move(d)});
}

CovModel CovModel::isotropic(double variance, Eigen::Index dim) {
    require(dim > 0, "isotropic covariance dimension must be positive");
    require(std::isfinite(variance) && variance > 0.0, "isotropic variance must be > 0");
    return CovModel(Isotropic{variance, dim});
}

CovModel CovModel::ar1(double rho, Eigen::Index dim) {
    require(dim > 0, "AR(1) dimension must be positive");
    require(std::isfinite(rho) && rho > -1.0 && rho < 1.0, "AR(1) rho must lie in (-1, 1)");
    return CovModel(AR1{rho, dim});
}

CovModel CovModel::kronecker(CovModel outer, CovModel inner) {
    return CovModel(Kron{std::make_shared<const CovModel>(std::move(outer)),
                         std::make_shared<const CovModel>(std::move(inner))});
}

CovModel::Kind CovModel::kind() const { return static_cast<Kind>(data_.index()); }

Eigen::Index CovModel::dim() const {
    struct V {
        Eigen::Index operator()(const Dense& d) const { return d.m.rows(); }
        Eigen::Index operator()(const Diagonal& d) const { return d.d.size(); }
        Eigen::Index operator()(const Isotropic& d) const { return d.dim; }
        Eigen::Index operator()(const AR1& d) const { return d.dim; }
        Eigen::Index operator()(const Kron& d) const { return d.outer->dim() * d.inner->dim(); }
    };
    return std::visit(V{}, data_);
}

std::string CovModel::kind_name() const {
    switch (kind()) {
        case Kind::Dense: return "dense";
        case Kind::Diagonal: return "diagonal";
        case Kind::Isotropic: return "isotropic";
        case Kind::AR1: return "ar1";
        case Kind::Kronecker: return "kronecker";
    }
    return "unknown";
}

const Mat& CovModel::dense_matrix() const {
    require(kind() == Kind::Dense, "not a dense covariance");
    return std::get<Dense>(data_).m;
}
const Vec& CovModel::diagonal_values() const {
    require(kind() == Kind::Diagonal, "not a diagonal covariance");
    return std::get<Diagonal>(data_).d;
}
double CovModel::variance() const {
    require(kind() == Kind::Isotropic, "not an isotropic covariance");
    return std::get<Isotropic>(data_).var;
}
double CovModel::rho() const {
    require(kind() == Kind::AR1, "not an AR(1) covariance");
    return std::get<AR1>(data_).rho;
}
const CovModel& CovModel::outer() const {
    require(kind() == Kind::Kronecker, "not a Kronecker covariance");
    return *std::get<Kron>(data_).outer;
}
const CovModel& CovModel::inner() const {
    require(kind() == Kind::Kronecker, "not a Kronecker covariance");
    return *std::get<Kron>(data_).inner;
}

namespace {

Mat ar1_matrix(double rho, Eigen::Index n) {
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = 1.0;
        double v = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            v *= rho;
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return m;
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

Mat CovModel::materialize() const {
    switch (kind()) {
        case Kind::Dense: return std::get<Dense>(data_).m;
        case Kind::Diagonal: return std::get<Diagonal>(data_).d.asDiagonal();
        case Kind::Isotropic: {
            const auto& iso = std::get<Isotropic>(data_);
            return iso.var * Mat::Identity(iso.dim, iso.dim);
        }
        case Kind::AR1: {
            const auto& ar = std::get<AR1>(data_);
            return ar1_matrix(ar.rho, ar.dim);
        }
        case Kind::Kronecker: return kron(outer().materialize(), inner().materialize());
    }
    throw InvalidArgument("unknown covariance kind");
}

Vec CovModel::diagonal() const {
    switch (kind()) {
        case Kind::Dense: return dense_matrix().diagonal();
        case Kind::Diagonal: return diagonal_values();
        case Kind::Isotropic: return Vec::Constant(dim(), variance());
        case Kind::AR1: return Vec::Ones(dim());
        case Kind::Kronecker: {
            const Vec o = outer().diagonal();
            const Vec i = inner().diagonal();
            Vec out(o.size() * i.size());
            for (Eigen::Index k = 0; k < o.size(); ++k) out.segment(k * i.size(), i.size()) = o(k) * i;
            return out;
        }
    }
    throw InvalidArgument("unknown covariance kind");
}

bool CovModel::is_diagonal() const {
    switch (kind()) {
        case Kind::Diagonal:
        case Kind::Isotropic: return true;
        case Kind::AR1: return rho() == 0.0 || dim() == 1;
        case Kind::Dense: {
            const Mat& m = dense_matrix();
            return (m - Mat(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
        }
        case Kind::Kronecker: return outer().is_diagonal() && inner().is_diagonal();
    }
    return false;
}

bool CovModel::is_isotropic(double* variance_out) const {
    if (!is_diagonal()) return false;
    const Vec d = diagonal();
    const double v = d(0);
    if ((d.array() != v).any()) return false;
    if (variance_out) *variance_out = v;
    return true;
}

// ---------------------------------------------------------------- eigen

Mat EigenPair::reconstruct() const {
    return vectors * values.asDiagonal() * vectors.transpose();
}

namespace {

EigenPair sort_descending(Mat vectors, Vec values) {
    std::vector<Eigen::Index> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
    EigenPair out{Mat(vectors.rows(), vectors.cols()), Vec(values.size())};
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out.vectors.col(static_cast<Eigen::Index>(k)) = vectors.col(idx[k]);
        out.values(static_cast<Eigen::Index>(k)) = values(idx[k]);
    }
    return out;
}

// unsorted factor eigendecomposition
EigenPair eig_factor(const CovModel& cov) {
    switch (cov.kind()) {
        case CovModel::Kind::Isotropic:
            return {Mat::Identity(cov.dim(), cov.dim()), Vec::Constant(cov.dim(), cov.variance())};
        case CovModel::Kind::Diagonal:
            return {Mat::Identity(cov.dim(), cov.dim()), cov.diagonal_values()};
        default: {
            Eigen::SelfAdjointEigenSolver<Mat> es(cov.materialize());
            if (es.info() != Eigen::Success)
                throw NumericalError("symmetric eigensolver failed on " + cov.kind_name() +
                                     " covariance of dimension " + std::to_string(cov.dim()));
            return {es.eigenvectors(), es.eigenvalues()};
        }
    }
}

void collect_factors(const CovModel& cov, std::vector<EigenPair>& out) {
    if (cov.kind() == CovModel::Kind::Kronecker) {
        collect_factors(cov.outer(), out);
        collect_factors(cov.inner(), out);
    } else {
        out.push_back(eig_factor(cov));
    }
}

}  // namespace

EigenPair eig_sym(const Mat& symmetric) {
    require(symmetric.rows() == symmetric.cols(), "eig_sym needs a square matrix");
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetric);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
    return sort_descending(es.eigenvectors(), es.eigenvalues());
}

EigenPair eig_sym(const CovModel& cov) {
    if (cov.kind() != CovModel::Kind::Kronecker) {
        EigenPair e = eig_factor(cov);
        return sort_descending(std::move(e.vectors), std::move(e.values));
    }
    const EigenPair o = eig_sym(cov.outer());
    const EigenPair i = eig_sym(cov.inner());
    Vec values(o.values.size() * i.values.size());
    for (Eigen::Index k = 0; k < o.values.size(); ++k)
        values.segment(k * i.values.size(), i.values.size()) = o.values(k) * i.values;
    return sort_descending(kron(o.vectors, i.vectors), std::move(values));
}

SpectralBasis::SpectralBasis(const CovModel& cov) {
    collect_factors(cov, factors_);
    values_ = Vec::Ones(1);
    for (const auto& f : factors_) {
        Vec next(values_.size() * f.values.size());
        for (Eigen::Index k = 0; k < values_.size(); ++k)
            next.segment(k * f.values.size(), f.values.size()) = values_(k) * f.values;
        values_ = std::move(next);
    }
}

Vec SpectralBasis::apply(const Vec& x, bool transpose) const {
    require(x.size() == dim(), "spectral rotation dimension mismatch");
    Vec cur = x;
    Eigen::Index outer = 1;
    for (const auto& f : factors_) {
        const Eigen::Index d = f.values.size();
        const Eigen::Index inner = dim() / (outer * d);
        // cur viewed as (inner, d, outer) column-major; rotate the middle mode
        for (Eigen::Index o = 0; o < outer; ++o) {
            Eigen::Map<Mat> slab(cur.data() + o * inner * d, inner, d);
            if (transpose)
                slab = (slab * f.vectors).eval();
            else
                slab = (slab * f.vectors.transpose()).eval();
        }
        outer *= d;
    }
    return cur;
}

Vec SpectralBasis::rotate(const Vec& x) const { return apply(x, true); }
Vec SpectralBasis::unrotate(const Vec& y) const { return apply(y, false); }

// ---------------------------------------------------------------- factors

Eigen::LLT<Mat> cholesky_with_jitter(const Mat& m, const char* what) {
    Eigen::LLT<Mat> llt(m);
    if (llt.info() == Eigen::Success) return llt;
    const double jitter = 1e-10 * m.trace() / static_cast<double>(m.rows());
    Mat bumped = m;
    if (jitter > 0.0) bumped.diagonal().array() += jitter;
    llt.compute(bumped);
    if (llt.info() != Eigen::Success || !(jitter > 0.0))
        throw NumericalError(std::string(what) + " is not positive definite (Cholesky failed after jitter)");
    return llt;
}

CovFactor::CovFactor(const CovModel& cov) : kind_(cov.kind()), dim_(cov.dim()) {
    switch (kind_) {
        case CovModel::Kind::Dense: lower_ = cholesky_with_jitter(cov.dense_matrix(), "covariance").matrixL(); break;
        case CovModel::Kind::Diagonal: scale_ = cov.diagonal_values().cwiseSqrt(); break;
        case CovModel::Kind::Isotropic: scale_ = Vec::Constant(1, std::sqrt(cov.variance())); break;
        case CovModel::Kind::AR1: rho_ = cov.rho(); break;
        case CovModel::Kind::Kronecker:
            outer_ = std::make_shared<const CovFactor>(cov.outer());
            inner_ = std::make_shared<const CovFactor>(cov.inner());
            break;
    }
}

Vec CovFactor::apply(const Vec& z) const {
    require(z.size() == dim_, "factor dimension mismatch");
    switch (kind_) {
        case CovModel::Kind::Dense: return lower_.triangularView<Eigen::Lower>() * z;
        case CovModel::Kind::Diagonal: return scale_.cwiseProduct(z);
        case CovModel::Kind::Isotropic: return scale_(0) * z;
        case CovModel::Kind::AR1: {
            // lower Cholesky factor of the AR(1) correlation matrix, applied recursively
            Vec out(dim_);
            const double s = std::sqrt(1.0 - rho_ * rho_);
            out(0) = z(0);
            for (Eigen::Index t = 1; t < dim_; ++t) out(t) = rho_ * out(t - 1) + s * z(t);
            return out;
        }
        case CovModel::Kind::Kronecker: {
            const Eigen::Index di = inner_->dim(), dout = outer_->dim();
            Mat zm = Eigen::Map<const Mat>(z.data(), di, dout);
            Mat left = inner_->apply_cols(zm);
            Mat both = outer_->apply_cols(left.transpose()).transpose();
            return Eigen::Map<const Vec>(both.data(), both.size());
        }
    }
    throw InvalidArgument("unknown covariance kind");
}

Mat CovFactor::apply_cols(const Mat& z) const {
    require(z.rows() == dim_, "factor dimension mismatch");
    if (kind_ == CovModel::Kind::Dense) return lower_.triangularView<Eigen::Lower>() * z;
    Mat out(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) out.col(j) = apply(z.col(j));
    return out;
}

Vec CovFactor::whiten(const Vec& y) const {
    require(y.size() == dim_, "factor dimension mismatch");
    switch (kind_) {
        case CovModel::Kind::Dense: return lower_.triangularView<Eigen::Lower>().solve(y);
        case CovModel::Kind::Diagonal: return y.cwiseQuotient(scale_);
        case CovModel::Kind::Isotropic: return y / scale_(0);
        case CovModel::Kind::AR1: {
            Vec out(dim_);
            const double s = std::sqrt(1.0 - rho_ * rho_);
            out(0) = y(0);
            for (Eigen::Index t = 1; t < dim_; ++t) out(t) = (y(t) - rho_ * y(t - 1)) / s;
            return out;
        }
        case CovModel::Kind::Kronecker: {
            const Eigen::Index di = inner_->dim(), dout = outer_->dim();
            Mat ym = Eigen::Map<const Mat>(y.data(), di, dout);
            Mat left = inner_->whiten_cols(ym);
            Mat both = outer_->whiten_cols(left.transpose()).transpose();
            return Eigen::Map<const Vec>(both.data(), both.size());
        }
    }
    throw InvalidArgument("unknown covariance kind");
}

Mat CovFactor::whiten_cols(const Mat& y) const {
    require(y.rows() == dim_, "factor dimension mismatch");
    if (kind_ == CovModel::Kind::Dense) return lower_.triangularView<Eigen::Lower>().solve(y);
    Mat out(y.rows(), y.cols());
    for (Eigen::Index j = 0; j < y.cols(); ++j) out.col(j) = whiten(y.col(j));
    return out;
}

double CovFactor::log_det() const {
    switch (kind_) {
        case CovModel::Kind::Dense: return 2.0 * lower_.diagonal().array().log().sum();
        case CovModel::Kind::Diagonal: return 2.0 * scale_.array().log().sum();
        case CovModel::Kind::Isotropic: return 2.0 * static_cast<double>(dim_) * std::log(scale_(0));
        case CovModel::Kind::AR1: return static_cast<double>(dim_ - 1) * std::log1p(-rho_ * rho_);
        case CovModel::Kind::Kronecker:
            return static_cast<double>(inner_->dim()) * outer_->log_det() +
                   static_cast<double>(outer_->dim()) * inner_->log_det();
    }
    throw InvalidArgument("unknown covariance kind");
}

// ---------------------------------------------------------------- orthogonal

Mat orth_with_first_column(const Vec& v) {
    require(v.size() >= 1, "vector must be non-empty");
    require(std::abs(v.norm() - 1.0) <= 1e-10, "vector must have unit norm");
    const Eigen::Index k = v.size();
    Vec w = -v;
    w(0) += 1.0;  // w = e1 - v; reflection across w^perp swaps e1 and v
    const double ww = w.squaredNorm();
    Mat h = Mat::Identity(k, k);
    if (ww > 0.0) h -= (2.0 / ww) * w * w.transpose();
    return h;
}

Mat orth_complete(const Vec& v) {
    const Mat h = orth_with_first_column(v);
    return h.rightCols(v.size() - 1);
}

Mat haar_orthogonal(Eigen::Index n, Rng& rng) {
    require(n >= 1, "orthogonal matrix dimension must be positive");
    const Mat g = rng.normal_mat(n, n);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i)
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    return q;
}

Mat random_permutation(Eigen::Index n, Rng& rng) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with explicit draws so the result does not depend on
    // the standard library's shuffle implementation
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.engine()() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    Mat p = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) p(i, perm[static_cast<std::size_t>(i)]) = 1.0;
    return p;
}

// ---------------------------------------------------------------- sampling

Vec sample_mvn(const Vec& mean, const CovModel& cov, Rng& rng) {
    require(mean.size() == cov.dim(), "mean and covariance dimensions differ");
    return mean + CovFactor(cov).apply(rng.normal_vec(cov.dim()));
}

Mat sample_matrix_normal(const Mat& mean, const CovModel& rowcov, const CovModel& colcov, Rng& rng) {
    require(mean.rows() == rowcov.dim() && mean.cols() == colcov.dim(),
            "matrix normal dimensions inconsistent");
    const Mat z = rng.normal_mat(mean.rows(), mean.cols());
    const Mat left = CovFactor(rowcov).apply_cols(z);
    return mean + CovFactor(colcov).apply_cols(left.transpose()).transpose();
}

Mat sample_matrix_normal(const Mat& mean, const CovModel& rowcov, const CovModel& colcov,
                         std::uint64_t seed) {
    Rng rng(seed);
    return sample_matrix_normal(mean, rowcov, colcov, rng);
}

Mat reshape_cols(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
    require(v.size() == rows * cols, "reshape size mismatch");
    return Eigen::Map<const Mat>(v.data(), rows, cols);
}

Vec vectorize(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

double rel_frobenius(const Mat& a, const Mat& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace gaussfold
