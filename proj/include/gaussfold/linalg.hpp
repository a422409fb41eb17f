#pragma once

#include "gaussfold/types.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <variant>
#include <vector>

namespace gaussfold {

/// Seeded 64-bit generator. Every random quantity in the library is drawn
/// through one of these so that a run is reproducible from its seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    Vec normal_vec(Eigen::Index n);
    Mat normal_mat(Eigen::Index rows, Eigen::Index cols);
    double gamma(double shape);  // unit rate
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives an independent child seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Structured covariance model. Kronecker(outer, inner) materializes as
/// outer ⊗ inner, which is the covariance of vec(X) for a matrix with row
/// covariance `inner` and column covariance `outer`.
class CovModel {
public:
    enum class Kind { Dense, Diagonal, Isotropic, AR1, Kronecker };

    static CovModel dense(Mat m);
    static CovModel diagonal(Vec d);
    static CovModel isotropic(double variance, Eigen::Index dim);
    static CovModel identity(Eigen::Index dim) { return isotropic(1.0, dim); }
    static CovModel ar1(double rho, Eigen::Index dim);
    static CovModel kronecker(CovModel outer, CovModel inner);

    Kind kind() const;
    Eigen::Index dim() const;
    std::string kind_name() const;

    const Mat& dense_matrix() const;
    const Vec& diagonal_values() const;
    double variance() const;  // Isotropic only
    double rho() const;       // AR1 only
    const CovModel& outer() const;
    const CovModel& inner() const;

    Mat materialize() const;
    Vec diagonal() const;
    /// True when the model is a positive multiple of the identity (Isotropic,
    /// or Diagonal/Dense with equal diagonal and zero off-diagonal).
    bool is_isotropic(double* variance_out = nullptr) const;
    bool is_diagonal() const;

private:
    struct Dense { Mat m; };
    struct Diagonal { Vec d; };
    struct Isotropic { double var; Eigen::Index dim; };
    struct AR1 { double rho; Eigen::Index dim; };
    struct Kron { std::shared_ptr<const CovModel> outer, inner; };
    using Data = std::variant<Dense, Diagonal, Isotropic, AR1, Kron>;

    explicit CovModel(Data d) : data_(std::move(d)) {}
    Data data_;
};

/// Orthonormal eigenvectors (columns) and eigenvalues sorted descending.
struct EigenPair {
    Mat vectors;
    Vec values;

    Mat reconstruct() const;
};

/// Symmetric eigendecomposition. Kronecker models are decomposed factor-wise,
/// vectors = P_outer ⊗ P_inner and values = A_outer ⊗ A_inner, then sorted
/// descending with ties kept in their original order.
EigenPair eig_sym(const CovModel& cov);
EigenPair eig_sym(const Mat& symmetric);

/// Eigendecomposition kept in factored form (unsorted Kronecker order) so that
/// rotations by P^T cost O(p * sum of factor dims) instead of O(p^2).
class SpectralBasis {
public:
    explicit SpectralBasis(const CovModel& cov);

    Eigen::Index dim() const { return values_.size(); }
    const Vec& values() const { return values_; }
    const std::vector<EigenPair>& factors() const { return factors_; }

    Vec rotate(const Vec& x) const;    // P^T x
    Vec unrotate(const Vec& y) const;  // P y

private:
    Vec apply(const Vec& x, bool transpose) const;

    std::vector<EigenPair> factors_;  // outermost first
    Vec values_;
};

/// Lower factor L with L L^T = cov, kept in structured form.
class CovFactor {
public:
    explicit CovFactor(const CovModel& cov);

    Eigen::Index dim() const { return dim_; }
    Vec apply(const Vec& z) const;
    /// Applies L to every column of Z.
    Mat apply_cols(const Mat& z) const;
    /// L^{-1} y.
    Vec whiten(const Vec& y) const;
    Mat whiten_cols(const Mat& y) const;
    /// log det(L L^T).
    double log_det() const;

private:
    CovModel::Kind kind_;
    Eigen::Index dim_ = 0;
    Mat lower_;
    Vec scale_;
    double rho_ = 0.0;
    std::shared_ptr<const CovFactor> outer_, inner_;
};

/// Cholesky factorization; on failure adds 1e-10 * trace/d to the diagonal once
/// and retries, then throws NumericalError.
Eigen::LLT<Mat> cholesky_with_jitter(const Mat& m, const char* what = "matrix");

/// K x (K-1) matrix U with [v U] orthogonal. Built from the Householder
/// reflection that maps e1 to v, so for K=2 the result is (v2, -v1)^T.
Mat orth_complete(const Vec& v);

/// Full orthogonal K x K matrix with first column v (the Householder reflector).
Mat orth_with_first_column(const Vec& v);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Mat haar_orthogonal(Eigen::Index n, Rng& rng);

/// Uniformly random permutation matrix.
Mat random_permutation(Eigen::Index n, Rng& rng);

/// One draw from N_p(mean, cov).
Vec sample_mvn(const Vec& mean, const CovModel& cov, Rng& rng);

/// One draw from the matrix normal N_{a x b}(mean, rowcov, colcov), i.e.
/// vec(X) ~ N(vec(mean), colcov ⊗ rowcov).
Mat sample_matrix_normal(const Mat& mean, const CovModel& rowcov, const CovModel& colcov,
                         std::uint64_t seed);
Mat sample_matrix_normal(const Mat& mean, const CovModel& rowcov, const CovModel& colcov,
                         Rng& rng);

/// Column-major reshape of a length a*b vector into an a x b matrix.
Mat reshape_cols(const Vec& v, Eigen::Index rows, Eigen::Index cols);
Vec vectorize(const Mat& m);

/// Relative Frobenius distance ||a - b|| / max(||b||, tiny).
double rel_frobenius(const Mat& a, const Mat& b);

}  // namespace gaussfold
