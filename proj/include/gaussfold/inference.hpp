#pragma once

#include "gaussfold/linalg.hpp"
#include "gaussfold/optimize.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gaussfold {

/// Zero-mean matrix normal N_{a x b}(0, Delta, Gamma(rho)) with Delta a
/// correlation matrix and Gamma(rho) the AR(1) correlation over columns.
struct MatrixNormalModel {
    int a = 0;
    int b = 0;
    Mat delta;
    double rho = 0.0;

    /// Gamma(rho) ⊗ Delta, the covariance of vec(X).
    CovModel covariance() const;
};

/// Sample row covariance: X X^T / b, or with row means removed and divisor
/// b - 1 when centered.
Mat sample_rowcov(const Mat& xm, bool centered = false);

struct SelectionResult {
    int i = 0;  // 0-based, i < j
    int j = 1;
    double value = 0.0;
    std::string source;
};

/// Off-diagonal entry of largest magnitude; ties go to the smallest (i, j).
SelectionResult select_entry(const Mat& delta_hat, const std::string& source = "");

/// Eigendecomposition of Gamma(rho) through its tridiagonal inverse.
EigenPair ar1_eigen(double rho, int b);

/// Log-likelihood of matrix data under Sigma* = Gamma(rho) ⊗ Delta, evaluated
/// in the Kronecker eigenbasis. Three forms share one engine:
///   full         x ~ N(0, Sigma*)
///   marginal     x ~ N(0, q^2 Sigma* + (1 - q^2) s2 I)
///   conditional  x2 | x1 for a two-fold plan with weights (q1, q2), Sigma' = s2 I
class KronLikelihood {
public:
    static KronLikelihood full(const Mat& x);
    static KronLikelihood marginal(const Mat& x, double q, double s2 = 1.0);
    static KronLikelihood conditional(const Mat& x1, const Mat& x2, double q1, double q2, double s2 = 1.0);

    int a() const { return static_cast<int>(x_.rows()); }
    int b() const { return static_cast<int>(x_.cols()); }

    double value(const Mat& delta, double rho) const;
    /// Value with gradients: g_delta is the symmetric matrix with
    /// d loglik = tr(g_delta dDelta); g_rho = d loglik / d rho.
    double value_and_grad(const Mat& delta, double rho, Mat* g_delta, double* g_rho) const;

private:
    enum class Form { Full, Marginal, Conditional };
    KronLikelihood(Form f, Mat x, Mat x1, double q1, double q2, double s2);
    double eval(const Mat& delta, double rho, Mat* g_delta, double* g_rho) const;

    Form form_;
    Mat x_;   // observed (or second-fold) data, a x b
    Mat x1_;  // conditioning fold for the conditional form
    double q1_, q2_, s2_;
};

/// Unconstrained coordinates for a correlation matrix: canonical partial
/// correlations z = tanh(y) filling the Cholesky factor row by row.
int corr_param_count(int a);
Mat corr_from_params(const Vec& y, int a, Mat* chol = nullptr);
Vec params_from_corr(const Mat& delta);
/// Chain rule from d/dL (lower triangular) back to d/dy.
Vec corr_param_grad(const Vec& y, int a, const Mat& g_chol);
/// Gradient of Delta_ij with respect to the correlation parameters.
Vec corr_entry_grad(const Vec& y, int a, int i, int j);

struct FitOptions {
    double penalty = 0.0;  // L2 penalty on Delta_ij for the selected entry
    int pen_i = -1;
    int pen_j = -1;
    BfgsOptions bfgs;  // bfgs.initial_inverse_hessian is in (logit rho, y) coordinates
    Vec init_params;   // optional starting (logit rho, y); overrides the model
};

struct FitResult {
    MatrixNormalModel model;
    double loglik = 0.0;       // unpenalized
    double objective = 0.0;    // loglik - penalty * delta^2
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    double grad_norm = 0.0;
    std::string message;
    Mat inverse_hessian;  // final quasi-Newton approximation, (logit rho, y) coordinates
    Vec params;           // optimum in (logit rho, y) coordinates
};

/// Maximizes the likelihood over logit(rho) and the correlation parameters.
FitResult optimize_model(const KronLikelihood& lik, const MatrixNormalModel& init, const FitOptions& opts = {});

enum class Method { Naive, Marginal, Conditional };
char method_code(Method m);
Method method_from_code(char c);

struct TestResult {
    Method method = Method::Conditional;
    SelectionResult selected;
    double statistic = 0.0;
    double p_value = 1.0;
    FitResult alt;
    FitResult null;
    double null_delta = 0.0;  // selected entry at the penalized null optimum
};

inline BfgsOptions long_fit_options() {
    BfgsOptions o;
    o.max_iter = 5000;
    return o;
}

struct LrtOptions {
    double penalty = 5e5;
    double s2 = 1.0;
    /// Marginal-form fits often sit near singular Delta and need many steps.
    BfgsOptions bfgs = long_fit_options();
    /// Fits whose final gradient sup-norm exceeds this are reported as failures.
    double fail_grad = 1e-2;
};

/// Likelihood-ratio test of Delta_ij = 0 for the selected entry. Naive uses x
/// alone; marginal uses x2 with weight q2; conditional uses x2 | x1.
TestResult lrt_test(Method method, const Mat& x, const Mat& x1, const Mat& x2, double q1, double q2,
                    const SelectionResult& sel, const LrtOptions& opts = {});

struct SimConfig {
    int a = 10;
    int b = 50;
    double rho = 0.9;
    bool null_setting = true;
    double omega = 0.0;            // power setting: Delta_1 = omega 11^T + (1 - omega) I_2
    std::vector<double> q1 = {0.6, 0.71, 0.8};
    std::vector<Method> methods = {Method::Naive, Method::Marginal, Method::Conditional};
    int replicates = 400;
    std::uint64_t seed = 20240101;
    int threads = 1;
    bool centered = false;
    LrtOptions lrt;
};

struct ReplicateRow {
    int replicate = 0;
    std::uint64_t seed = 0;
    double omega = 0.0;
    Method method = Method::Conditional;
    double q1 = 1.0;   // 1 for the naive method
    int sel_i = 0;
    int sel_j = 0;
    bool detected = false;
    double statistic = 0.0;
    double p_value = 1.0;
    bool ok = true;
    std::string error;
    int iterations_alt = 0;
    int iterations_null = 0;
    bool converged = false;
    double null_delta = 0.0;
};

/// True row covariance for the setting.
Mat setting_delta(const SimConfig& cfg);

/// Runs every replicate (seed = cfg.seed + index) and method. Rows come back
/// ordered by replicate, then q1, then method. Failures are recorded in the
/// row, never thrown.
std::vector<ReplicateRow> simulate(const SimConfig& cfg);

/// Runs f(i) for i in [0, n) on a pool of worker threads.
void parallel_for(int n, int threads, const std::function<void(int)>& f);

}  // namespace gaussfold
