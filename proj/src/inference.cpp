#include "gaussfold/inference.hpp"

#include "gaussfold/decompose.hpp"
#include "gaussfold/stats.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace gaussfold {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double logit(double p) { return std::log(p / (1.0 - p)); }
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Lag-one autocorrelation pooled over rows, clipped to a safe starting range.
double lag1_start(const Mat& x) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        den += x.col(j).squaredNorm();
        if (j > 0) num += x.col(j).dot(x.col(j - 1));
    }
    const double r = den > 0.0 ? num / den : 0.5;
    return std::clamp(r, 0.05, 0.95);
}

Mat to_correlation(const Mat& m) {
    const Vec s = m.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Mat c = s.asDiagonal() * m * s.asDiagonal();
    c.diagonal().setOnes();
    return c;
}

// Positive-definite correlation start from a moment estimate of Delta.
Mat corr_start(const Mat& s) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
    Vec ev = es.eigenvalues();
    const double floor = 0.05 * std::max(ev.maxCoeff(), 1e-12);
    ev = ev.cwiseMax(floor);
    const Mat m = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    return to_correlation(m);
}

}  // namespace

CovModel MatrixNormalModel::covariance() const {
    return CovModel::kronecker(CovModel::ar1(rho, b), CovModel::dense(delta));
}

Mat sample_rowcov(const Mat& xm, bool centered) {
    require(xm.cols() >= 2, "sample row covariance needs at least two columns");
    if (!centered) return xm * xm.transpose() / static_cast<double>(xm.cols());
    const Mat c = xm.colwise() - xm.rowwise().mean();
    return c * c.transpose() / static_cast<double>(xm.cols() - 1);
}

SelectionResult select_entry(const Mat& delta_hat, const std::string& source) {
    require(delta_hat.rows() == delta_hat.cols() && delta_hat.rows() >= 2, "selection needs a square matrix, a >= 2");
    SelectionResult best{0, 1, delta_hat(0, 1), source};
    double best_abs = -1.0;
    for (int i = 0; i < delta_hat.rows(); ++i)
        for (int j = i + 1; j < delta_hat.cols(); ++j) {
            const double v = std::abs(delta_hat(i, j));
            if (v > best_abs) {
                best_abs = v;
                best = {i, j, delta_hat(i, j), source};
            }
        }
    return best;
}

EigenPair ar1_eigen(double rho, int b) {
    require(b >= 1, "AR(1) dimension must be positive");
    require(rho > -1.0 && rho < 1.0, "AR(1) coefficient must lie in (-1, 1)");
    if (b == 1) return {Mat::Ones(1, 1), Vec::Ones(1)};
    const double k = 1.0 / (1.0 - rho * rho);
    Vec diag = Vec::Constant(b, (1.0 + rho * rho) * k);
    diag(0) = diag(b - 1) = k;
    const Vec sub = Vec::Constant(b - 1, -rho * k);
    Eigen::SelfAdjointEigenSolver<Mat> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("AR(1) eigendecomposition failed");
    // ascending eigenvalues of the inverse are descending eigenvalues of Gamma
    return {es.eigenvectors(), es.eigenvalues().cwiseInverse()};
}

KronLikelihood::KronLikelihood(Form f, Mat x, Mat x1, double q1, double q2, double s2)
    : form_(f), x_(std::move(x)), x1_(std::move(x1)), q1_(q1), q2_(q2), s2_(s2) {
    require(x_.rows() >= 1 && x_.cols() >= 1, "empty data matrix");
    require(x_.allFinite(), "data must be finite");
    require(s2_ > 0.0, "sigma'^2 must be positive");
}

KronLikelihood KronLikelihood::full(const Mat& x) { return {Form::Full, x, Mat(), 1.0, 0.0, 1.0}; }

KronLikelihood KronLikelihood::marginal(const Mat& x, double q, double s2) {
    require(q > 0.0 && q <= 1.0, "marginal weight must lie in (0, 1]");
    return {Form::Marginal, x, Mat(), q, 0.0, s2};
}

KronLikelihood KronLikelihood::conditional(const Mat& x1, const Mat& x2, double q1, double q2, double s2) {
    require(x1.rows() == x2.rows() && x1.cols() == x2.cols(), "folds must have equal shape");
    require(q1 > 0.0 && q1 < 1.0, "q1 must lie in (0, 1)");
    require(std::abs(q1 * q1 + q2 * q2 - 1.0) <= 1e-10, "two-fold weights need q1^2 + q2^2 = 1");
    return {Form::Conditional, x2, x1, q1, q2, s2};
}

double KronLikelihood::value(const Mat& delta, double rho) const { return eval(delta, rho, nullptr, nullptr); }

double KronLikelihood::value_and_grad(const Mat& delta, double rho, Mat* g_delta, double* g_rho) const {
    return eval(delta, rho, g_delta, g_rho);
}

double KronLikelihood::eval(const Mat& delta, double rho, Mat* g_delta, double* g_rho) const {
    const Eigen::Index a = x_.rows(), b = x_.cols();
    require(delta.rows() == a && delta.cols() == a, "Delta must be a x a");
    const EigenPair eg = ar1_eigen(rho, static_cast<int>(b));
    Eigen::SelfAdjointEigenSolver<Mat> ed(delta);
    if (ed.info() != Eigen::Success) throw NumericalError("eigendecomposition of Delta failed");
    const Mat& r = ed.eigenvectors();
    Vec bv = ed.eigenvalues();
    const Mat& p = eg.vectors;
    const Vec& av = eg.values;
    if (av.minCoeff() <= 0.0) return -std::numeric_limits<double>::infinity();
    if (form_ == Form::Marginal) {
        // the noise floor keeps the marginal law proper when Delta is singular
        if (bv.minCoeff() < -1e-10) return -std::numeric_limits<double>::infinity();
        bv = bv.cwiseMax(0.0);
    } else if (bv.minCoeff() <= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }

    const Mat lam = bv * av.transpose();  // (i, j) -> B_i A_j
    const Mat t2 = r.transpose() * x_ * p;
    Mat h, e, u, t1;
    double alpha_h = 1.0, alpha_g = 0.0;
    switch (form_) {
        case Form::Full:
            h = lam;
            e = t2;
            u = Mat::Ones(a, b);
            break;
        case Form::Marginal: {
            const double qq = q1_ * q1_;
            h = (qq * lam).array() + (1.0 - qq) * s2_;
            e = t2;
            u = Mat::Ones(a, b);
            alpha_h = qq;
            break;
        }
        case Form::Conditional: {
            const double qq = q1_ * q1_, c = 1.0 - qq;
            t1 = r.transpose() * x1_ * p;
            const Mat d = (qq * lam).array() + c * s2_;
            const Mat g = (q1_ * q2_) * (lam.array() - s2_) / d.array();
            h = s2_ * lam.array() / d.array();
            e = t2.array() - g.array() * t1.array();
            u = d.cwiseInverse();
            alpha_h = c * s2_ * s2_;
            alpha_g = q1_ * q2_ * s2_;
            break;
        }
    }
    const double ll = -0.5 * (static_cast<double>(a * b) * kLog2Pi + h.array().log().sum() +
                              (e.array().square() / h.array()).sum());
    if (!g_delta && !g_rho) return ll;

    // Gradient weights W = 1/2 alpha_h zeta zeta^T + 1/2 alpha_g (zeta tau^T + tau zeta^T)
    //                      - 1/2 diag(alpha_h u^2 / h), only the Kronecker-diagonal blocks are needed.
    const Mat zeta = (e.array() / h.array() * u.array()).matrix();
    const Mat dd = (alpha_h * u.array().square() / h.array()).matrix();
    const auto adiag = av.asDiagonal();
    const auto bdiag = bv.asDiagonal();

    if (g_delta) {
        Mat om = 0.5 * alpha_h * zeta * adiag * zeta.transpose();
        if (alpha_g != 0.0) {
            const Mat tau = (t1.array() * u.array()).matrix();
            const Mat cross = zeta * adiag * tau.transpose();
            om += 0.5 * alpha_g * (cross + cross.transpose());
        }
        om.diagonal() -= 0.5 * (dd * av);
        *g_delta = r * om * r.transpose();
        *g_delta = 0.5 * (*g_delta + g_delta->transpose());
    }
    if (g_rho) {
        Mat om = 0.5 * alpha_h * zeta.transpose() * bdiag * zeta;
        if (alpha_g != 0.0) {
            const Mat tau = (t1.array() * u.array()).matrix();
            const Mat cross = zeta.transpose() * bdiag * tau;
            om += 0.5 * alpha_g * (cross + cross.transpose());
        }
        om.diagonal() -= 0.5 * (dd.transpose() * bv);
        const Mat gg = p * om * p.transpose();
        double s = 0.0;
        for (Eigen::Index j = 0; j < b; ++j)
            for (Eigen::Index k = 0; k < b; ++k) {
                const auto lag = std::abs(j - k);
                if (lag > 0) s += gg(j, k) * static_cast<double>(lag) * std::pow(rho, static_cast<double>(lag - 1));
            }
        *g_rho = s;
    }
    return ll;
}

int corr_param_count(int a) { return a * (a - 1) / 2; }

Mat corr_from_params(const Vec& y, int a, Mat* chol) {
    require(y.size() == corr_param_count(a), "wrong number of correlation parameters");
    Mat l = Mat::Zero(a, a);
    l(0, 0) = 1.0;
    Eigen::Index k = 0;
    for (int i = 1; i < a; ++i) {
        double w = 1.0;
        for (int j = 0; j < i; ++j, ++k) {
            const double z = std::tanh(y(k));
            l(i, j) = z * w;
            w *= 1.0 / std::cosh(y(k));
        }
        l(i, i) = w;
    }
    Mat delta = l * l.transpose();
    delta.diagonal().setOnes();
    if (chol) *chol = std::move(l);
    return delta;
}

Vec params_from_corr(const Mat& delta) {
    const int a = static_cast<int>(delta.rows());
    require(delta.cols() == a, "correlation matrix must be square");
    const Eigen::LLT<Mat> llt(delta);
    if (llt.info() != Eigen::Success) throw NumericalError("correlation matrix is not positive definite");
    const Mat l = llt.matrixL();
    Vec y(corr_param_count(a));
    Eigen::Index k = 0;
    for (int i = 1; i < a; ++i) {
        double w = 1.0;
        const double norm = l.row(i).head(i + 1).norm();  // 1 for an exact correlation matrix
        for (int j = 0; j < i; ++j, ++k) {
            double z = l(i, j) / norm / w;
            z = std::clamp(z, -1.0 + 1e-12, 1.0 - 1e-12);
            y(k) = std::atanh(z);
            w *= std::sqrt(1.0 - z * z);
        }
    }
    return y;
}

Vec corr_param_grad(const Vec& y, int a, const Mat& g_chol) {
    Vec gy(y.size());
    Eigen::Index start = 0;
    std::vector<double> w, z, s;
    for (int i = 1; i < a; ++i) {
        w.assign(static_cast<std::size_t>(i) + 1, 1.0);
        z.resize(static_cast<std::size_t>(i));
        s.resize(static_cast<std::size_t>(i));
        for (int j = 0; j < i; ++j) {
            z[j] = std::tanh(y(start + j));
            s[j] = 1.0 / std::cosh(y(start + j));
            w[j + 1] = w[j] * s[j];
        }
        double gw = g_chol(i, i);  // adjoint of w_{j+1}
        for (int j = i - 1; j >= 0; --j) {
            const double gl = g_chol(i, j);
            gy(start + j) = gl * w[j] * s[j] * s[j] - gw * w[j] * z[j] * s[j];
            gw = gl * z[j] + gw * s[j];
        }
        start += i;
    }
    return gy;
}

Vec corr_entry_grad(const Vec& y, int a, int i, int j) {
    Mat l;
    corr_from_params(y, a, &l);
    Mat g = Mat::Zero(a, a);
    g(i, j) += 0.5;
    g(j, i) += 0.5;
    return corr_param_grad(y, a, (2.0 * g * l).triangularView<Eigen::Lower>());
}

FitResult optimize_model(const KronLikelihood& lik, const MatrixNormalModel& init, const FitOptions& opts) {
    const int a = lik.a();
    require(init.delta.rows() == a && init.delta.cols() == a, "initial Delta has the wrong size");
    const bool pen = opts.penalty > 0.0;
    if (pen) require(opts.pen_i >= 0 && opts.pen_j >= 0 && opts.pen_i < a && opts.pen_j < a && opts.pen_i != opts.pen_j,
                     "penalized entry out of range");
    const int m = corr_param_count(a);
    Vec x0(1 + m);
    if (opts.init_params.size() > 0) {
        require(opts.init_params.size() == 1 + m, "initial parameter vector has the wrong size");
        x0 = opts.init_params;
    } else {
        x0(0) = logit(std::clamp(init.rho, 1e-3, 1.0 - 1e-3));
        x0.tail(m) = params_from_corr(init.delta);
    }

    auto objective = [&](const Vec& x, Vec* grad) -> double {
        const double rho = expit(x(0));
        if (!(rho > 0.0 && rho < 1.0)) return std::numeric_limits<double>::infinity();
        const Vec y = x.tail(m);
        Mat l;
        const Mat delta = corr_from_params(y, a, &l);
        Mat gd;
        double gr = 0.0;
        double ll;
        try {
            ll = grad ? lik.value_and_grad(delta, rho, &gd, &gr) : lik.value(delta, rho);
        } catch (const NumericalError&) {
            return std::numeric_limits<double>::infinity();
        }
        if (!std::isfinite(ll)) return std::numeric_limits<double>::infinity();
        double obj = ll;
        if (pen) {
            const double dlt = delta(opts.pen_i, opts.pen_j);
            obj -= opts.penalty * dlt * dlt;
            if (grad) {
                gd(opts.pen_i, opts.pen_j) -= opts.penalty * dlt;
                gd(opts.pen_j, opts.pen_i) -= opts.penalty * dlt;
            }
        }
        if (grad) {
            grad->resize(1 + m);
            (*grad)(0) = -gr * rho * (1.0 - rho);
            const Mat gl = (2.0 * gd * l).triangularView<Eigen::Lower>();
            grad->tail(m) = -corr_param_grad(y, a, gl);
        }
        return -obj;
    };

    const BfgsResult br = bfgs_minimize(objective, x0, opts.bfgs);
    FitResult out;
    out.model.a = a;
    out.model.b = lik.b();
    out.model.rho = expit(br.x(0));
    out.model.delta = corr_from_params(br.x.tail(m), a);
    out.objective = -br.f;
    out.loglik = lik.value(out.model.delta, out.model.rho);
    out.iterations = br.iterations;
    out.evaluations = br.evaluations;
    out.converged = br.converged;
    out.grad_norm = br.grad.lpNorm<Eigen::Infinity>();
    out.message = br.message;
    out.inverse_hessian = br.inverse_hessian;
    out.params = br.x;
    return out;
}

char method_code(Method m) {
    switch (m) {
        case Method::Naive: return 'a';
        case Method::Marginal: return 'b';
        case Method::Conditional: return 'c';
    }
    return '?';
}

Method method_from_code(char c) {
    switch (c) {
        case 'a': return Method::Naive;
        case 'b': return Method::Marginal;
        case 'c': return Method::Conditional;
        default: throw InvalidArgument(std::string("unknown method '") + c + "' (expected a, b or c)");
    }
}

namespace {

Mat zero_entry_pd(const Mat& delta, int i, int j) {
    const Mat id = Mat::Identity(delta.rows(), delta.cols());
    for (int step = 0; step <= 10; ++step) {
        const double t = 0.1 * step;
        Mat m = (1.0 - t) * delta + t * id;
        m(i, j) = m(j, i) = 0.0;
        Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() > 1e-3) return m;
    }
    return id;
}

// Parameters with Delta_ij = 0 obtained by re-solving the single partial
// correlation that enters Delta_ij last; the other coordinates are kept.
bool zero_entry_params(Vec& y, int a, int i, int j) {
    const int r = std::max(i, j), c = std::min(i, j);
    Mat l;
    corr_from_params(y, a, &l);
    double acc = 0.0;
    for (int k = 0; k < c; ++k) acc += l(r, k) * l(c, k);
    const double target = -acc / l(c, c);
    double w = 1.0;
    const Eigen::Index base = static_cast<Eigen::Index>(r) * (r - 1) / 2;
    for (int k = 0; k < c; ++k) w /= std::cosh(y(base + k));
    const double z = target / w;
    if (!(std::abs(z) < 0.999)) return false;
    y(base + c) = std::atanh(z);
    return true;
}

void check_fit(const FitResult& f, double fail_grad, const char* which) {
    if (!std::isfinite(f.loglik) || f.grad_norm > fail_grad)
        throw NumericalError(std::string(which) + " fit failed: " + f.message + " (gradient sup-norm " +
                             std::to_string(f.grad_norm) + ", " + std::to_string(f.iterations) + " iterations)");
}

}  // namespace

TestResult lrt_test(Method method, const Mat& x, const Mat& x1, const Mat& x2, double q1, double q2,
                    const SelectionResult& sel, const LrtOptions& opts) {
    require(sel.i != sel.j, "selected entry must be off-diagonal");
    KronLikelihood lik = KronLikelihood::full(x);
    Mat start_data;
    switch (method) {
        case Method::Naive:
            start_data = x;
            break;
        case Method::Marginal:
            lik = KronLikelihood::marginal(x2, q2, opts.s2);
            start_data = x2;
            break;
        case Method::Conditional:
            lik = KronLikelihood::conditional(x1, x2, q1, q2, opts.s2);
            start_data = q1 * x1 + q2 * x2;  // undoes the rotation, a natural starting point
            break;
    }
    require(sel.i < lik.a() && sel.j < lik.a(), "selected entry out of range");

    MatrixNormalModel init;
    init.a = lik.a();
    init.b = lik.b();
    init.rho = lag1_start(start_data);
    init.delta = corr_start(sample_rowcov(start_data));

    FitOptions alt_opts;
    alt_opts.bfgs = opts.bfgs;
    TestResult res;
    res.method = method;
    res.selected = sel;
    res.alt = optimize_model(lik, init, alt_opts);

    FitOptions null_opts = alt_opts;
    null_opts.penalty = opts.penalty;
    null_opts.pen_i = sel.i;
    null_opts.pen_j = sel.j;
    MatrixNormalModel null_init = res.alt.model;
    Vec y0 = res.alt.params.tail(corr_param_count(lik.a()));
    if (zero_entry_params(y0, lik.a(), sel.i, sel.j)) {
        null_opts.init_params = res.alt.params;
        null_opts.init_params.tail(y0.size()) = y0;
        // alternative curvature plus the rank-one curvature of the penalty
        const Mat& h = res.alt.inverse_hessian;
        if (h.rows() == y0.size() + 1) {
            Vec g = Vec::Zero(y0.size() + 1);
            g.tail(y0.size()) = corr_entry_grad(y0, lik.a(), sel.i, sel.j);
            const Vec hg = h * g;
            const double k2 = 2.0 * opts.penalty;
            null_opts.bfgs.initial_inverse_hessian = h - (k2 / (1.0 + k2 * g.dot(hg))) * hg * hg.transpose();
        }
    } else {
        null_init.delta = zero_entry_pd(res.alt.model.delta, sel.i, sel.j);
    }
    res.null = optimize_model(lik, null_init, null_opts);

    // the constrained optimum can never beat the unconstrained one; if it does
    // the alternative fit stopped early, so restart it from there
    if (res.null.loglik > res.alt.loglik + 1e-8) {
        FitOptions restart = alt_opts;
        restart.init_params = res.null.params;
        const FitResult again = optimize_model(lik, res.null.model, restart);
        if (again.loglik > res.alt.loglik) res.alt = again;
    }
    check_fit(res.alt, opts.fail_grad, "alternative");
    check_fit(res.null, opts.fail_grad, "penalized null");

    res.null_delta = res.null.model.delta(sel.i, sel.j);
    res.statistic = std::max(0.0, -2.0 * (res.null.loglik - res.alt.loglik));
    res.p_value = chi2_1_sf(res.statistic);
    return res;
}

Mat setting_delta(const SimConfig& cfg) {
    Mat d = Mat::Identity(cfg.a, cfg.a);
    if (!cfg.null_setting) {
        require(cfg.a >= 2, "power setting needs a >= 2");
        require(cfg.omega > -1.0 && cfg.omega < 1.0, "omega must lie in (-1, 1)");
        d(0, 1) = d(1, 0) = cfg.omega;
    }
    return d;
}

void parallel_for(int n, int threads, const std::function<void(int)>& f) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(threads, n);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) f(i);
        });
    for (auto& t : pool) t.join();
}

std::vector<ReplicateRow> simulate(const SimConfig& cfg) {
    require(cfg.a >= 2 && cfg.b >= 2, "simulation needs a, b >= 2");
    require(cfg.rho > 0.0 && cfg.rho < 1.0, "rho must lie in (0, 1)");
    require(cfg.replicates >= 1, "at least one replicate");
    require(!cfg.methods.empty(), "at least one method");
    for (double q : cfg.q1) require(q > 0.0 && q < 1.0, "every q1 must lie in (0, 1)");
    const Mat delta = setting_delta(cfg);
    const CovModel rowcov = CovModel::dense(delta);
    const CovModel colcov = CovModel::ar1(cfg.rho, cfg.b);

    bool naive = false;
    std::vector<Method> split_methods;
    for (Method m : cfg.methods) {
        if (m == Method::Naive) naive = true;
        else split_methods.push_back(m);
    }
    if (!split_methods.empty()) require(!cfg.q1.empty(), "split methods need at least one q1");
    const std::size_t per_rep = (naive ? 1 : 0) + cfg.q1.size() * split_methods.size();

    std::vector<std::vector<ReplicateRow>> rows(static_cast<std::size_t>(cfg.replicates));
    parallel_for(cfg.replicates, cfg.threads, [&](int r) {
        auto& out = rows[static_cast<std::size_t>(r)];
        out.reserve(per_rep);
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
        auto run = [&](Method m, double q1, auto&& body) {
            ReplicateRow row;
            row.replicate = r;
            row.seed = seed;
            row.omega = cfg.null_setting ? 0.0 : cfg.omega;
            row.method = m;
            row.q1 = q1;
            try {
                body(row);
            } catch (const std::exception& ex) {
                row.ok = false;
                row.error = ex.what();
            }
            out.push_back(std::move(row));
        };
        auto fill = [&](ReplicateRow& row, const TestResult& t) {
            row.sel_i = t.selected.i;
            row.sel_j = t.selected.j;
            row.detected = t.selected.i == 0 && t.selected.j == 1;
            row.statistic = t.statistic;
            row.p_value = t.p_value;
            row.iterations_alt = t.alt.iterations;
            row.iterations_null = t.null.iterations;
            row.converged = t.alt.converged && t.null.converged;
            row.null_delta = t.null_delta;
        };

        Rng rng(seed);
        const Mat x = sample_matrix_normal(Mat::Zero(cfg.a, cfg.b), rowcov, colcov, rng);
        if (naive)
            run(Method::Naive, 1.0, [&](ReplicateRow& row) {
                const SelectionResult sel = select_entry(sample_rowcov(x, cfg.centered), "X");
                row.sel_i = sel.i;
                row.sel_j = sel.j;
                fill(row, lrt_test(Method::Naive, x, Mat(), Mat(), 1.0, 0.0, sel, cfg.lrt));
            });
        for (std::size_t qi = 0; qi < cfg.q1.size() && !split_methods.empty(); ++qi) {
            const double q1 = cfg.q1[qi];
            Vec qcol(2);
            qcol << q1, std::sqrt(1.0 - q1 * q1);
            Mat x1, x2;
            double w1 = q1, w2 = qcol(1);
            std::string split_error;
            try {
                const OrthogonalPlan plan = make_plan_dependent(1, 2, qcol);
                const FoldSet fs = general_decompose(vectorize(x).transpose(), plan,
                                                     CovModel::isotropic(cfg.lrt.s2, cfg.a * cfg.b),
                                                     derive_seed(seed, 1 + qi));
                const Vec dc = plan.data_column();
                w1 = dc(plan.fold_rows(0).front());
                w2 = dc(plan.fold_rows(1).front());
                x1 = reshape_cols(fs.folds[0].row(0).transpose(), cfg.a, cfg.b);
                x2 = reshape_cols(fs.folds[1].row(0).transpose(), cfg.a, cfg.b);
            } catch (const std::exception& ex) {
                split_error = ex.what();
            }
            for (Method m : split_methods)
                run(m, q1, [&](ReplicateRow& row) {
                    if (!split_error.empty()) throw NumericalError(split_error);
                    const SelectionResult sel = select_entry(sample_rowcov(x1, cfg.centered), "X1");
                    row.sel_i = sel.i;
                    row.sel_j = sel.j;
                    fill(row, lrt_test(m, x, x1, x2, w1, w2, sel, cfg.lrt));
                });
        }
    });

    std::vector<ReplicateRow> flat;
    flat.reserve(per_rep * rows.size());
    for (auto& v : rows)
        for (auto& row : v) flat.push_back(std::move(row));
    return flat;
}

}  // namespace gaussfold
