#include "gaussfold/fisher.hpp"

#include "gaussfold/optimize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gaussfold {

namespace {

double fd_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

// 1/2 tr(A^-1 D_j A^-1 D_j') for all pairs, with A given by its Cholesky factor.
Mat trace_info(const Eigen::LLT<Mat>& a, const std::vector<Mat>& d, double scale) {
    const auto n = static_cast<Eigen::Index>(d.size());
    std::vector<Mat> w;
    w.reserve(d.size());
    for (const Mat& dj : d) w.push_back(a.solve(dj));
    Mat out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j; k < n; ++k) {
            // tr(W_j W_k) without forming the product
            const double t = (w[j].array() * w[k].transpose().array()).sum();
            out(j, k) = out(k, j) = 0.5 * scale * t;
        }
    return out;
}

std::string format_block(const char* title, const Mat& m) {
    std::ostringstream os;
    os << title << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << "  ";
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%14.6g", m(i, j));
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace

Eigen::Index ParamModel::dim() const { return mu().size(); }

Mat ParamModel::jacobian() const {
    if (mu_jacobian) return mu_jacobian(theta);
    const Vec base = mu();
    Mat j(base.size(), theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        const double h = fd_step(theta(i));
        Vec tp = theta, tm = theta;
        tp(i) += h;
        tm(i) -= h;
        j.col(i) = (mu_of_theta(tp) - mu_of_theta(tm)) / (2.0 * h);
    }
    return j;
}

std::vector<Mat> ParamModel::sigma_derivatives() const {
    if (sigma_derivs) return sigma_derivs(phi);
    std::vector<Mat> out;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        const double h = fd_step(phi(i));
        Vec pp = phi, pm = phi;
        pp(i) += h;
        pm(i) -= h;
        out.push_back((sigma_of_phi(pp).materialize() - sigma_of_phi(pm).materialize()) / (2.0 * h));
    }
    return out;
}

void ParamModel::validate() const {
    require(static_cast<bool>(mu_of_theta), "parameter model needs mu(theta)");
    require(static_cast<bool>(sigma_of_phi), "parameter model needs Sigma(phi)");
    const Eigen::Index p = dim();
    require(sigma().dim() == p, "Sigma(phi) dimension must match mu(theta)");
    require(theta.size() <= p, "at most p mean parameters");
    require(phi.size() <= p * (p + 1) / 2, "at most p(p+1)/2 covariance parameters");
}

ParamModel mean_model(const Vec& theta, const CovModel& sigma) {
    ParamModel pm;
    pm.theta = theta;
    pm.mu_of_theta = [](const Vec& t) { return t; };
    pm.sigma_of_phi = [sigma](const Vec&) { return sigma; };
    pm.mu_jacobian = [](const Vec& t) { return Mat(Mat::Identity(t.size(), t.size())); };
    return pm;
}

Mat total_info_theta(const ParamModel& pm) {
    const Mat j = pm.jacobian();
    const auto llt = cholesky_with_jitter(pm.sigma().materialize(), "Sigma(phi)");
    return j.transpose() * llt.solve(j);
}

Mat total_info_phi(const ParamModel& pm) {
    const auto llt = cholesky_with_jitter(pm.sigma().materialize(), "Sigma(phi)");
    return trace_info(llt, pm.sigma_derivatives(), 1.0);
}

FisherReport fisher_fission(const ParamModel& pm, double q1, const CovModel& sigma_prime) {
    pm.validate();
    require(q1 > 0.0 && q1 < 1.0, "q1 must lie in (0, 1)");
    require(sigma_prime.dim() == pm.dim(), "Sigma' dimension must match the model");
    const double a = q1 * q1;
    const Mat d = a * pm.sigma().materialize() + (1.0 - a) * sigma_prime.materialize();
    const auto llt = cholesky_with_jitter(d, "q1^2 Sigma + (1 - q1^2) Sigma'");
    const Mat j = pm.jacobian();

    FisherReport r;
    r.q1 = q1;
    r.total_theta = total_info_theta(pm);
    r.i1_theta = a * j.transpose() * llt.solve(j);
    r.i1_theta = 0.5 * (r.i1_theta + r.i1_theta.transpose());
    r.i2_theta = r.total_theta - r.i1_theta;
    r.total_phi = total_info_phi(pm);
    r.i1_phi = trace_info(llt, pm.sigma_derivatives(), a * a);
    r.i2_phi = r.total_phi - r.i1_phi;
    return r;
}

std::string FisherReport::table() const {
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "q1 = %.6g\n", q1);
    os << buf;
    os << format_block("I_X1(theta)", i1_theta) << format_block("I_X2|X1(theta)", i2_theta)
       << format_block("I_X(theta)", total_theta) << format_block("I_X1(phi)", i1_phi)
       << format_block("I_X2|X1(phi)", i2_phi) << format_block("I_X(phi)", total_phi);
    auto share = [](const Mat& part, const Mat& total) {
        const double t = total.trace();
        return t > 0.0 ? part.trace() / t : 0.0;
    };
    if (total_theta.size() > 0) {
        std::snprintf(buf, sizeof buf, "fold-one share of theta information (trace): %.6f\n",
                      share(i1_theta, total_theta));
        os << buf;
    }
    if (total_phi.size() > 0) {
        std::snprintf(buf, sizeof buf, "fold-one share of phi information (trace): %.6f\n",
                      share(i1_phi, total_phi));
        os << buf;
    }
    return os.str();
}

std::vector<FoldFraction> fisher_split(const Mat& q, const std::vector<int>& sizes) {
    require(q.rows() == q.cols() && q.rows() > 0, "Q must be square");
    require((q.transpose() * q - Mat::Identity(q.rows(), q.cols())).lpNorm<Eigen::Infinity>() <= 1e-10,
            "Q must be orthogonal");
    long total = 0;
    for (int s : sizes) {
        require(s > 0, "fold sizes must be positive");
        total += s;
    }
    require(total == q.rows(), "fold sizes must sum to the number of rows");
    const double n = static_cast<double>(q.rows());
    const Vec ones = Vec::Ones(q.rows());
    std::vector<FoldFraction> out;
    Eigen::Index start = 0;
    for (int s : sizes) {
        const Vec v = q.middleRows(start, s) * ones;
        out.push_back({v.squaredNorm() / n, s / n});
        start += s;
    }
    return out;
}

std::vector<FoldFraction> fisher_split(const OrthogonalPlan& plan) {
    plan.validate();
    require(plan.r == 0, "information shares need a plan without noise rows (r = 0)");
    Mat reordered(plan.q.rows(), plan.q.cols());
    for (std::size_t i = 0; i < plan.row_order.size(); ++i)
        reordered.row(static_cast<Eigen::Index>(i)) = plan.q.row(plan.row_order[i]);
    return fisher_split(reordered, plan.sizes);
}

double tuning_objective(double gamma, const Mat& s_guess, const std::vector<Mat>& dsigma, double c,
                        bool include_diagonal) {
    require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    require(c > 0.0, "sigma' must be positive");
    const Eigen::Index p = s_guess.rows();
    const double sg = std::sqrt(gamma);
    const Mat e = sg * s_guess + (1.0 - sg) * c * c * Mat::Identity(p, p);
    const auto ls = cholesky_with_jitter(s_guess, "S");
    const auto le = cholesky_with_jitter(e, "tuning mixture");
    const Mat ts = trace_info(ls, dsigma, 2.0);
    const Mat te = trace_info(le, dsigma, 2.0);
    double obj = 0.0;
    const auto n = static_cast<Eigen::Index>(dsigma.size());
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = include_diagonal ? j : j + 1; k < n; ++k) {
            const double diff = ts(j, k) - te(j, k);
            obj += diff * diff;
        }
    return obj;
}

TuneResult tune_sigma_prime(double gamma, const CovModel& s_guess, const ParamModel& pm, bool include_diagonal) {
    require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    pm.validate();
    require(s_guess.dim() == pm.dim(), "S guess dimension must match the model");
    const std::vector<Mat> d = pm.sigma_derivatives();
    const auto n = d.size();
    require(include_diagonal ? n >= 1 : n >= 2,
            "tuning objective is empty: it needs at least two covariance parameters, or the diagonal terms");
    const Mat s = s_guess.materialize();
    auto f = [&](double logc) { return tuning_objective(gamma, s, d, std::exp(logc), include_diagonal); };
    const ScalarMinimum m = golden_section(f, std::log(1e-3), std::log(1e3), 1e-6);
    TuneResult out;
    out.q1 = std::pow(gamma, 0.25);
    out.sigma_prime = std::exp(m.x);
    out.objective = m.f;
    out.iterations = m.iterations;
    out.converged = m.converged;
    if (!out.converged) throw NumericalError("sigma' search did not converge");
    return out;
}

}  // namespace gaussfold
