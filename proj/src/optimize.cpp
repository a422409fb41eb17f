#include "gaussfold/optimize.hpp"

#include <cmath>
#include <limits>

namespace gaussfold {

ScalarMinimum golden_section(const std::function<double(double)>& f, double lo, double hi, double tol,
                             int max_iter) {
    require(lo < hi, "golden_section needs lo < hi");
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    ScalarMinimum out;
    int it = 0;
    for (; it < max_iter && (b - a) > tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    out.iterations = it;
    out.converged = (b - a) <= tol;
    if (fc <= fd) {
        out.x = c;
        out.f = fc;
    } else {
        out.x = d;
        out.f = fd;
    }
    return out;
}

namespace {

struct Point {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;
    Vec grad;
};

// Cubic interpolation of the minimizer between two bracketing points,
// safeguarded to stay inside the interval.
double interpolate(const Point& lo, const Point& hi) {
    const double d1 = lo.slope + hi.slope - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
    const double disc = d1 * d1 - lo.slope * hi.slope;
    double t = 0.5 * (lo.alpha + hi.alpha);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), hi.alpha - lo.alpha);
        const double cand = hi.alpha - (hi.alpha - lo.alpha) * (hi.slope + d2 - d1) / (hi.slope - lo.slope + 2.0 * d2);
        if (std::isfinite(cand)) t = cand;
    }
    const double left = std::min(lo.alpha, hi.alpha), right = std::max(lo.alpha, hi.alpha);
    const double margin = 0.1 * (right - left);
    if (t < left + margin || t > right - margin) t = 0.5 * (left + right);
    return t;
}

}  // namespace

BfgsResult bfgs_minimize(const Objective& f, Vec x0, const BfgsOptions& opts) {
    const Eigen::Index n = x0.size();
    BfgsResult res;
    res.x = std::move(x0);
    res.grad = Vec::Zero(n);
    res.f = f(res.x, &res.grad);
    res.evaluations = 1;
    if (!std::isfinite(res.f) || !res.grad.allFinite())
        throw NumericalError("objective is not finite at the starting point");

    Mat h_inv = Mat::Identity(n, n);
    bool scaled = false;
    if (opts.initial_inverse_hessian.size() > 0) {
        require(opts.initial_inverse_hessian.rows() == n && opts.initial_inverse_hessian.cols() == n,
                "initial inverse Hessian has the wrong size");
        h_inv = opts.initial_inverse_hessian;
        scaled = true;
    }
    bool restarted = false;
    auto finish = [&](BfgsResult& r) -> BfgsResult& {
        r.inverse_hessian = h_inv;
        return r;
    };
    for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
        if (res.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            return finish(res);
        }
        Vec dir = -h_inv * res.grad;
        double slope0 = res.grad.dot(dir);
        if (!(slope0 < 0.0)) {
            h_inv.setIdentity();
            dir = -res.grad;
            slope0 = -res.grad.squaredNorm();
        }

        auto eval = [&](double alpha) {
            Point p;
            p.alpha = alpha;
            p.grad = Vec::Zero(n);
            p.f = f(res.x + alpha * dir, &p.grad);
            ++res.evaluations;
            if (!std::isfinite(p.f) || !p.grad.allFinite()) {
                p.f = std::numeric_limits<double>::infinity();
                p.slope = std::numeric_limits<double>::quiet_NaN();
            } else {
                p.slope = p.grad.dot(dir);
            }
            return p;
        };

        const Point start{0.0, res.f, slope0, res.grad};
        // Near the optimum f stops resolving decreases; accept points whose
        // slope satisfies the curvature test and whose value is within
        // rounding of the start (approximate Wolfe conditions).
        const double f_noise = 1e-12 * (1.0 + std::abs(res.f));
        auto approx_wolfe = [&](const Point& p) {
            return std::isfinite(p.f) && p.f <= start.f + f_noise && p.slope >= opts.c2 * slope0 &&
                   p.slope <= -(1.0 - 2.0 * opts.c1) * slope0;
        };
        double alpha = 1.0;
        if (!scaled) alpha = std::min(1.0, 1.0 / std::max(1e-12, res.grad.lpNorm<Eigen::Infinity>()));
        Point prev = start, accepted;
        bool found = false;
        int evals = 0;

        auto zoom = [&](Point lo, Point hi) {
            while (evals < opts.max_line_evals) {
                const double a = std::isfinite(hi.f) && std::isfinite(hi.slope) ? interpolate(lo, hi)
                                                                                  : 0.5 * (lo.alpha + hi.alpha);
                const Point p = eval(a);
                ++evals;
                if (approx_wolfe(p)) {
                    accepted = p;
                    return true;
                }
                if (!std::isfinite(p.f) || p.f > start.f + opts.c1 * a * slope0 || p.f >= lo.f) {
                    hi = p;
                } else {
                    if (std::abs(p.slope) <= -opts.c2 * slope0) {
                        accepted = p;
                        return true;
                    }
                    if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                    lo = p;
                }
                if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
            }
            // accept the best sufficient-decrease point even without curvature
            if (lo.alpha > 0.0) {
                accepted = lo;
                return true;
            }
            return false;
        };

        while (evals < opts.max_line_evals) {
            const Point p = eval(alpha);
            ++evals;
            if (approx_wolfe(p) && p.f > start.f + opts.c1 * alpha * slope0) {
                accepted = p;
                found = true;
                break;
            }
            if (!std::isfinite(p.f) || p.f > start.f + opts.c1 * alpha * slope0 ||
                (evals > 1 && p.f >= prev.f)) {
                found = zoom(prev, p);
                break;
            }
            if (std::abs(p.slope) <= -opts.c2 * slope0) {
                accepted = p;
                found = true;
                break;
            }
            if (p.slope >= 0.0) {
                found = zoom(p, prev);
                break;
            }
            prev = p;
            alpha *= 2.0;
        }
        if (!found && !restarted) {
            // a poor quasi-Newton model can block progress; retry once from steepest descent
            h_inv.setIdentity();
            scaled = false;
            restarted = true;
            continue;
        }
        if (!found) {
            res.stalled = true;
            res.message = "line search failed to decrease the objective";
            return finish(res);
        }

        restarted = false;
        const Vec s = accepted.alpha * dir;
        const Vec y = accepted.grad - res.grad;
        const double sy = s.dot(y);
        const double f_prev = res.f;
        res.x += s;
        res.f = accepted.f;
        res.grad = accepted.grad;
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (!scaled) {
                h_inv *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Vec hy = h_inv * y;
            h_inv += (rho * rho * y.dot(hy) + rho) * s * s.transpose() - rho * (hy * s.transpose() + s * hy.transpose());
        }
        if (std::abs(f_prev - res.f) <= 1e-15 * std::max(1.0, std::abs(res.f)) && s.norm() <= 1e-14 * (1.0 + res.x.norm())) {
            if (res.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol) continue;
            res.stalled = true;
            res.message = "no further progress possible in floating point";
            return finish(res);
        }
    }
    res.converged = res.grad.lpNorm<Eigen::Infinity>() < opts.grad_tol;
    res.message = res.converged ? "gradient tolerance reached" : "iteration limit reached";
    return finish(res);
}

}  // namespace gaussfold
