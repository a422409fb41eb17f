#pragma once

// Reference computations written independently of the library: plain dense
// algebra with no structure exploited.

#include "gaussfold/types.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using gaussfold::Mat;
using gaussfold::Vec;

inline double mvn_logpdf(const Vec& x, const Vec& mean, const Mat& cov) {
    const Eigen::LDLT<Mat> ldlt(cov);
    const Vec r = x - mean;
    const double quad = r.dot(ldlt.solve(r));
    const double logdet = ldlt.vectorD().array().log().sum();
    return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * M_PI) + logdet + quad);
}

struct Conditional {
    Vec mean;
    Mat cov;
};

// Law of the second block given the first block equals x1 (Schur complement).
inline Conditional condition(const Vec& mean, const Mat& cov, Eigen::Index p1, const Vec& x1) {
    const Eigen::Index p2 = cov.rows() - p1;
    const Mat c11 = cov.topLeftCorner(p1, p1);
    const Mat c21 = cov.bottomLeftCorner(p2, p1);
    const Mat c22 = cov.bottomRightCorner(p2, p2);
    const Eigen::PartialPivLU<Mat> lu(c11);
    Conditional out;
    out.mean = mean.tail(p2) + c21 * lu.solve(x1 - mean.head(p1));
    out.cov = c22 - c21 * lu.solve(c21.transpose());
    return out;
}

// Completes v to an orthonormal basis by classical Gram-Schmidt on e_1..e_K.
inline Mat gram_schmidt_complete(const Vec& v) {
    const Eigen::Index k = v.size();
    Mat basis(k, k);
    basis.col(0) = v.normalized();
    Eigen::Index filled = 1;
    for (Eigen::Index e = 0; e < k && filled < k; ++e) {
        Vec c = Vec::Unit(k, e);
        for (Eigen::Index j = 0; j < filled; ++j) c -= basis.col(j).dot(c) * basis.col(j);
        if (c.norm() > 1e-8) basis.col(filled++) = c.normalized();
    }
    return basis;
}

inline Mat ar1_matrix(double rho, Eigen::Index b) {
    Mat g(b, b);
    for (Eigen::Index i = 0; i < b; ++i)
        for (Eigen::Index j = 0; j < b; ++j) g(i, j) = std::pow(rho, std::abs(static_cast<double>(i - j)));
    return g;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Mat random_spd(Eigen::Index p, std::mt19937_64& gen, double ridge = 0.5) {
    std::normal_distribution<double> z;
    Mat a(p, p);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < p; ++j) a(i, j) = z(gen);
    return a * a.transpose() / static_cast<double>(p) + ridge * Mat::Identity(p, p);
}

inline Mat random_correlation(Eigen::Index p, std::mt19937_64& gen) {
    const Mat s = random_spd(p, gen, 0.3);
    const Vec d = s.diagonal().cwiseSqrt().cwiseInverse();
    return d.asDiagonal() * s * d.asDiagonal();
}

inline Vec random_vec(Eigen::Index p, std::mt19937_64& gen) {
    std::normal_distribution<double> z;
    Vec v(p);
    for (Eigen::Index i = 0; i < p; ++i) v(i) = z(gen);
    return v;
}

inline Vec random_unit(Eigen::Index k, std::mt19937_64& gen) {
    Vec v = random_vec(k, gen);
    return v / v.norm();
}

// Sample mean and standard error of the mean.
struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

inline Moments moments(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size() - 1);
    return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

}  // namespace oracle
