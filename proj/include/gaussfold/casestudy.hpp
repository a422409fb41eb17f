#pragma once

#include "gaussfold/inference.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gaussfold {

enum class LatentVariance {
    Unit,        // AR(1) innovations with variance 1
    Stationary,  // innovations q1^2 (1 - rho^2), so the latent series has variance q1^2
};

struct DeltaRhoEstimate {
    Mat delta_star;  // moment estimate before the correlation conversion
    Mat delta_hat;   // correlation matrix
    double rho_hat = 0.0;
    bool floored = false;  // some eigenvalue of delta_star was raised to 0.1
};

/// Kalman-filter log-likelihood of one series under x_t = s_t + e_t,
/// s_t = rho s_{t-1} + u_t, Var e = emission_var, Var u = innovation_var,
/// with s_1 drawn from the stationary law.
double ar1_noise_loglik(const Vec& y, double rho, double innovation_var, double emission_var);

/// Moment estimate of Delta from fold one and the latent AR(1) estimate of rho
/// with rows treated as independent series.
DeltaRhoEstimate estimate_delta_rho(const Mat& x1, double q1, LatentVariance latent = LatentVariance::Unit);
DeltaRhoEstimate estimate_delta_rho(const Vec& x1_vec, double q1, int a, int b,
                                    LatentVariance latent = LatentVariance::Unit);

enum class Linkage { Average, Single, Complete };
Linkage linkage_from_string(const std::string& name);
std::string to_string(Linkage l);

struct Merge {
    int left = 0;    // cluster ids: 0..a-1 are leaves, a + m is the m-th merge
    int right = 0;
    double height = 0.0;
};

struct ClusterPath {
    int a = 0;
    std::vector<Merge> merges;
    /// assignments[h - 1][i] = cluster label of item i in the h-cluster
    /// solution, labels numbered by each cluster's smallest member.
    std::vector<std::vector<int>> assignments;

    const std::vector<int>& clusters(int h) const;
};

/// Agglomerative clustering on the distance 1 - Delta_hat. Ties between equal
/// distances go to the pair whose smallest members come first.
ClusterPath hier_cluster(const Mat& delta_hat, Linkage linkage = Linkage::Average);

/// Sets every between-cluster entry to zero.
Mat zero_between(const Mat& delta_hat, const std::vector<int>& labels);

struct PdRepair {
    Mat matrix;
    bool repaired = false;
    double frobenius_change = 0.0;
    bool large = false;  // change above 10% of the input norm
};

/// Leaves PD matrices alone; otherwise floors eigenvalues at 1e-6 and rescales
/// the diagonal back to one.
PdRepair repair_correlation(const Mat& m);

struct CurvePoint {
    int h = 0;
    double cll = 0.0;
    bool repaired = false;
    bool large_repair = false;
    double repair_change = 0.0;
};

struct ValidationCurve {
    std::vector<CurvePoint> points;  // h = 1..a
    int h_hat = 0;
};

/// Conditional log-likelihood of fold two given fold one for each clustering
/// level; h_hat is the smallest h attaining the maximum.
ValidationCurve select_clusters(const ClusterPath& path, const Mat& delta_hat, double rho_hat, const Mat& x1,
                                const Mat& x2, double q1, double q2, double s2 = 1.0);

struct ClusterStudyConfig {
    int a = 12;
    int b = 60;
    int blocks = 3;
    double within = 0.7;   // within-block correlation of the truth
    double rho = 0.5;
    double q1 = 0.8408964152537145;  // 0.5^(1/4)
    int replicates = 100;
    std::uint64_t seed = 7;
    int threads = 1;
    Linkage linkage = Linkage::Average;
    LatentVariance latent = LatentVariance::Unit;
};

struct ClusterStudyRow {
    int replicate = 0;
    std::uint64_t seed = 0;
    int h_hat = 0;
    double rho_hat = 0.0;
    bool recovered = false;  // h_hat equals the true block count
    bool any_repair = false;
    bool ok = true;
    std::string error;
    ValidationCurve curve;
};

/// Block-diagonal truth: `blocks` equal blocks with constant within-block correlation.
Mat block_truth(int a, int blocks, double within);

/// One fit-and-validate run on the data matrix X.
struct ClusterRun {
    DeltaRhoEstimate estimate;
    ClusterPath path;
    ValidationCurve curve;
    Mat x1, x2;
};
ClusterRun run_cluster_validation(const Mat& x, double q1, std::uint64_t seed, Linkage linkage = Linkage::Average,
                                  LatentVariance latent = LatentVariance::Unit);

std::vector<ClusterStudyRow> cluster_study(const ClusterStudyConfig& cfg);

}  // namespace gaussfold
