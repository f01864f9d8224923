#pragma once

// Sparse discriminant direction by l1 minimization under an l-infinity
// residual constraint, the resulting plug-in clustering rule, thresholded
// support recovery, and the accompanying risk and error bounds.

#include "sparseclust/highdim_fit.hpp"
#include "sparseclust/model.hpp"

#include <cstddef>

namespace sparseclust {

enum class DantzigStatus { optimal, infeasible };

const char* to_string(DantzigStatus status);

struct DantzigSolution {
    Vector beta_hat;
    double lambda = 0.0;
    double l1_norm = 0.0;
    double max_residual = 0.0;  // ||sigma_hat * beta_hat - delta_mu_hat||_inf
    DantzigStatus status = DantzigStatus::infeasible;
    int iterations = 0;
    double certificate_residual = 0.0;
};

inline constexpr double kDantzigFeasTol = 1e-8;

/// argmin ||z||_1 subject to ||sigma_hat z - delta_mu_hat||_inf <= lambda.
///
/// Solved as the linear program over z = u - w, u, w >= 0:
///     min 1^T (u + w)  s.t.  sigma_hat (u - w) <= delta_mu_hat + lambda,
///                           -sigma_hat (u - w) <= lambda - delta_mu_hat.
/// This is the same program as the epigraph form min 1^T t, -t <= z <= t.
DantzigSolution solve_dantzig(const Matrix& sigma_hat, const Vector& delta_mu_hat, double lambda);

/// Rule with center (mu1_hat + mu2_hat) / 2 and direction beta_hat.
/// Throws PreconditionError unless the solution is optimal.
LinearRule plug_in_rule(const GmmEstimate& estimate, const DantzigSolution& solution);
LinearRule plug_in_rule(const Vector& mu1_hat, const Vector& mu2_hat, const DantzigSolution& solution);

/// c1 r^{1/6} sqrt(D0 s rho) / eta + sqrt(c1) r^{1/12}, with r = log(d n / delta) / n.
double corollary_lambda(std::size_t n, std::size_t d, double delta, double c1, double d0, std::size_t s,
                        double rho, double eta);

/// omega = eps0 D0 s / eta^2, the quantity governing the risk rate.
double corollary_omega(double eps0, double d0, std::size_t s, double eta);

/// Heuristic signal energy for data-only runs: delta_mu_hat^T beta_hat.
double plugin_signal_energy(const Vector& delta_mu_hat, const DantzigSolution& solution);

struct SupportEstimate {
    FeatureSet features;
    double threshold = 0.0;             // c lambda sqrt(s)
    bool recovery_condition_met = false;  // c > 2 / eta
};

/// { i : |beta_hat(i)| > c lambda sqrt(s) }. Thresholding the magnitude keeps
/// negative coordinates, since the sign of beta only fixes the label names.
SupportEstimate threshold_support(const DantzigSolution& solution, std::size_t s, double c, double eta);

/// 2 lambda sqrt(s) / eta.
double linf_error_bound(double lambda, std::size_t s, double eta);

struct BoundReport {
    double rho = 0.0;
    double beta_l1 = 0.0;
    double eps1 = 0.0;
    double eps2 = 0.0;
    double bound = 0.0;
    bool conditions_met = false;  // eps ||beta||_1 + sqrt(eps) <= lambda
    bool equal_means = false;     // rho == 0; bound reported as 1/2
};

/// Excess-risk bound for the plug-in rule when the mixture parameters are
/// known to within eps (squared means, covariance) in max norm:
///     phi(max((rho - eps1) / sqrt(rho + eps2), 0)) (eps1 + eps2) / sqrt(rho)
/// with eps1 = (2 lambda + 3 sqrt(eps)) ||beta||_1 and
///      eps2 = eps ||beta||_1^2 + 3 (lambda + sqrt(eps)) ||beta||_1.
BoundReport proposition1_bound(const GmmParams& params, double eps, double lambda);

}  // namespace sparseclust
