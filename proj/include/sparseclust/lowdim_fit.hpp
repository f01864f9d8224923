#pragma once

// Equal-weight, shared-covariance two-component Gaussian mixture fitting in
// one and two dimensions.
//
// A fit proceeds in three stages:
//  1. Moment screen. The fourth cumulant of an equal-weight two-component
//     mixture is never positive, and near the single-Gaussian model the
//     log-likelihood gain of the split model is n * kappa^2 / 48 where kappa
//     is the (most negative directional) sample excess kurtosis. If that gain
//     cannot clear the BIC penalty the single-Gaussian fit is returned
//     without running EM.
//  2. Multi-start EM. Starts come from a moment-matching grid search and
//     from quantile splits; each runs a few EM iterations, and the best one by
//     log-likelihood (lowest start index on ties) is iterated to convergence.
//  3. Selection. The split fit replaces the single-Gaussian fit only when it
//     improves the log-likelihood by more than (k/2) log n, k = dimension.

#include "sparseclust/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sparseclust {

struct LowDimEstimate {
    Vector mu1;    // canonical order: mu1 <= mu2 lexicographically
    Vector mu2;
    Matrix sigma;  // shared covariance, 1x1 or 2x2
    double loglik = 0.0;
    int restarts_used = 0;
    int iterations = 0;        // EM iterations summed over all starts
    bool equal_means = false;  // the single-Gaussian model was selected
    bool degenerate = false;   // input had zero variance
    bool floored = false;      // an eigenvalue was clipped at the variance floor
};

struct LowDimOptions {
    int max_iterations = 500;
    double rel_tol = 1e-10;
    int screen_iterations = 3;
};

/// Restarts available for failure probability delta: ceil(log(1/delta)) + 4.
int restart_budget(double delta);

/// Requires n >= 20 and eps, delta in (0, 1).
LowDimEstimate fit_1d(std::span<const double> samples, double eps, double delta, std::uint64_t seed,
                      const LowDimOptions& options = {});

/// Bivariate fit on paired columns; requires n >= 40.
LowDimEstimate fit_2d(std::span<const double> x, std::span<const double> y, double eps, double delta,
                      std::uint64_t seed, const LowDimOptions& options = {});

/// Same, for an n x 2 matrix.
LowDimEstimate fit_2d(const Matrix& samples, double eps, double delta, std::uint64_t seed,
                      const LowDimOptions& options = {});

namespace lowdim {

struct MixtureState {
    Vector mu1;
    Vector mu2;
    Matrix sigma;
};

struct EmRun {
    MixtureState state;
    double loglik = 0.0;
    int iterations = 0;
    bool converged = false;
    bool floored = false;
    std::vector<double> trace;  // log-likelihood before each M-step, then of the result
};

/// Column-wise view of 1 or 2 coordinates of n points.
struct Columns {
    std::vector<std::span<const double>> cols;
    std::size_t size() const { return cols.empty() ? 0 : cols.front().size(); }
    std::size_t dim() const { return cols.size(); }
};

/// Log-likelihood of the equal-weight mixture with the given state.
double mixture_loglik(const Columns& data, const MixtureState& state);

/// EM for the equal-weight, shared-covariance family from `init`, stopping
/// after `max_iterations` M-steps or when the relative log-likelihood change
/// drops below `rel_tol`. Covariance eigenvalues are clipped at `floor`.
EmRun run_em(const Columns& data, MixtureState init, double floor, int max_iterations, double rel_tol,
             bool record_trace = false);

/// Continues a previous run for up to `extra_iterations` more M-steps.
void continue_em(const Columns& data, EmRun& run, double floor, int extra_iterations, double rel_tol,
                 bool record_trace = false);

}  // namespace lowdim

}  // namespace sparseclust
