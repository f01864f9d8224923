#pragma once

// Lifts one- and two-dimensional mixture fits to d-dimensional estimates
// that are accurate coordinate-wise (in the entrywise max norm).
//
//   1. V = max per-coordinate variance; low-dimensional fits run with
//      eps* = eps / 20 and delta* = delta / (10 d^2).
//   2. Fit every coordinate on its own, giving component means xi1, xi2.
//   3. If no coordinate has |xi1 - xi2| > eps V / 4, both mean estimates
//      are xi1.
//   4. Otherwise anchor at the first such coordinate i. For every other
//      coordinate j fit the pair (i, j) and pick the component whose
//      i-coordinate is within eps V / 10 of xi1(i); it supplies mu1(j), the
//      other component supplies mu2(j). No such component means failure.
//   5. Diagonal covariance entries come from the coordinate fits of step 2.
//   6. Off-diagonal entries come from bivariate fits of every pair i < j.

#include "sparseclust/lowdim_fit.hpp"
#include "sparseclust/model.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace sparseclust {

/// One step-4 alignment decision, kept so callers can re-check it.
struct AlignmentRecord {
    std::size_t other;                 // coordinate j
    std::array<double, 2> nu_anchor;   // nu_1(i), nu_2(i)
    std::array<double, 2> nu_other;    // nu_1(j), nu_2(j)
    std::array<double, 2> distances;   // |xi1(i) - nu_k(i)|
    int chosen;                        // k in {1, 2}
};

struct FitCounters {
    int univariate = 0;            // shared by the mean and diagonal stages
    int bivariate_alignment = 0;
    int bivariate_covariance = 0;
};

struct MeanEstimate {
    Vector mu1_hat;
    Vector mu2_hat;
    std::optional<std::size_t> anchor;
    Vector xi1;
    Vector xi2;
    std::vector<AlignmentRecord> alignment;
    double gap_threshold = 0.0;        // eps V / 4
    double alignment_tolerance = 0.0;  // eps V / 10
};

struct GmmEstimate {
    Vector mu1_hat;
    Vector mu2_hat;
    Matrix sigma_hat;
    double vhat = 0.0;
    std::optional<std::size_t> anchor;
    double eps = 0.0;
    double delta = 0.0;
    double eps_star = 0.0;
    double delta_star = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;

    Vector xi1;
    Vector xi2;
    std::vector<AlignmentRecord> alignment;
    double gap_threshold = 0.0;
    double alignment_tolerance = 0.0;
    FitCounters counters;

    Vector midpoint() const { return 0.5 * (mu1_hat + mu2_hat); }
    Vector half_difference() const { return 0.5 * (mu1_hat - mu2_hat); }
};

/// Largest per-coordinate variance, 1/n convention. Requires n >= 2.
double compute_vhat(const Dataset& data);

/// C * (log(d n / delta) / n)^{1/6}.
double default_eps(std::size_t n, std::size_t d, double delta, double constant = 1.0);

/// Steps 1-4. Throws AlignmentFailure when step 4 cannot match components.
MeanEstimate estimate_means(const Dataset& data, double eps, double delta, std::uint64_t seed,
                            const LowDimOptions& options = {});

/// Steps 1, 5 and 6.
Matrix estimate_covariance(const Dataset& data, double eps, double delta, std::uint64_t seed,
                           const LowDimOptions& options = {});

/// Full estimate. When `eps` is empty it defaults to default_eps(n, d, delta, eps_constant).
GmmEstimate fit_gmm(const Dataset& data, std::optional<double> eps, double delta, std::uint64_t seed,
                    double eps_constant = 1.0, const LowDimOptions& options = {});

}  // namespace sparseclust
