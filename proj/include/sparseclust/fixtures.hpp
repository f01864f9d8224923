#pragma once

// Synthetic ground-truth mixtures for experiments and tests.

#include "sparseclust/model.hpp"

#include <cstddef>
#include <optional>

namespace sparseclust {

/// A correlated pair (unit variances, given correlation) whose means differ
/// only in coordinate 1, padded to d coordinates with independent
/// unit-variance noise. mu1 = -mu2 = (0, h, 0, ...). With no rho_target,
/// h = 1; otherwise h is chosen so that the signal energy equals rho_target.
/// Relevant features are {0, 1} whenever correlation != 0.
GmmParams figure1_embed(std::size_t d, double correlation = 0.8, std::optional<double> rho_target = std::nullopt);

/// Sigma = I and mu1 = -mu2 = h (e_0 + ... + e_{s-1}). With no rho_target,
/// h = 1; otherwise h = sqrt(rho_target / s).
GmmParams identity_sparse(std::size_t d, std::size_t s, std::optional<double> rho_target = std::nullopt);

}  // namespace sparseclust
