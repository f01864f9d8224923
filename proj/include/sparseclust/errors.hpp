#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace sparseclust {

/// Bad arguments or violated preconditions (dimension mismatch, n too small, ...).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A covariance-like matrix could not be inverted or factorized.
class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Base for outcomes where the algorithm ran but could not produce an answer.
class AlgorithmFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No component of a bivariate fit lies within the alignment tolerance of the
/// anchor's univariate mean estimate.
class AlignmentFailure : public AlgorithmFailure {
public:
    AlignmentFailure(std::size_t anchor, std::size_t other, std::array<double, 2> distances,
                     double tolerance);

    std::size_t anchor() const noexcept { return anchor_; }
    std::size_t other() const noexcept { return other_; }
    const std::array<double, 2>& distances() const noexcept { return distances_; }
    double tolerance() const noexcept { return tolerance_; }

private:
    std::size_t anchor_;
    std::size_t other_;
    std::array<double, 2> distances_;
    double tolerance_;
};

class InfeasibleProgram : public AlgorithmFailure {
public:
    using AlgorithmFailure::AlgorithmFailure;
};

}  // namespace sparseclust
