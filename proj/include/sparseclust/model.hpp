#pragma once

// Two-component, equal-weight, shared-covariance Gaussian mixtures:
// parameters, linear clustering rules, sampling, and exact risk oracles.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace sparseclust {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Means of both components and the covariance they share.
/// The covariance is validated positive definite at construction; only its
/// lower triangle is read, the upper one is mirrored from it.
class GmmParams {
public:
    GmmParams(Vector mu1, Vector mu2, const Matrix& sigma);

    const Vector& mu1() const noexcept { return mu1_; }
    const Vector& mu2() const noexcept { return mu2_; }
    const Matrix& sigma() const noexcept { return sigma_; }
    Eigen::Index dim() const noexcept { return mu1_.size(); }

    /// (mu1 + mu2) / 2
    Vector midpoint() const { return 0.5 * (mu1_ + mu2_); }
    /// (mu1 - mu2) / 2
    Vector half_difference() const { return 0.5 * (mu1_ - mu2_); }

    /// Lower Cholesky factor of sigma.
    const Matrix& cholesky_factor() const noexcept { return chol_; }

    GmmParams with_swapped_components() const { return GmmParams(mu2_, mu1_, sigma_); }

private:
    Vector mu1_;
    Vector mu2_;
    Matrix sigma_;
    Matrix chol_;
};

/// x -> 1 if (center - x)^T direction < 0, else 2.
struct LinearRule {
    Vector center;
    Vector direction;

    /// An all-zero direction assigns every point to component 2.
    bool is_degenerate() const { return direction.isZero(0.0); }

    int classify(const Eigen::Ref<const Vector>& x) const {
        return (center - x).dot(direction) < 0.0 ? 1 : 2;
    }
};

/// Sorted, strictly increasing coordinate indices.
class FeatureSet {
public:
    FeatureSet() = default;
    FeatureSet(std::vector<std::size_t> indices, std::size_t dim);

    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    bool contains(std::size_t i) const;

    friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

private:
    std::vector<std::size_t> indices_;
};

/// n x d sample matrix, one row per point.
struct Dataset {
    Matrix points;
    std::optional<std::uint64_t> seed;

    Eigen::Index size() const noexcept { return points.rows(); }
    Eigen::Index dim() const noexcept { return points.cols(); }

    /// Throws PreconditionError unless n >= 1 and every entry is finite.
    void validate() const;
};

struct LabeledDataset {
    Dataset data;
    std::vector<int> labels;  // values in {1, 2}

    void validate() const;
};

/// Solves sigma * beta = Delta_mu. Throws SingularMatrixError when the
/// condition number exceeds 1e12.
Vector true_discriminant(const GmmParams& params);

/// { i : |beta(i)| > zero_tol }.
FeatureSet relevant_features(const GmmParams& params, double zero_tol);
/// Same with zero_tol = 1e-9 * ||beta||_inf.
FeatureSet relevant_features(const GmmParams& params);

/// Draws n labeled points. Point i uses only counter blocks (i, *) of the
/// seed's stream, so output is bit-identical for identical arguments.
LabeledDataset sample(const GmmParams& params, std::size_t n, std::uint64_t seed);

LinearRule bayes_rule(const GmmParams& params);

/// Probability that the rule disagrees with the latent label, minimized over
/// label permutations. Degenerate rules have overlap 1/2.
double exact_overlap(const LinearRule& rule, const GmmParams& params);

/// Overlap of the Bayes rule, Phi(-sqrt(rho)).
double bayes_overlap(const GmmParams& params);

/// exact_overlap(rule) - bayes_overlap, clamped at zero for rounding noise.
double excess_risk(const LinearRule& rule, const GmmParams& params);

/// Fraction of points where the rule and the labels disagree, under the best
/// of the two label permutations.
double empirical_misclustering(const LinearRule& rule, const LabeledDataset& data);

/// rho = Delta_mu^T Sigma^{-1} Delta_mu.
double signal_energy(const GmmParams& params);

enum class RestrictedEigenMode {
    automatic,    ///< exhaustive when d <= 12 and s <= 3, lower bound otherwise
    exhaustive,   ///< throws PreconditionError outside the exhaustive range
    lower_bound,  ///< lambda_min(sigma)
};

struct RestrictedEigenResult {
    double value;
    bool exhaustive;
};

/// Estimate of min over |S| <= s and cone directions ||v_{S^c}||_1 <= ||v_S||_1
/// of ||sigma v||_2 / ||v||_2.
///
/// Exhaustive mode visits every support of size <= s. Within each cone it
/// starts from the coordinate vectors of S, from the eigenvectors of sigma
/// that lie in the cone, and from `grid_resolution` deterministic directions
/// spread across the cone, then refines each start with 100 sweeps of
/// projected coordinate descent on the Rayleigh quotient of sigma^2. The
/// result is an upper-biased estimate, never below lambda_min(sigma).
RestrictedEigenResult restricted_eigenvalue(const Matrix& sigma, std::size_t s,
                                            std::size_t grid_resolution,
                                            RestrictedEigenMode mode = RestrictedEigenMode::automatic);

/// min_{i in S} |beta(i)| >= cprime * s * (log d / n)^{1/6}; vacuously true
/// when S is empty.
bool check_signal_strength(const GmmParams& params, std::size_t n, std::size_t d, std::size_t s,
                           double cprime = 1.0);

/// Mixture parameters error under the better component matching:
/// max(max_k ||mu_k - muhat_pi(k)||_inf^2, ||sigma - sigmahat||_inf).
struct ParameterError {
    double mean_sq_linf;
    double cov_linf;
    bool swapped;
    double combined() const { return mean_sq_linf > cov_linf ? mean_sq_linf : cov_linf; }
};

ParameterError parameter_error(const GmmParams& truth, const Vector& mu1_hat, const Vector& mu2_hat,
                               const Matrix& sigma_hat);

}  // namespace sparseclust
