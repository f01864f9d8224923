#include "sparseclust/model.hpp"

#include "sparseclust/errors.hpp"
#include "sparseclust/normal.hpp"
#include "sparseclust/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sparseclust {

namespace {

constexpr double kMaxCondition = 1e12;

Matrix mirrored_lower(const Matrix& m) {
    Matrix out = m;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = j + 1; i < m.rows(); ++i) out(j, i) = out(i, j);
    return out;
}

double linf(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

GmmParams::GmmParams(Vector mu1, Vector mu2, const Matrix& sigma)
    : mu1_(std::move(mu1)), mu2_(std::move(mu2)) {
    const auto d = mu1_.size();
    if (d == 0) throw PreconditionError("GmmParams: dimension must be positive");
    if (mu2_.size() != d || sigma.rows() != d || sigma.cols() != d)
        throw PreconditionError("GmmParams: mu1, mu2 and sigma dimensions disagree");
    if (!mu1_.allFinite() || !mu2_.allFinite() || !sigma.allFinite())
        throw PreconditionError("GmmParams: non-finite entries");
    sigma_ = mirrored_lower(sigma);
    Eigen::LLT<Matrix> llt(sigma_);
    if (llt.info() != Eigen::Success)
        throw PreconditionError("GmmParams: sigma is not positive definite");
    chol_ = llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues()(0) <= 0.0)
        throw PreconditionError("GmmParams: sigma is not positive definite");
}

FeatureSet::FeatureSet(std::vector<std::size_t> indices, std::size_t dim) : indices_(std::move(indices)) {
    for (std::size_t k = 0; k < indices_.size(); ++k) {
        if (indices_[k] >= dim) throw PreconditionError("FeatureSet: index out of range");
        if (k > 0 && indices_[k] <= indices_[k - 1])
            throw PreconditionError("FeatureSet: indices must be strictly increasing");
    }
}

bool FeatureSet::contains(std::size_t i) const {
    return std::binary_search(indices_.begin(), indices_.end(), i);
}

void Dataset::validate() const {
    if (points.rows() < 1) throw PreconditionError("Dataset: need at least one point");
    if (points.cols() < 1) throw PreconditionError("Dataset: need at least one coordinate");
    if (!points.allFinite()) throw PreconditionError("Dataset: non-finite entries");
}

void LabeledDataset::validate() const {
    data.validate();
    if (static_cast<Eigen::Index>(labels.size()) != data.size())
        throw PreconditionError("LabeledDataset: label count differs from point count");
    for (int y : labels)
        if (y != 1 && y != 2) throw PreconditionError("LabeledDataset: labels must be 1 or 2");
}

Vector true_discriminant(const GmmParams& params) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(params.sigma(), Eigen::EigenvaluesOnly);
    const auto& ev = eig.eigenvalues();
    if (ev(0) <= 0.0 || ev(ev.size() - 1) / ev(0) > kMaxCondition)
        throw SingularMatrixError("true_discriminant: covariance is numerically singular");
    // Cholesky solve plus one step of iterative refinement.
    const Eigen::LLT<Matrix> llt(params.sigma());
    const Vector rhs = params.half_difference();
    Vector beta = llt.solve(rhs);
    beta += llt.solve(rhs - params.sigma() * beta);
    return beta;
}

FeatureSet relevant_features(const GmmParams& params, double zero_tol) {
    if (!(zero_tol >= 0.0)) throw PreconditionError("relevant_features: zero_tol must be >= 0");
    const Vector beta = true_discriminant(params);
    std::vector<std::size_t> idx;
    for (Eigen::Index i = 0; i < beta.size(); ++i)
        if (std::abs(beta(i)) > zero_tol) idx.push_back(static_cast<std::size_t>(i));
    return FeatureSet(std::move(idx), static_cast<std::size_t>(beta.size()));
}

FeatureSet relevant_features(const GmmParams& params) {
    const Vector beta = true_discriminant(params);
    return relevant_features(params, 1e-9 * beta.cwiseAbs().maxCoeff());
}

LabeledDataset sample(const GmmParams& params, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw PreconditionError("sample: n must be positive");
    const auto d = params.dim();
    const Matrix& chol = params.cholesky_factor();
    const rng::CounterStream stream(seed);

    LabeledDataset out;
    out.data.points.resize(static_cast<Eigen::Index>(n), d);
    out.data.seed = seed;
    out.labels.resize(n);

    Vector z(d);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = (stream.block(i, 0)[0] & 1u) ? 2 : 1;
        out.labels[i] = label;
        for (Eigen::Index k = 0; k < d; k += 2) {
            const auto pair = stream.normal_pair(i, 1 + static_cast<std::uint64_t>(k / 2));
            z(k) = pair[0];
            if (k + 1 < d) z(k + 1) = pair[1];
        }
        const Vector& mu = label == 1 ? params.mu1() : params.mu2();
        const auto row = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < d; ++j) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k <= j; ++k) {
                const double l = chol(j, k);
                if (l != 0.0) acc += l * z(k);
            }
            out.data.points(row, j) = mu(j) + acc;
        }
    }
    return out;
}

LinearRule bayes_rule(const GmmParams& params) {
    return LinearRule{params.midpoint(), true_discriminant(params)};
}

double exact_overlap(const LinearRule& rule, const GmmParams& params) {
    if (rule.center.size() != params.dim() || rule.direction.size() != params.dim())
        throw PreconditionError("exact_overlap: rule dimension differs from params");
    if (rule.is_degenerate()) return 0.5;
    const Vector& b = rule.direction;
    const double scale = std::sqrt(b.dot(params.sigma() * b));
    const double signal = std::abs(params.half_difference().dot(b));
    const double offset = std::abs((params.midpoint() - rule.center).dot(b));
    return 0.5 * normal_cdf(-(signal + offset) / scale) + 0.5 * normal_cdf(-(signal - offset) / scale);
}

double signal_energy(const GmmParams& params) {
    return params.half_difference().dot(true_discriminant(params));
}

double bayes_overlap(const GmmParams& params) {
    return normal_cdf(-std::sqrt(std::max(signal_energy(params), 0.0)));
}

double excess_risk(const LinearRule& rule, const GmmParams& params) {
    const double diff = exact_overlap(rule, params) - bayes_overlap(params);
    return diff < 0.0 ? 0.0 : diff;
}

double empirical_misclustering(const LinearRule& rule, const LabeledDataset& data) {
    data.validate();
    const auto& x = data.data.points;
    std::size_t disagree = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        if (rule.classify(x.row(i).transpose()) != data.labels[static_cast<std::size_t>(i)]) ++disagree;
    const auto n = static_cast<double>(x.rows());
    const double rate = static_cast<double>(disagree) / n;
    return std::min(rate, 1.0 - rate);
}

namespace {

struct ConeSearch {
    const Matrix& gram;  // sigma^T sigma
    std::vector<char> in_support;

    bool feasible(const Vector& v) const {
        double on = 0.0, off = 0.0;
        for (Eigen::Index i = 0; i < v.size(); ++i) (in_support[i] ? on : off) += std::abs(v(i));
        return off <= on * (1.0 + 1e-12);
    }

    double rayleigh(const Vector& v) const { return v.dot(gram * v) / v.dot(v); }

    // Projected coordinate descent on the Rayleigh quotient of gram.
    double refine(Vector v, int sweeps) const {
        const Eigen::Index d = v.size();
        double best = rayleigh(v);
        for (int sweep = 0; sweep < sweeps; ++sweep) {
            v /= v.norm();
            Vector gv = gram * v;
            double a = v.dot(gv);
            double p = v.dot(v);
            double on = 0.0, off = 0.0;
            for (Eigen::Index i = 0; i < d; ++i) (in_support[i] ? on : off) += std::abs(v(i));
            bool moved = false;
            for (Eigen::Index j = 0; j < d; ++j) {
                const double b = gv(j), c = gram(j, j), q = v(j);
                // Stationary points of (a + 2tb + t^2 c) / (p + 2tq + t^2).
                const double qa = c * q - b, qb = c * p - a, qc = b * p - a * q;
                double roots[2];
                int nroots = 0;
                if (std::abs(qa) > 1e-300) {
                    const double disc = qb * qb - 4.0 * qa * qc;
                    if (disc >= 0.0) {
                        const double sq = std::sqrt(disc);
                        roots[nroots++] = (-qb + sq) / (2.0 * qa);
                        roots[nroots++] = (-qb - sq) / (2.0 * qa);
                    }
                } else if (std::abs(qb) > 1e-300) {
                    roots[nroots++] = -qc / qb;
                }
                double best_t = 0.0;
                double best_val = a / p;
                for (int r = 0; r < nroots; ++r) {
                    double t = roots[r];
                    if (!std::isfinite(t)) continue;
                    // Project the step back into the cone.
                    if (in_support[j]) {
                        const double need = off - (on - std::abs(q));
                        if (need > 0.0 && std::abs(q + t) < need)
                            t = (q + t >= 0.0 ? need : -need) - q;
                    } else {
                        const double room = on - (off - std::abs(q));
                        t = std::clamp(t, -q - room, -q + room);
                    }
                    const double den = p + 2.0 * t * q + t * t;
                    if (den <= 0.0) continue;
                    const double val = (a + 2.0 * t * b + t * t * c) / den;
                    if (val < best_val) {
                        best_val = val;
                        best_t = t;
                    }
                }
                if (best_t != 0.0) {
                    (in_support[j] ? on : off) += std::abs(q + best_t) - std::abs(q);
                    a += 2.0 * best_t * b + best_t * best_t * c;
                    p += 2.0 * best_t * q + best_t * best_t;
                    gv += best_t * gram.col(j);
                    v(j) += best_t;
                    moved = true;
                }
            }
            if (feasible(v)) best = std::min(best, rayleigh(v));
            if (!moved) break;
        }
        return best;
    }
};

void for_each_support(std::size_t d, std::size_t max_size, const auto& visit) {
    std::vector<std::size_t> current;
    auto recurse = [&](auto&& self, std::size_t start) -> void {
        if (!current.empty()) visit(current);
        if (current.size() == max_size) return;
        for (std::size_t i = start; i < d; ++i) {
            current.push_back(i);
            self(self, i + 1);
            current.pop_back();
        }
    };
    recurse(recurse, 0);
}

}  // namespace

RestrictedEigenResult restricted_eigenvalue(const Matrix& sigma, std::size_t s, std::size_t grid_resolution,
                                            RestrictedEigenMode mode) {
    const auto d = static_cast<std::size_t>(sigma.rows());
    if (sigma.rows() != sigma.cols() || d == 0) throw PreconditionError("restricted_eigenvalue: sigma must be square");
    if (s == 0 || s > d) throw PreconditionError("restricted_eigenvalue: need 1 <= s <= d");
    if (grid_resolution == 0) throw PreconditionError("restricted_eigenvalue: grid_resolution must be positive");
    const double tol = 1e-12 * std::max(1.0, linf(sigma));
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > tol)
        throw PreconditionError("restricted_eigenvalue: sigma is not symmetric");

    const Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
    const double lambda_min = eig.eigenvalues()(0);

    const bool small = d <= 12 && s <= 3;
    if (mode == RestrictedEigenMode::exhaustive && !small)
        throw PreconditionError("restricted_eigenvalue: exhaustive mode needs d <= 12 and s <= 3");
    if (mode == RestrictedEigenMode::lower_bound || (mode == RestrictedEigenMode::automatic && !small))
        return {lambda_min, false};

    const Matrix gram = sigma.transpose() * sigma;
    constexpr int kSweeps = 100;
    double best = std::numeric_limits<double>::infinity();
    std::uint64_t support_id = 0;

    for_each_support(d, s, [&](const std::vector<std::size_t>& support) {
        ConeSearch search{gram, std::vector<char>(d, 0)};
        for (auto i : support) search.in_support[i] = 1;

        for (auto i : support) {
            Vector e = Vector::Zero(static_cast<Eigen::Index>(d));
            e(static_cast<Eigen::Index>(i)) = 1.0;
            best = std::min(best, search.rayleigh(e));
            best = std::min(best, search.refine(e, kSweeps));
        }
        for (Eigen::Index k = 0; k < eig.eigenvectors().cols(); ++k) {
            const Vector v = eig.eigenvectors().col(k);
            if (search.feasible(v)) best = std::min(best, search.refine(v, kSweeps));
        }
        const rng::CounterStream stream(rng::derive_seed(0x5EEDu, support_id++));
        for (std::size_t g = 0; g < grid_resolution; ++g) {
            Vector v(static_cast<Eigen::Index>(d));
            for (std::size_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i)) = stream.normal_pair(g, i)[0];
            // Off-support mass sweeps the cone from its axis to its boundary.
            double on = 0.0, off = 0.0;
            for (std::size_t i = 0; i < d; ++i)
                (search.in_support[i] ? on : off) += std::abs(v(static_cast<Eigen::Index>(i)));
            const double frac = static_cast<double>(g) / static_cast<double>(grid_resolution);
            const double scale = off > 0.0 ? frac * on / off : 0.0;
            for (std::size_t i = 0; i < d; ++i)
                if (!search.in_support[i]) v(static_cast<Eigen::Index>(i)) *= scale;
            if (v.squaredNorm() == 0.0) continue;
            best = std::min(best, search.refine(v, kSweeps));
        }
    });
    return {std::sqrt(best), true};
}

bool check_signal_strength(const GmmParams& params, std::size_t n, std::size_t d, std::size_t s, double cprime) {
    if (n < 2 || d < 2) throw PreconditionError("check_signal_strength: need n >= 2 and d >= 2");
    const Vector beta = true_discriminant(params);
    const FeatureSet support = relevant_features(params);
    if (support.empty()) return true;
    double beta_min = std::numeric_limits<double>::infinity();
    for (auto i : support.indices()) beta_min = std::min(beta_min, std::abs(beta(static_cast<Eigen::Index>(i))));
    const double threshold = cprime * static_cast<double>(s) *
                             std::pow(std::log(static_cast<double>(d)) / static_cast<double>(n), 1.0 / 6.0);
    return beta_min >= threshold;
}

ParameterError parameter_error(const GmmParams& truth, const Vector& mu1_hat, const Vector& mu2_hat,
                               const Matrix& sigma_hat) {
    const auto d = truth.dim();
    if (mu1_hat.size() != d || mu2_hat.size() != d || sigma_hat.rows() != d || sigma_hat.cols() != d)
        throw PreconditionError("parameter_error: dimension mismatch");
    auto sq = [](double x) { return x * x; };
    const double same = std::max(linf(truth.mu1() - mu1_hat), linf(truth.mu2() - mu2_hat));
    const double swap = std::max(linf(truth.mu1() - mu2_hat), linf(truth.mu2() - mu1_hat));
    return ParameterError{sq(std::min(same, swap)), linf(truth.sigma() - sigma_hat), swap < same};
}

}  // namespace sparseclust
