#include "sparseclust/highdim_fit.hpp"

#include "sparseclust/errors.hpp"
#include "sparseclust/rng.hpp"

#include <cmath>
#include <span>

namespace sparseclust {

namespace {

constexpr std::uint64_t kUnivariateStream = 1;
constexpr std::uint64_t kBivariateStream = 2;

struct Setup {
    std::size_t n;
    std::size_t d;
    double vhat;
    double eps_star;
    double delta_star;
};

std::span<const double> column(const Dataset& data, std::size_t j) {
    return {data.points.col(static_cast<Eigen::Index>(j)).data(), static_cast<std::size_t>(data.points.rows())};
}

Setup setup(const Dataset& data, double eps, double delta) {
    data.validate();
    if (!(eps > 0.0 && eps < 1.0)) throw PreconditionError("GMM fit: eps must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("GMM fit: delta must lie in (0, 1)");
    const auto n = static_cast<std::size_t>(data.size());
    const auto d = static_cast<std::size_t>(data.dim());
    if (n < 20 || (d > 1 && n < 40))
        throw PreconditionError("GMM fit: too few samples for the low-dimensional fitter");
    return {n, d, compute_vhat(data), eps / 20.0, delta / (10.0 * static_cast<double>(d * d))};
}

std::vector<LowDimEstimate> univariate_fits(const Dataset& data, const Setup& s, std::uint64_t seed,
                                            const LowDimOptions& options) {
    std::vector<LowDimEstimate> fits;
    fits.reserve(s.d);
    for (std::size_t i = 0; i < s.d; ++i)
        fits.push_back(fit_1d(column(data, i), s.eps_star, s.delta_star,
                              rng::derive_seed(seed, kUnivariateStream, i), options));
    return fits;
}

LowDimEstimate bivariate_fit(const Dataset& data, const Setup& s, std::uint64_t seed, std::size_t a, std::size_t b,
                             const LowDimOptions& options) {
    return fit_2d(column(data, a), column(data, b), s.eps_star, s.delta_star,
                  rng::derive_seed(seed, kBivariateStream, a, b), options);
}

MeanEstimate assemble_means(const Dataset& data, const Setup& s, double eps, std::uint64_t seed,
                            const std::vector<LowDimEstimate>& uni, const LowDimOptions& options,
                            int& bivariate_calls) {
    MeanEstimate out;
    const auto d = static_cast<Eigen::Index>(s.d);
    out.xi1.resize(d);
    out.xi2.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        out.xi1(i) = uni[static_cast<std::size_t>(i)].mu1(0);
        out.xi2(i) = uni[static_cast<std::size_t>(i)].mu2(0);
    }
    out.gap_threshold = eps * s.vhat / 4.0;
    out.alignment_tolerance = eps * s.vhat / 10.0;

    for (std::size_t i = 0; i < s.d; ++i) {
        if (std::abs(out.xi1(static_cast<Eigen::Index>(i)) - out.xi2(static_cast<Eigen::Index>(i))) >
            out.gap_threshold) {
            out.anchor = i;
            break;
        }
    }
    if (!out.anchor) {
        out.mu1_hat = out.xi1;
        out.mu2_hat = out.xi1;
        return out;
    }

    const std::size_t i = *out.anchor;
    const double xi_anchor = out.xi1(static_cast<Eigen::Index>(i));
    out.mu1_hat.resize(d);
    out.mu2_hat.resize(d);
    out.mu1_hat(static_cast<Eigen::Index>(i)) = xi_anchor;
    out.mu2_hat(static_cast<Eigen::Index>(i)) = out.xi2(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < s.d; ++j) {
        if (j == i) continue;
        const LowDimEstimate fit = bivariate_fit(data, s, seed, i, j, options);
        ++bivariate_calls;
        AlignmentRecord rec;
        rec.other = j;
        rec.nu_anchor = {fit.mu1(0), fit.mu2(0)};
        rec.nu_other = {fit.mu1(1), fit.mu2(1)};
        rec.distances = {std::abs(xi_anchor - fit.mu1(0)), std::abs(xi_anchor - fit.mu2(0))};
        const bool ok1 = rec.distances[0] <= out.alignment_tolerance;
        const bool ok2 = rec.distances[1] <= out.alignment_tolerance;
        if (!ok1 && !ok2) throw AlignmentFailure(i, j, rec.distances, out.alignment_tolerance);
        rec.chosen = (ok1 && (!ok2 || rec.distances[0] <= rec.distances[1])) ? 1 : 2;
        const auto k = static_cast<std::size_t>(rec.chosen - 1);
        out.mu1_hat(static_cast<Eigen::Index>(j)) = rec.nu_other[k];
        out.mu2_hat(static_cast<Eigen::Index>(j)) = rec.nu_other[1 - k];
        out.alignment.push_back(rec);
    }
    return out;
}

Matrix assemble_covariance(const Dataset& data, const Setup& s, std::uint64_t seed,
                           const std::vector<LowDimEstimate>& uni, const LowDimOptions& options,
                           int& bivariate_calls) {
    const auto d = static_cast<Eigen::Index>(s.d);
    Matrix sigma(d, d);
    for (Eigen::Index i = 0; i < d; ++i) sigma(i, i) = uni[static_cast<std::size_t>(i)].sigma(0, 0);
    for (std::size_t i = 0; i < s.d; ++i)
        for (std::size_t j = i + 1; j < s.d; ++j) {
            const double v = bivariate_fit(data, s, seed, i, j, options).sigma(0, 1);
            ++bivariate_calls;
            sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    return sigma;
}

}  // namespace

double compute_vhat(const Dataset& data) {
    data.validate();
    if (data.size() < 2) throw PreconditionError("compute_vhat: need at least two points");
    const double n = static_cast<double>(data.size());
    double vhat = 0.0;
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
        const auto col = data.points.col(j);
        const double mean = col.sum() / n;
        const double var = col.squaredNorm() / n - mean * mean;
        vhat = std::max(vhat, var);
    }
    return vhat;
}

double default_eps(std::size_t n, std::size_t d, double delta, double constant) {
    if (n == 0 || d == 0 || !(delta > 0.0)) throw PreconditionError("default_eps: need n, d > 0 and delta > 0");
    const double nn = static_cast<double>(n);
    return constant * std::pow(std::log(static_cast<double>(d) * nn / delta) / nn, 1.0 / 6.0);
}

MeanEstimate estimate_means(const Dataset& data, double eps, double delta, std::uint64_t seed,
                            const LowDimOptions& options) {
    const Setup s = setup(data, eps, delta);
    const auto uni = univariate_fits(data, s, seed, options);
    int calls = 0;
    return assemble_means(data, s, eps, seed, uni, options, calls);
}

Matrix estimate_covariance(const Dataset& data, double eps, double delta, std::uint64_t seed,
                           const LowDimOptions& options) {
    const Setup s = setup(data, eps, delta);
    const auto uni = univariate_fits(data, s, seed, options);
    int calls = 0;
    return assemble_covariance(data, s, seed, uni, options, calls);
}

GmmEstimate fit_gmm(const Dataset& data, std::optional<double> eps, double delta, std::uint64_t seed,
                    double eps_constant, const LowDimOptions& options) {
    data.validate();
    if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("fit_gmm: delta must lie in (0, 1)");
    const double e = eps ? *eps
                         : default_eps(static_cast<std::size_t>(data.size()), static_cast<std::size_t>(data.dim()),
                                       delta, eps_constant);
    const Setup s = setup(data, e, delta);

    GmmEstimate est;
    est.eps = e;
    est.delta = delta;
    est.eps_star = s.eps_star;
    est.delta_star = s.delta_star;
    est.vhat = s.vhat;
    est.n = s.n;
    est.seed = seed;

    const auto uni = univariate_fits(data, s, seed, options);
    est.counters.univariate = static_cast<int>(uni.size());
    MeanEstimate means = assemble_means(data, s, e, seed, uni, options, est.counters.bivariate_alignment);
    est.sigma_hat = assemble_covariance(data, s, seed, uni, options, est.counters.bivariate_covariance);

    est.mu1_hat = std::move(means.mu1_hat);
    est.mu2_hat = std::move(means.mu2_hat);
    est.anchor = means.anchor;
    est.xi1 = std::move(means.xi1);
    est.xi2 = std::move(means.xi2);
    est.alignment = std::move(means.alignment);
    est.gap_threshold = means.gap_threshold;
    est.alignment_tolerance = means.alignment_tolerance;
    return est;
}

}  // namespace sparseclust
