#include "doctest.h"

#include "sparseclust/errors.hpp"
#include "sparseclust/fixtures.hpp"
#include "sparseclust/highdim_fit.hpp"

#include <cmath>

using namespace sparseclust;

namespace {

Dataset rows(std::initializer_list<std::initializer_list<double>> r) {
    Dataset d;
    d.points.resize(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double v : row) d.points(i, j++) = v;
        ++i;
    }
    return d;
}

double linf(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("vhat examples") {
    CHECK(compute_vhat(rows({{0, 0}, {2, 0}})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(compute_vhat(rows({{1.5, -2}, {1.5, -2}, {1.5, -2}})) == 0.0);
    CHECK(compute_vhat(rows({{1}, {3}, {5}})) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(compute_vhat(rows({{1}})), PreconditionError);
}

TEST_CASE("default accuracy formula") {
    CHECK(default_eps(1000000, 10, 0.1) == doctest::Approx(std::pow(std::log(1e8) / 1e6, 1.0 / 6.0)).epsilon(1e-14));
    CHECK(default_eps(1000000, 10, 0.1, 2.0) == doctest::Approx(2.0 * default_eps(1000000, 10, 0.1)).epsilon(1e-14));
}

TEST_CASE("one-dimensional data reduces to a single univariate fit") {
    const GmmParams sep(Vector::Constant(1, 1.0), Vector::Constant(1, -1.0), Matrix::Identity(1, 1));
    const Dataset x = sample(sep, 50000, 2).data;
    const GmmEstimate e = fit_gmm(x, 0.3, 0.05, 4);
    REQUIRE(e.anchor.has_value());
    CHECK(*e.anchor == 0);
    CHECK(e.sigma_hat.rows() == 1);
    CHECK(e.counters.univariate == 1);
    CHECK(e.counters.bivariate_alignment == 0);
    CHECK(e.counters.bivariate_covariance == 0);
    CHECK(e.mu1_hat(0) == e.xi1(0));
    CHECK(e.mu2_hat(0) == e.xi2(0));

    const GmmParams flat(Vector::Zero(1), Vector::Zero(1), Matrix::Identity(1, 1));
    const GmmEstimate f = fit_gmm(sample(flat, 50000, 2).data, 0.3, 0.05, 4);
    CHECK_FALSE(f.anchor.has_value());
    CHECK(std::abs(f.xi1(0) - f.xi2(0)) <= f.gap_threshold);
}

TEST_CASE("equal-means data gives identical component means") {
    const GmmParams flat(Vector::Constant(5, 0.5), Vector::Constant(5, 0.5), Matrix::Identity(5, 5));
    const Dataset x = sample(flat, 100000, 6).data;
    const MeanEstimate m = estimate_means(x, 0.5, 0.05, 1);
    CHECK_FALSE(m.anchor.has_value());
    CHECK(m.mu1_hat == m.mu2_hat);
    CHECK(linf(m.mu1_hat, flat.mu1()) <= 0.1);
    const Matrix s = estimate_covariance(x, 0.5, 0.05, 1);
    CHECK((s - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 0.1);
    const GmmEstimate e = fit_gmm(x, 0.5, 0.05, 1);
    CHECK(e.mu1_hat == e.mu2_hat);
    CHECK(e.alignment.empty());
    CHECK(e.counters.bivariate_alignment == 0);
    CHECK(e.counters.bivariate_covariance == 10);
}

TEST_CASE("ten-dimensional embedding: anchor, means, covariance, counters, alignment") {
    const GmmParams truth = figure1_embed(10);
    const Dataset x = sample(truth, 100000, 13).data;
    const GmmEstimate e = fit_gmm(x, std::nullopt, 0.05, 21);
    REQUIRE(e.anchor.has_value());
    CHECK(*e.anchor == 1);
    const double direct = linf(e.mu1_hat, truth.mu1()) + linf(e.mu2_hat, truth.mu2());
    const double swapped = linf(e.mu1_hat, truth.mu2()) + linf(e.mu2_hat, truth.mu1());
    CHECK(std::min(direct, swapped) <= 0.2);
    CHECK(std::max(linf(e.mu1_hat, swapped < direct ? truth.mu2() : truth.mu1()),
                   linf(e.mu2_hat, swapped < direct ? truth.mu1() : truth.mu2())) <= 0.1);
    CHECK(std::abs(e.sigma_hat(0, 1) - 0.8) <= 0.1);
    CHECK(e.sigma_hat == e.sigma_hat.transpose());
    CHECK(e.vhat >= 0.0);
    CHECK(e.eps_star == e.eps / 20.0);
    CHECK(e.delta_star == 0.05 / (10.0 * 100.0));
    CHECK(e.eps == default_eps(100000, 10, 0.05));
    CHECK(e.gap_threshold == e.eps * e.vhat / 4.0);
    CHECK(e.alignment_tolerance == e.eps * e.vhat / 10.0);

    CHECK(e.counters.univariate == 10);
    CHECK(e.counters.bivariate_alignment == 9);
    CHECK(e.counters.bivariate_covariance == 45);

    // Every coordinate before the anchor has a small marginal gap.
    for (std::size_t i = 0; i < *e.anchor; ++i)
        CHECK(std::abs(e.xi1(static_cast<Eigen::Index>(i)) - e.xi2(static_cast<Eigen::Index>(i))) <= e.gap_threshold);
    REQUIRE(e.alignment.size() == 9);
    const double anchor_mean = e.xi1(static_cast<Eigen::Index>(*e.anchor));
    CHECK(e.mu1_hat(1) == anchor_mean);
    for (const AlignmentRecord& r : e.alignment) {
        CHECK(r.other != *e.anchor);
        const auto k = static_cast<std::size_t>(r.chosen - 1);
        CHECK(r.distances[k] <= e.alignment_tolerance);
        CHECK(r.distances[0] == std::abs(anchor_mean - r.nu_anchor[0]));
        CHECK(r.distances[1] == std::abs(anchor_mean - r.nu_anchor[1]));
        CHECK(e.mu1_hat(static_cast<Eigen::Index>(r.other)) == r.nu_other[k]);
        CHECK(e.mu2_hat(static_cast<Eigen::Index>(r.other)) == r.nu_other[1 - k]);
    }

    const GmmEstimate again = fit_gmm(x, std::nullopt, 0.05, 21);
    CHECK(again.mu1_hat == e.mu1_hat);
    CHECK(again.sigma_hat == e.sigma_hat);
}

TEST_CASE("two-dimensional embedding meets the parameter accuracy contract") {
    const GmmParams truth = figure1_embed(2);
    const GmmEstimate e = fit_gmm(sample(truth, 100000, 5).data, std::nullopt, 0.05, 5);
    const ParameterError err = parameter_error(truth, e.mu1_hat, e.mu2_hat, e.sigma_hat);
    const double scale = 0.25 * std::pow((truth.mu1() - truth.mu2()).cwiseAbs().maxCoeff(), 2) +
                         truth.sigma().cwiseAbs().maxCoeff();
    CHECK(err.combined() <= 0.25 * scale);
}

TEST_CASE("alignment failure carries its diagnostics") {
    const AlignmentFailure f(2, 5, {0.3, 0.4}, 0.1);
    CHECK(f.anchor() == 2);
    CHECK(f.other() == 5);
    CHECK(f.distances()[1] == 0.4);
    CHECK(f.tolerance() == 0.1);
    CHECK(std::string(f.what()).find("5") != std::string::npos);
}

TEST_CASE("fit preconditions") {
    const Dataset x = sample(figure1_embed(3), 100, 1).data;
    CHECK_THROWS_AS(fit_gmm(x, 0.3, 0.0, 1), PreconditionError);
    CHECK_THROWS_AS(fit_gmm(x, 0.3, 1.0, 1), PreconditionError);
    CHECK_THROWS_AS(fit_gmm(x, 1.5, 0.05, 1), PreconditionError);
    const Dataset tiny = sample(figure1_embed(3), 39, 1).data;
    CHECK_THROWS_AS(fit_gmm(tiny, 0.3, 0.05, 1), PreconditionError);
    Dataset bad = x;
    bad.points(4, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(fit_gmm(bad, 0.3, 0.05, 1), PreconditionError);
}
