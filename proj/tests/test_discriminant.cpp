#include "doctest.h"
#include "oracles.hpp"

#include "sparseclust/discriminant.hpp"
#include "sparseclust/errors.hpp"
#include "sparseclust/fixtures.hpp"
#include "sparseclust/rng.hpp"
#include "sparseclust/simplex.hpp"

#include <cmath>

using namespace sparseclust;

namespace {

Vector v2(double a, double b) { return Vector{{a, b}}; }

struct Instance {
    Matrix sigma;
    Vector delta;
    double lambda;
};

Instance random_instance(std::uint64_t seed, int d) {
    const rng::CounterStream st(seed);
    Matrix a(d, d);
    Vector delta(d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) a(i, j) = st.normal_pair(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j))[0];
        delta(i) = st.normal_pair(static_cast<std::uint64_t>(i), 100)[0];
    }
    Matrix sigma = a.transpose() * a / d + 0.05 * Matrix::Identity(d, d);
    const double u = st.uniform(1000);
    const double lambda = u < 0.1 ? 0.0 : 1.1 * u * delta.cwiseAbs().maxCoeff();
    return {sigma, delta, lambda};
}

double soft(double x, double t) { return std::copysign(std::max(std::abs(x) - t, 0.0), x); }

}  // namespace

TEST_CASE("simplex solves small textbook programs") {
    lp::Problem p;
    p.a.resize(2, 2);
    p.a << 1, 2, 3, 1;
    p.b = v2(4, 6);
    p.c = v2(-1, -1);
    const lp::Result r = lp::solve(p);
    REQUIRE(r.status == lp::Status::optimal);
    CHECK(r.x(0) == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(r.x(1) == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(r.objective == doctest::Approx(-2.8).epsilon(1e-12));
    CHECK(r.dual.dot(p.b) == doctest::Approx(r.objective).epsilon(1e-12));
    CHECK(r.certificate_residual <= 1e-10);
}

TEST_CASE("simplex handles negative right-hand sides through phase one") {
    lp::Problem p;
    p.a.resize(2, 2);
    p.a << -1, -1, 1, 0;
    p.b = v2(-2, 3);
    p.c = v2(1, 2);
    const lp::Result r = lp::solve(p);
    REQUIRE(r.status == lp::Status::optimal);
    CHECK(r.objective == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.x(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("simplex reports infeasible and unbounded programs") {
    lp::Problem inf;
    inf.a = Matrix::Constant(1, 1, 1.0);
    inf.b = Vector::Constant(1, -1.0);
    inf.c = Vector::Constant(1, 1.0);
    CHECK(lp::solve(inf).status == lp::Status::infeasible);

    lp::Problem unb;
    unb.a = Matrix::Constant(1, 1, -1.0);
    unb.b = Vector::Constant(1, 1.0);
    unb.c = Vector::Constant(1, -1.0);
    CHECK(lp::solve(unb).status == lp::Status::unbounded);
    CHECK(std::string(lp::to_string(lp::Status::unbounded)) == "unbounded");
}

TEST_CASE("least-index pivoting terminates on a cycling-prone degenerate program") {
    lp::Problem p;
    p.a.resize(3, 4);
    p.a << 0.25, -8, -1, 9, 0.5, -12, -0.5, 3, 0, 0, 1, 0;
    p.b = Vector{{0, 0, 1}};
    p.c = Vector{{-0.75, 20, -0.5, 6}};
    const lp::Result r = lp::solve(p);
    REQUIRE(r.status == lp::Status::optimal);
    CHECK(r.objective == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(r.certificate_residual <= 1e-10);
}

TEST_CASE("dantzig examples") {
    const DantzigSolution a = solve_dantzig(Matrix::Identity(2, 2), v2(1, 0.2), 0.2);
    REQUIRE(a.status == DantzigStatus::optimal);
    CHECK(a.beta_hat(0) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(a.beta_hat(1) == 0.0);
    CHECK(a.l1_norm == doctest::Approx(0.8).epsilon(1e-12));

    const DantzigSolution zero = solve_dantzig(Matrix::Identity(2, 2), v2(1, -0.2), 1.0);
    CHECK(zero.beta_hat.isZero(0.0));

    Matrix s(2, 2);
    s << 2, 0.5, 0.5, 1;
    const DantzigSolution exact = solve_dantzig(s, v2(0.3, -1), 0.0);
    const Vector want = s.llt().solve(v2(0.3, -1));
    CHECK((exact.beta_hat - want).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(exact.max_residual < 1e-12);
}

TEST_CASE("dantzig matches vertex enumeration on random programs") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const int d = 1 + static_cast<int>(seed % 5);
        const Instance in = random_instance(seed, d);
        const DantzigSolution sol = solve_dantzig(in.sigma, in.delta, in.lambda);
        const oracle::VertexLpResult ref = oracle::dantzig_by_vertices(in.sigma, in.delta, in.lambda);
        REQUIRE(ref.feasible);
        REQUIRE(sol.status == DantzigStatus::optimal);
        CHECK(std::abs(sol.l1_norm - ref.objective) <= 1e-7);
        CHECK(sol.max_residual <= in.lambda + kDantzigFeasTol);
        CHECK(sol.certificate_residual <= 1e-8);
    }
}

TEST_CASE("identity design reduces to soft thresholding") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = random_instance(seed + 500, 6);
        const Matrix id = Matrix::Identity(6, 6);
        const DantzigSolution sol = solve_dantzig(id, in.delta, in.lambda);
        for (int i = 0; i < 6; ++i) CHECK(std::abs(sol.beta_hat(i) - soft(in.delta(i), in.lambda)) <= 1e-9);
    }
}

TEST_CASE("dantzig solution invariants and preconditions") {
    const Instance in = random_instance(77, 5);
    const DantzigSolution sol = solve_dantzig(in.sigma, in.delta, in.lambda);
    CHECK(std::abs((in.sigma * sol.beta_hat - in.delta).cwiseAbs().maxCoeff() - sol.max_residual) <= 1e-9);
    CHECK(std::abs(sol.beta_hat.lpNorm<1>() - sol.l1_norm) <= 1e-12);
    CHECK(sol.max_residual <= sol.lambda + kDantzigFeasTol);
    CHECK_THROWS_AS(solve_dantzig(Matrix::Identity(3, 3), v2(1, 2), 0.1), PreconditionError);
    CHECK_THROWS_AS(solve_dantzig(Matrix::Identity(2, 2), v2(1, 2), -0.1), PreconditionError);
}

TEST_CASE("plug-in rule") {
    const GmmParams p = figure1_embed(3);
    DantzigSolution perfect;
    perfect.status = DantzigStatus::optimal;
    perfect.beta_hat = true_discriminant(p);
    const LinearRule r = plug_in_rule(p.mu1(), p.mu2(), perfect);
    const LinearRule b = bayes_rule(p);
    CHECK((r.center - b.center).cwiseAbs().maxCoeff() == 0.0);
    CHECK((r.direction - b.direction).cwiseAbs().maxCoeff() == 0.0);
    CHECK(excess_risk(r, p) == 0.0);

    DantzigSolution zero = perfect;
    zero.beta_hat.setZero();
    CHECK(plug_in_rule(p.mu1(), p.mu2(), zero).is_degenerate());

    DantzigSolution failed = perfect;
    failed.status = DantzigStatus::infeasible;
    CHECK_THROWS_AS(plug_in_rule(p.mu1(), p.mu2(), failed), PreconditionError);
}

TEST_CASE("corollary lambda arithmetic") {
    // n = d = 1 and delta = 1/e make log(d n / delta) / n = 1, so both terms are 1.
    CHECK(corollary_lambda(1, 1, std::exp(-1.0), 1, 1, 1, 1, 1) == doctest::Approx(2.0).epsilon(1e-14));
    const double r = std::log(100.0 * 1e6 / 0.05) / 1e6;
    CHECK(corollary_lambda(1000000, 100, 0.05, 1, 1, 1, 1, 1) ==
          doctest::Approx(std::pow(r, 1.0 / 6.0) + std::pow(r, 1.0 / 12.0)).epsilon(1e-14));
    CHECK(corollary_lambda(1000000, 100, 0.05, 1, 1, 1, 1, 1) == doctest::Approx(0.5748657585774576).epsilon(1e-12));
    const double t1 = corollary_lambda(1000000, 100, 0.05, 1, 1, 1, 1, 1) - std::pow(r, 1.0 / 12.0);
    const double t2 = corollary_lambda(1000000, 100, 0.05, 1, 1, 2, 1, 1) - std::pow(r, 1.0 / 12.0);
    CHECK(t2 / t1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(corollary_lambda(100, 10, 1.5, 1, 1, 1, 1, 1), PreconditionError);
    CHECK_THROWS_AS(corollary_lambda(100, 10, 0.5, 1, 1, 1, 0, 1), PreconditionError);
    CHECK(corollary_omega(0.1, 2.0, 3, 0.5) == doctest::Approx(2.4).epsilon(1e-14));
}

TEST_CASE("support thresholding") {
    DantzigSolution sol;
    sol.status = DantzigStatus::optimal;
    sol.lambda = 0.1;
    sol.beta_hat = v2(0.8, 0);
    const SupportEstimate a = threshold_support(sol, 1, 3.0, 1.0);
    CHECK(a.threshold == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(a.features.indices() == std::vector<std::size_t>{0});
    CHECK(a.recovery_condition_met);
    sol.beta_hat = Vector{{-0.8, 0.2, 0.31}};
    const SupportEstimate b = threshold_support(sol, 1, 3.0, 1.0);
    CHECK(b.features.indices() == std::vector<std::size_t>{0, 2});
    CHECK_FALSE(threshold_support(sol, 1, 1.5, 1.0).recovery_condition_met);
    sol.beta_hat.setZero();
    CHECK(threshold_support(sol, 2, 3.0, 1.0).features.empty());
    CHECK_THROWS_AS(threshold_support(sol, 1, 0.0, 1.0), PreconditionError);
}

TEST_CASE("l-infinity error bound") {
    CHECK(linf_error_bound(0.1, 4, 1.0) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(linf_error_bound(0.0, 3, 0.2) == 0.0);
    CHECK_THROWS_AS(linf_error_bound(0.1, 0, 1.0), PreconditionError);
}

TEST_CASE("risk bound examples") {
    const GmmParams unit(v2(1, 0), v2(-1, 0), Matrix::Identity(2, 2));
    const BoundReport zero = proposition1_bound(unit, 0.0, 0.0);
    CHECK(zero.eps1 == 0.0);
    CHECK(zero.eps2 == 0.0);
    CHECK(zero.bound == 0.0);
    CHECK(zero.conditions_met);

    const BoundReport r = proposition1_bound(unit, 0.01, 0.11);
    CHECK(r.rho == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.beta_l1 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.eps1 == doctest::Approx(0.52).epsilon(1e-14));
    CHECK(r.eps2 == doctest::Approx(0.64).epsilon(1e-14));
    CHECK(r.conditions_met);
    CHECK(r.bound == doctest::Approx(oracle::phi_pdf(0.48 / std::sqrt(1.64)) * 1.16).epsilon(1e-13));
    CHECK(r.bound == doctest::Approx(0.4313814995927173).epsilon(1e-12));

    for (double eps : {0.01, 0.04, 0.25})
        CHECK_FALSE(proposition1_bound(unit, eps, 0.99 * std::sqrt(eps)).conditions_met);

    const GmmParams eq(v2(1, 0), v2(1, 0), Matrix::Identity(2, 2));
    const BoundReport e = proposition1_bound(eq, 0.01, 0.11);
    CHECK(e.equal_means);
    CHECK(e.bound == 0.5);
}
