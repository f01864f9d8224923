#include "doctest.h"
#include "oracles.hpp"

#include "sparseclust/errors.hpp"
#include "sparseclust/fixtures.hpp"
#include "sparseclust/harness.hpp"
#include "sparseclust/io.hpp"

#include <cmath>
#include <sstream>

using namespace sparseclust;

TEST_CASE("csv round trip is bit-exact") {
    const auto ld = sample(figure1_embed(4), 500, 3);
    std::ostringstream out;
    io::write_csv(out, ld.data.points, &ld.labels);
    CHECK(out.str().rfind("x0,x1,x2,x3,label\n", 0) == 0);
    std::istringstream in(out.str());
    const io::CsvData back = io::read_csv(in);
    CHECK(back.data.points == ld.data.points);
    REQUIRE(back.labels.has_value());
    CHECK(*back.labels == ld.labels);

    std::ostringstream plain;
    io::write_csv(plain, ld.data.points);
    std::istringstream in2(plain.str());
    CHECK_FALSE(io::read_csv(in2).labels.has_value());
}

TEST_CASE("csv reader rejects malformed input") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return io::read_csv(in);
    };
    CHECK_THROWS_AS(parse(""), PreconditionError);
    CHECK_THROWS_AS(parse("x0,x1\n"), PreconditionError);
    CHECK_THROWS_AS(parse("a,b\n1,2\n"), PreconditionError);
    CHECK_THROWS_AS(parse("x0,x1\n1,2,3\n"), PreconditionError);
    CHECK_THROWS_AS(parse("x0,x1\n1,abc\n"), PreconditionError);
    CHECK_THROWS_AS(parse("x0,label\n1,3\n"), PreconditionError);
    CHECK_THROWS_AS(parse("x0\nnan\n"), PreconditionError);
    const io::CsvData ok = parse("x0,x1\r\n1.5, -2e3\r\n\n");
    CHECK(ok.data.points(0, 1) == -2000.0);
}

TEST_CASE("json round trips") {
    const GmmParams p = figure1_embed(3);
    const GmmParams back = io::params_from_json(io::Json::parse(io::to_json(p).dump()));
    CHECK(back.mu1() == p.mu1());
    CHECK(back.sigma() == p.sigma());

    const GmmEstimate e = fit_gmm(sample(figure1_embed(3), 20000, 1).data, std::nullopt, 0.05, 2);
    const GmmEstimate eb = io::estimate_from_json(io::Json::parse(io::to_json(e).dump()));
    CHECK(eb.mu1_hat == e.mu1_hat);
    CHECK(eb.sigma_hat == e.sigma_hat);
    CHECK(eb.anchor == e.anchor);
    CHECK(eb.alignment.size() == e.alignment.size());
    CHECK(eb.counters.bivariate_covariance == e.counters.bivariate_covariance);
    CHECK(io::to_json(eb).dump() == io::to_json(e).dump());

    const DantzigSolution s = solve_dantzig(e.sigma_hat, e.half_difference(), 0.05);
    const DantzigSolution sb = io::dantzig_from_json(io::Json::parse(io::to_json(s).dump()));
    CHECK(sb.beta_hat == s.beta_hat);
    CHECK(sb.lambda == s.lambda);

    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(-2.5e-300) == "-2.5e-300");
    CHECK_THROWS_AS(io::params_from_json(io::Json::parse(R"({"mu1":[0],"mu2":[0]})")), PreconditionError);
}

TEST_CASE("config parsing and validation") {
    std::vector<std::size_t> ns, ds;
    const ExperimentConfig c = config_from_json(
        io::Json::parse(R"({"fixture":"identity_sparse","n":[1000,2000],"d":[5,10],"s":1,"seeds":[3,4],"lambda":0.2})"),
        &ns, &ds);
    CHECK(c.fixture == FixtureKind::identity_sparse);
    CHECK(ns == std::vector<std::size_t>{1000, 2000});
    CHECK(ds == std::vector<std::size_t>{5, 10});
    CHECK(c.n == 1000);
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(c.lambda_override == 0.2);
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS_AS(config_from_json(io::Json::parse(R"({"bogus":1})")), PreconditionError);
    CHECK_THROWS_AS(config_from_json(io::Json::parse(R"({"fixture":"nope"})")), PreconditionError);

    ExperimentConfig bad;
    bad.s = 0;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = ExperimentConfig{};
    bad.correlation = 1.0;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
    bad = ExperimentConfig{};
    bad.fixture = FixtureKind::custom;
    CHECK_THROWS_AS(bad.validate(), PreconditionError);

    const io::Json round = to_json(c);
    CHECK(to_json(config_from_json(round)).dump() == round.dump());
}

TEST_CASE("pipeline on the ten-dimensional embedding") {
    ExperimentConfig cfg;
    cfg.d = 10;
    cfg.n = 100000;
    const GmmParams p = build_params(cfg);
    const TruthSummary truth = summarize_truth(p, cfg);
    CHECK(truth.support.indices() == std::vector<std::size_t>{0, 1});
    CHECK(truth.bayes_overlap == doctest::Approx(oracle::phi_cdf(-std::sqrt(25.0 / 9.0))).epsilon(1e-12));
    CHECK(truth.eta == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(truth.eta_exhaustive);
    CHECK(truth.d0 == doctest::Approx(1.8).epsilon(1e-12));

    const TrialRecord r = run_pipeline(cfg, 1);
    REQUIRE(r.ok);
    CHECK(r.anchor == std::optional<std::size_t>(1));
    CHECK(r.selected.indices() == std::vector<std::size_t>{0, 1});
    CHECK(r.exact_match);
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.excess_risk <= 0.1);
    CHECK(r.excess_risk >= 0.0);
    CHECK(r.exact_overlap == doctest::Approx(truth.bayes_overlap + r.excess_risk).epsilon(1e-12));
    CHECK(r.empirical_misclustering >= 0.0);
    CHECK(r.empirical_misclustering <= 0.5);
    CHECK(std::abs(r.empirical_misclustering - r.exact_overlap) < 0.01);
    CHECK(r.lambda == doctest::Approx(corollary_lambda(100000, 10, 0.05, 0.005, 1.8, 2, 25.0 / 9.0, 0.2)).epsilon(1e-9));
    CHECK_FALSE(r.seconds.has_value());

    const TrialRecord again = run_pipeline(cfg, 1);
    CHECK(to_json(again).dump() == to_json(r).dump());
}

TEST_CASE("pipeline failures are structured records") {
    ExperimentConfig cfg;
    cfg.d = 3;
    cfg.n = 39;
    const TrialRecord r = run_pipeline(cfg, 1);
    CHECK_FALSE(r.ok);
    CHECK(r.failure_kind == "precondition");
    CHECK_FALSE(r.failure_message.empty());
    const io::Json j = to_json(r);
    CHECK(j["failure"]["kind"] == "precondition");
}

TEST_CASE("a lambda above the mean gap gives the degenerate rule") {
    ExperimentConfig cfg;
    cfg.d = 3;
    cfg.n = 20000;
    cfg.lambda_override = 50.0;
    const TrialRecord r = run_pipeline(cfg, 2);
    REQUIRE(r.ok);
    CHECK(r.rule_degenerate);
    CHECK(r.excess_risk == doctest::Approx(0.5 - oracle::phi_cdf(-5.0 / 3.0)).epsilon(1e-12));
    CHECK(r.selected.empty());
}

TEST_CASE("sweep emits one cell per grid point in order") {
    ExperimentConfig cfg;
    cfg.fixture = FixtureKind::identity_sparse;
    cfg.s = 1;
    cfg.seeds = {1, 2};
    cfg.n_test = 1000;
    const auto cells = run_scaling_sweep(cfg, {20000}, {3, 6});
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].d == 3);
    CHECK(cells[1].d == 6);
    for (const auto& c : cells) {
        CHECK(c.trials.size() == 2);
        CHECK(c.median_excess_risk.has_value());
        for (const auto& t : c.trials) {
            REQUIRE(t.ok);
            CHECK(t.selected.indices() == std::vector<std::size_t>{0});
        }
        CHECK(c.recovery_rate == 1.0);
    }
    const std::string table = format_sweep_table(cells);
    CHECK(table.find("median_excess_risk") != std::string::npos);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);

    const auto failed = run_scaling_sweep(cfg, {30}, {3});
    REQUIRE(failed.size() == 1);
    CHECK_FALSE(failed[0].median_excess_risk.has_value());
    CHECK_FALSE(failed[0].failure.empty());
    CHECK(format_sweep_table(failed).find("failed") != std::string::npos);
    CHECK_THROWS_AS(run_scaling_sweep(cfg, {}, {3}), PreconditionError);
}
