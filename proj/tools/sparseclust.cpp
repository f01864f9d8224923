// Command-line front end: generate, fit, discriminant, select, evaluate, sweep.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 algorithmic
// failure (component alignment or an infeasible discriminant program).

#include "CLI11.hpp"

#include "sparseclust/discriminant.hpp"
#include "sparseclust/errors.hpp"
#include "sparseclust/fixtures.hpp"
#include "sparseclust/harness.hpp"
#include "sparseclust/highdim_fit.hpp"
#include "sparseclust/io.hpp"
#include "sparseclust/model.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace sc = sparseclust;
using sc::io::Json;

namespace {

constexpr const char* kSeedEnv = "SPARSECLUST_SEED";

struct SeedChoice {
    std::uint64_t value = 0;
    std::string source = "default";
};

std::optional<std::uint64_t> env_seed() {
    const char* env = std::getenv(kSeedEnv);
    if (!env) return std::nullopt;
    const std::string text(env);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty() || text.front() == '-')
        throw sc::PreconditionError(std::string(kSeedEnv) + " must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

SeedChoice resolve_seed(const CLI::Option* flag, std::uint64_t flag_value) {
    if (flag->count() > 0) return {flag_value, "flag"};
    if (const auto v = env_seed()) return {*v, "env"};
    return {0, "default"};
}

struct GenerateArgs {
    std::string fixture = "figure1_embed";
    std::size_t d = 10, s = 2, n = 100000;
    std::uint64_t seed = 0;
    double correlation = 0.8;
    std::optional<double> rho;
    std::string params_in;
    std::string out = "-";
    std::string params_out;
};

struct FitArgs {
    std::string data;
    std::uint64_t seed = 0;
    double delta = 0.05;
    double eps_const = 1.0;
    std::optional<double> eps;
    std::string out = "-";
};

struct DiscriminantArgs {
    std::string estimate;
    std::optional<double> lambda;
    double c1 = 0.005;
    std::size_t s = 2;
    double delta = 0.05;
    std::string params;
    std::optional<double> eta;
    std::string out = "-";
};

struct SelectArgs {
    std::string beta;
    std::size_t s = 2;
    double c_mult = 2.5;
    std::optional<double> eta;
    std::string params;
    std::string out = "-";
};

struct EvaluateArgs {
    std::string estimate;
    std::string beta;
    std::string params;
    std::string data;
    std::string out = "-";
};

struct SweepArgs {
    std::string config;
    std::string out;
};

constexpr std::size_t kEtaGrid = 16;

double eta_for(const sc::Matrix& sigma, std::size_t s) {
    return sc::restricted_eigenvalue(sigma, s, kEtaGrid).value;
}

double spectral_norm(const sc::Matrix& sigma) {
    const Eigen::SelfAdjointEigenSolver<sc::Matrix> eig(sigma, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

void run_generate(const GenerateArgs& a, const SeedChoice& seed) {
    sc::ExperimentConfig cfg;
    cfg.fixture = sc::fixture_from_string(a.fixture);
    if (cfg.fixture == sc::FixtureKind::custom) {
        if (a.params_in.empty()) throw sc::PreconditionError("generate: the custom fixture needs --params");
        cfg.custom_params = sc::io::params_from_json(sc::io::read_json(a.params_in));
        cfg.d = static_cast<std::size_t>(cfg.custom_params->dim());
    } else {
        cfg.d = a.d;
    }
    cfg.s = cfg.fixture == sc::FixtureKind::custom ? std::min(a.s, cfg.d) : a.s;
    cfg.n = a.n;
    cfg.correlation = a.correlation;
    cfg.rho_target = a.rho;
    if (cfg.n < 1) throw sc::PreconditionError("generate: n must be positive");
    if (cfg.s < 1 || cfg.s > cfg.d) throw sc::PreconditionError("generate: need 1 <= s <= d");
    const sc::GmmParams params = sc::build_params(cfg);
    const sc::LabeledDataset ld = sc::sample(params, cfg.n, seed.value);
    sc::io::write_csv_file(a.out, ld.data.points, &ld.labels);
    if (!a.params_out.empty()) {
        Json j;
        j["fixture"] = sc::to_string(cfg.fixture);
        j["d"] = cfg.d;
        j["s"] = cfg.s;
        j["n"] = cfg.n;
        j["seed"] = seed.value;
        j["seed_source"] = seed.source;
        const Json pj = sc::io::to_json(params);
        for (const auto& [k, v] : pj.items()) j[k] = v;
        j["support"] = sc::io::to_json(sc::relevant_features(params));
        j["rho"] = sc::signal_energy(params);
        sc::io::write_json(a.params_out, j);
    }
}

void run_fit(const FitArgs& a, const SeedChoice& seed) {
    const sc::io::CsvData csv = sc::io::read_csv_file(a.data);
    const sc::GmmEstimate est = sc::fit_gmm(csv.data, a.eps, a.delta, seed.value, a.eps_const);
    Json j = sc::io::to_json(est);
    j["seed_source"] = seed.source;
    sc::io::write_json(a.out, j);
}

void run_discriminant(const DiscriminantArgs& a) {
    const Json ej = sc::io::read_json(a.estimate);
    const sc::GmmEstimate est = sc::io::estimate_from_json(ej);
    const auto d = static_cast<std::size_t>(est.mu1_hat.size());
    const sc::Vector dmu = est.half_difference();

    Json info;
    double lambda = 0.0;
    if (a.lambda) {
        if (!(*a.lambda >= 0.0)) throw sc::PreconditionError("discriminant: --lambda must be >= 0");
        lambda = *a.lambda;
        info["lambda_source"] = "flag";
    } else {
        if (a.s < 1 || a.s > d) throw sc::PreconditionError("discriminant: need 1 <= s <= d");
        if (!a.params.empty()) {
            const sc::GmmParams truth = sc::io::params_from_json(sc::io::read_json(a.params));
            if (static_cast<std::size_t>(truth.dim()) != d)
                throw sc::PreconditionError("discriminant: parameters and estimate differ in dimension");
            const double eta = a.eta ? *a.eta : eta_for(truth.sigma(), a.s);
            const double d0 = spectral_norm(truth.sigma());
            const double rho = sc::signal_energy(truth);
            lambda = sc::corollary_lambda(est.n, d, a.delta, a.c1, d0, a.s, rho, eta);
            info["lambda_source"] = "ground_truth";
            info["eta"] = eta;
            info["D0"] = d0;
            info["rho"] = rho;
        } else {
            // Plug-in constants from the estimate; rho comes from a pilot solve
            // at the lambda obtained by dropping the rho-dependent term.
            const double eta = a.eta ? *a.eta : eta_for(est.sigma_hat, a.s);
            const double d0 = spectral_norm(est.sigma_hat);
            const double nn = static_cast<double>(est.n);
            const double r = std::log(static_cast<double>(d) * nn / a.delta) / nn;
            if (!(a.c1 > 0.0) || !(a.delta > 0.0 && a.delta < 1.0) || !(r > 0.0))
                throw sc::PreconditionError("discriminant: need c1 > 0, delta in (0, 1), d n > delta");
            const double pilot = std::sqrt(a.c1) * std::pow(r, 1.0 / 12.0);
            const sc::DantzigSolution pilot_sol = sc::solve_dantzig(est.sigma_hat, dmu, pilot);
            const double rho_hat = pilot_sol.status == sc::DantzigStatus::optimal
                                       ? sc::plugin_signal_energy(dmu, pilot_sol)
                                       : 0.0;
            lambda = rho_hat > 0.0 ? sc::corollary_lambda(est.n, d, a.delta, a.c1, d0, a.s, rho_hat, eta) : pilot;
            info["lambda_source"] = "plug_in";
            info["eta"] = eta;
            info["D0"] = d0;
            info["rho"] = rho_hat;
            info["pilot_lambda"] = pilot;
        }
        info["c1"] = a.c1;
        info["s"] = a.s;
        info["delta"] = a.delta;
    }
    const sc::DantzigSolution sol = sc::solve_dantzig(est.sigma_hat, dmu, lambda);
    if (sol.status != sc::DantzigStatus::optimal)
        throw sc::InfeasibleProgram("discriminant program infeasible at lambda = " + sc::io::format_double(lambda));
    Json j = sc::io::to_json(sol);
    for (const auto& [k, v] : info.items()) j[k] = v;
    sc::io::write_json(a.out, j);
}

void run_select(const SelectArgs& a) {
    const sc::DantzigSolution sol = sc::io::dantzig_from_json(sc::io::read_json(a.beta));
    double eta = 0.0;
    if (a.eta) {
        eta = *a.eta;
    } else if (!a.params.empty()) {
        const sc::GmmParams truth = sc::io::params_from_json(sc::io::read_json(a.params));
        if (truth.dim() != sol.beta_hat.size())
            throw sc::PreconditionError("select: parameters and beta differ in dimension");
        if (a.s < 1 || a.s > static_cast<std::size_t>(truth.dim()))
            throw sc::PreconditionError("select: need 1 <= s <= d");
        eta = eta_for(truth.sigma(), a.s);
    } else {
        throw sc::PreconditionError("select: give --eta or --params");
    }
    if (!(eta > 0.0)) throw sc::PreconditionError("select: eta must be positive");
    const double c = a.c_mult / eta;
    const sc::SupportEstimate sup = sc::threshold_support(sol, a.s, c, eta);
    Json j;
    j["features"] = sc::io::to_json(sup.features);
    j["threshold"] = sup.threshold;
    j["c"] = c;
    j["eta"] = eta;
    j["s"] = a.s;
    j["lambda"] = sol.lambda;
    j["recovery_condition_met"] = sup.recovery_condition_met;
    sc::io::write_json(a.out, j);
}

void run_evaluate(const EvaluateArgs& a) {
    const sc::GmmEstimate est = sc::io::estimate_from_json(sc::io::read_json(a.estimate));
    const sc::DantzigSolution sol = sc::io::dantzig_from_json(sc::io::read_json(a.beta));
    const sc::GmmParams truth = sc::io::params_from_json(sc::io::read_json(a.params));
    if (truth.dim() != est.mu1_hat.size() || truth.dim() != sol.beta_hat.size())
        throw sc::PreconditionError("evaluate: estimate, beta and parameters differ in dimension");
    const sc::LinearRule rule = sc::plug_in_rule(est, sol);
    const sc::ParameterError err = sc::parameter_error(truth, est.mu1_hat, est.mu2_hat, est.sigma_hat);
    const sc::Vector beta = sc::true_discriminant(truth);
    const sc::Vector beta_ref = err.swapped ? sc::Vector(-beta) : beta;

    Json j;
    j["rule_degenerate"] = rule.is_degenerate();
    j["exact_overlap"] = sc::exact_overlap(rule, truth);
    j["bayes_overlap"] = sc::bayes_overlap(truth);
    j["excess_risk"] = sc::excess_risk(rule, truth);
    if (!a.data.empty()) {
        const sc::io::CsvData csv = sc::io::read_csv_file(a.data);
        if (!csv.labels) throw sc::PreconditionError("evaluate: --data needs a label column");
        if (csv.data.dim() != truth.dim()) throw sc::PreconditionError("evaluate: data dimension mismatch");
        j["empirical_misclustering"] = sc::empirical_misclustering(rule, sc::LabeledDataset{csv.data, *csv.labels});
    } else {
        j["empirical_misclustering"] = nullptr;
    }
    j["parameter_error"] = sc::io::to_json(err);
    j["beta_linf_error"] = (sol.beta_hat - beta_ref).cwiseAbs().maxCoeff();
    j["risk_bound"] = sc::io::to_json(sc::proposition1_bound(truth, err.combined(), sol.lambda));
    j["support"] = sc::io::to_json(sc::relevant_features(truth));
    sc::io::write_json(a.out, j);
}

void run_sweep(const SweepArgs& a, bool timings) {
    const Json cj = sc::io::read_json(a.config);
    std::vector<std::size_t> ns, ds;
    sc::ExperimentConfig cfg = sc::config_from_json(cj, &ns, &ds);
    std::string seed_source = "config";
    if (!cj.contains("seeds")) {
        if (const auto v = env_seed()) {
            cfg.seeds = {*v};
            seed_source = "env";
        } else {
            seed_source = "default";
        }
    }
    const auto cells = sc::run_scaling_sweep(cfg, ns, ds, timings);
    const std::string table = sc::format_sweep_table(cells);
    std::cout << table;
    if (!a.out.empty()) {
        Json j;
        j["config"] = sc::to_json(cfg);
        j["grid"] = {{"n", ns}, {"d", ds}};
        j["seed_source"] = seed_source;
        Json cj_cells = Json::array();
        for (const auto& c : cells) cj_cells.push_back(sc::to_json(c));
        j["cells"] = std::move(cj_cells);
        sc::io::write_json(a.out, j);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse two-component Gaussian mixture clustering with feature selection"};
    app.require_subcommand(1);
    bool timings = false;
    app.add_flag("--timings", timings, "Report wall-clock time on stderr (and in sweep records)");

    std::uint64_t seed_flag = 0;

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "Sample a labeled data file from a fixture");
    gen_cmd->add_option("--fixture", gen.fixture, "figure1_embed | identity_sparse | custom")
        ->check(CLI::IsMember({"figure1_embed", "identity_sparse", "custom"}));
    gen_cmd->add_option("--d", gen.d, "Dimension");
    gen_cmd->add_option("--s", gen.s, "Sparsity of identity_sparse");
    gen_cmd->add_option("--n", gen.n, "Number of samples");
    auto* gen_seed = gen_cmd->add_option("--seed", seed_flag, "Sampling seed");
    gen_cmd->add_option("--correlation", gen.correlation, "Correlation of the figure1_embed pair");
    gen_cmd->add_option("--rho", gen.rho, "Target signal energy");
    gen_cmd->add_option("--params", gen.params_in, "Parameter file for the custom fixture");
    gen_cmd->add_option("--out", gen.out, "Data file (- for stdout)");
    gen_cmd->add_option("--params-out", gen.params_out, "Write the ground-truth parameters here");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Estimate mixture parameters from a data file");
    fit_cmd->add_option("--data", fit.data, "Data file")->required();
    auto* fit_seed = fit_cmd->add_option("--seed", seed_flag, "Seed for restarts");
    fit_cmd->add_option("--delta", fit.delta, "Failure probability");
    fit_cmd->add_option("--eps-const", fit.eps_const, "Constant in the default accuracy");
    fit_cmd->add_option("--eps", fit.eps, "Accuracy (overrides the default)");
    fit_cmd->add_option("--out", fit.out, "Estimate file (- for stdout)");

    DiscriminantArgs disc;
    auto* disc_cmd = app.add_subcommand("discriminant", "Solve for the sparse discriminant direction");
    disc_cmd->add_option("--estimate", disc.estimate, "Estimate file")->required();
    disc_cmd->add_option("--lambda", disc.lambda, "Constraint level (otherwise chosen from --c1)");
    disc_cmd->add_option("--c1", disc.c1, "Constant in the lambda rule");
    disc_cmd->add_option("--s", disc.s, "Sparsity");
    disc_cmd->add_option("--delta", disc.delta, "Failure probability");
    disc_cmd->add_option("--eta", disc.eta, "Restricted eigenvalue");
    disc_cmd->add_option("--params", disc.params, "Ground-truth parameters for the lambda rule");
    disc_cmd->add_option("--out", disc.out, "Output file (- for stdout)");

    SelectArgs sel;
    auto* sel_cmd = app.add_subcommand("select", "Threshold the discriminant to select features");
    sel_cmd->add_option("--beta", sel.beta, "Discriminant file")->required();
    sel_cmd->add_option("--s", sel.s, "Sparsity");
    sel_cmd->add_option("--c-mult", sel.c_mult, "Threshold constant c = c_mult / eta");
    sel_cmd->add_option("--eta", sel.eta, "Restricted eigenvalue");
    sel_cmd->add_option("--params", sel.params, "Ground-truth parameters to compute eta");
    sel_cmd->add_option("--out", sel.out, "Output file (- for stdout)");

    EvaluateArgs ev;
    auto* ev_cmd = app.add_subcommand("evaluate", "Score a plug-in rule against ground truth");
    ev_cmd->add_option("--estimate", ev.estimate, "Estimate file")->required();
    ev_cmd->add_option("--beta", ev.beta, "Discriminant file")->required();
    ev_cmd->add_option("--params", ev.params, "Ground-truth parameters")->required();
    ev_cmd->add_option("--data", ev.data, "Labeled data for the empirical risk");
    ev_cmd->add_option("--out", ev.out, "Output file (- for stdout)");

    SweepArgs sw;
    auto* sw_cmd = app.add_subcommand("sweep", "Run the pipeline over an (n, d) grid");
    sw_cmd->add_option("--config", sw.config, "Config file")->required();
    sw_cmd->add_option("--out", sw.out, "Full JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const auto start = std::chrono::steady_clock::now();
    int rc = 0;
    try {
        if (gen_cmd->parsed())
            run_generate(gen, resolve_seed(gen_seed, seed_flag));
        else if (fit_cmd->parsed())
            run_fit(fit, resolve_seed(fit_seed, seed_flag));
        else if (disc_cmd->parsed())
            run_discriminant(disc);
        else if (sel_cmd->parsed())
            run_select(sel);
        else if (ev_cmd->parsed())
            run_evaluate(ev);
        else if (sw_cmd->parsed())
            run_sweep(sw, timings);
    } catch (const sc::AlgorithmFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        rc = 3;
    } catch (const sc::PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        rc = 2;
    } catch (const sc::SingularMatrixError& e) {
        std::cerr << "error: " << e.what() << '\n';
        rc = 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        rc = 1;
    }
    if (timings)
        std::cerr << "elapsed_seconds " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                  << '\n';
    return rc;
}
