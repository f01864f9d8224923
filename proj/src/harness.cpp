#include "sparseclust/harness.hpp"

#include "sparseclust/errors.hpp"
#include "sparseclust/fixtures.hpp"
#include "sparseclust/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace sparseclust {

namespace {

constexpr std::uint64_t kFitStream = 11;
constexpr std::uint64_t kTestStream = 12;

std::size_t lowdim_minimum(std::size_t d) { return d > 1 ? 40 : 20; }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

template <typename F>
void capture_failure(TrialRecord& rec, F&& body) {
    try {
        body();
    } catch (const AlignmentFailure& e) {
        rec.failure_kind = "alignment_failure";
        rec.failure_message = e.what();
    } catch (const InfeasibleProgram& e) {
        rec.failure_kind = "infeasible_lp";
        rec.failure_message = e.what();
    } catch (const AlgorithmFailure& e) {
        rec.failure_kind = "algorithm_failure";
        rec.failure_message = e.what();
    } catch (const SingularMatrixError& e) {
        rec.failure_kind = "singular_matrix";
        rec.failure_message = e.what();
    } catch (const PreconditionError& e) {
        rec.failure_kind = "precondition";
        rec.failure_message = e.what();
    }
    if (!rec.failure_kind.empty()) rec.ok = false;
}

}  // namespace

const char* to_string(FixtureKind kind) {
    switch (kind) {
        case FixtureKind::figure1_embed: return "figure1_embed";
        case FixtureKind::identity_sparse: return "identity_sparse";
        case FixtureKind::custom: return "custom";
    }
    return "unknown";
}

FixtureKind fixture_from_string(const std::string& name) {
    if (name == "figure1_embed") return FixtureKind::figure1_embed;
    if (name == "identity_sparse") return FixtureKind::identity_sparse;
    if (name == "custom") return FixtureKind::custom;
    throw PreconditionError("unknown fixture '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (fixture == FixtureKind::custom) {
        if (!custom_params) throw PreconditionError("config: custom fixture needs parameters");
        if (static_cast<std::size_t>(custom_params->dim()) != d)
            throw PreconditionError("config: d differs from the custom parameters' dimension");
    }
    if (d < 1) throw PreconditionError("config: d must be positive");
    if (fixture == FixtureKind::figure1_embed && d < 2) throw PreconditionError("config: figure1_embed needs d >= 2");
    if (s < 1 || s > d) throw PreconditionError("config: need 1 <= s <= d");
    if (n < lowdim_minimum(d))
        throw PreconditionError("config: n = " + std::to_string(n) + " is below the low-dimensional fitter's minimum of " +
                                std::to_string(lowdim_minimum(d)));
    if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("config: delta must lie in (0, 1)");
    if (!(correlation > -1.0 && correlation < 1.0)) throw PreconditionError("config: correlation must lie in (-1, 1)");
    if (rho_target && !(*rho_target > 0.0)) throw PreconditionError("config: rho_target must be positive");
    if (!(eps_constant > 0.0)) throw PreconditionError("config: eps_constant must be positive");
    if (!(c1 > 0.0)) throw PreconditionError("config: c1 must be positive");
    if (!(c_multiplier > 0.0)) throw PreconditionError("config: c_multiplier must be positive");
    if (lambda_override && !(*lambda_override >= 0.0)) throw PreconditionError("config: lambda must be >= 0");
    if (eta_override && !(*eta_override > 0.0)) throw PreconditionError("config: eta must be positive");
    if (n_test < 1) throw PreconditionError("config: n_test must be positive");
    if (eta_grid < 1) throw PreconditionError("config: eta_grid must be positive");
}

GmmParams build_params(const ExperimentConfig& config) {
    switch (config.fixture) {
        case FixtureKind::figure1_embed: return figure1_embed(config.d, config.correlation, config.rho_target);
        case FixtureKind::identity_sparse: return identity_sparse(config.d, config.s, config.rho_target);
        case FixtureKind::custom:
            if (!config.custom_params) throw PreconditionError("config: custom fixture needs parameters");
            return *config.custom_params;
    }
    throw PreconditionError("config: unknown fixture");
}

TruthSummary summarize_truth(const GmmParams& params, const ExperimentConfig& config) {
    TruthSummary t;
    t.beta = true_discriminant(params);
    t.support = relevant_features(params);
    t.rho = signal_energy(params);
    t.bayes_overlap = bayes_overlap(params);
    if (config.eta_override) {
        t.eta = *config.eta_override;
    } else {
        const auto re = restricted_eigenvalue(params.sigma(), config.s, config.eta_grid);
        t.eta = re.value;
        t.eta_exhaustive = re.exhaustive;
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(params.sigma(), Eigen::EigenvaluesOnly);
    t.d0 = eig.eigenvalues().maxCoeff();
    t.c = config.c_multiplier / t.eta;
    return t;
}

TrialRecord run_pipeline(const ExperimentConfig& config, const GmmParams& params, const TruthSummary& truth,
                         std::uint64_t seed, bool record_time) {
    TrialRecord rec;
    rec.seed = seed;
    const auto start = std::chrono::steady_clock::now();
    capture_failure(rec, [&] {
        config.validate();
        const LabeledDataset train = sample(params, config.n, seed);
        const GmmEstimate est = fit_gmm(train.data, std::nullopt, config.delta, rng::derive_seed(seed, kFitStream),
                                        config.eps_constant);
        rec.eps = est.eps;
        rec.vhat = est.vhat;
        rec.anchor = est.anchor;
        rec.xi_gap0 = std::abs(est.xi1(0) - est.xi2(0));
        rec.gap_threshold = est.gap_threshold;
        rec.counters = est.counters;
        rec.errors = parameter_error(params, est.mu1_hat, est.mu2_hat, est.sigma_hat);

        rec.lambda = config.lambda_override
                         ? *config.lambda_override
                         : corollary_lambda(config.n, config.d, config.delta, config.c1, truth.d0, config.s, truth.rho,
                                            truth.eta);
        const DantzigSolution sol = solve_dantzig(est.sigma_hat, est.half_difference(), rec.lambda);
        rec.lp_status = to_string(sol.status);
        if (sol.status != DantzigStatus::optimal)
            throw InfeasibleProgram("discriminant program infeasible at lambda = " + io::format_double(rec.lambda));
        rec.beta_hat_l1 = sol.l1_norm;
        // A swapped component matching flips the sign of the estimated direction.
        const Vector beta_ref = rec.errors.swapped ? Vector(-truth.beta) : truth.beta;
        rec.beta_linf_error = (sol.beta_hat - beta_ref).cwiseAbs().maxCoeff();
        rec.theorem2_bound = linf_error_bound(rec.lambda, config.s, truth.eta);
        rec.theorem2_holds = rec.beta_linf_error <= rec.theorem2_bound;

        const LinearRule rule = plug_in_rule(est, sol);
        rec.rule_degenerate = rule.is_degenerate();
        rec.exact_overlap = exact_overlap(rule, params);
        rec.excess_risk = excess_risk(rule, params);
        const LabeledDataset test = sample(params, config.n_test, rng::derive_seed(seed, kTestStream));
        rec.empirical_misclustering = empirical_misclustering(rule, test);
        rec.prop1 = proposition1_bound(params, rec.errors.combined(), rec.lambda);
        rec.prop1_holds = rec.excess_risk <= rec.prop1.bound + 1e-9;

        const SupportEstimate sup = threshold_support(sol, config.s, truth.c, truth.eta);
        rec.selected = sup.features;
        rec.threshold = sup.threshold;
        rec.exact_match = sup.features == truth.support;
        std::size_t hits = 0;
        for (std::size_t i : sup.features.indices()) hits += truth.support.contains(i) ? 1 : 0;
        rec.precision = sup.features.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(sup.features.size());
        rec.recall = truth.support.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(truth.support.size());
        double min_beta = std::numeric_limits<double>::infinity();
        for (std::size_t i : truth.support.indices())
            min_beta = std::min(min_beta, std::abs(truth.beta(static_cast<Eigen::Index>(i))));
        rec.margin_condition = !truth.support.empty() &&
                               min_beta > 2.0 * truth.c * rec.lambda * std::sqrt(static_cast<double>(config.s));
        rec.ok = true;
    });
    if (record_time) rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

TrialRecord run_pipeline(const ExperimentConfig& config, std::uint64_t seed, bool record_time) {
    TrialRecord rec;
    rec.seed = seed;
    std::optional<GmmParams> params;
    TruthSummary truth;
    capture_failure(rec, [&] {
        config.validate();
        params = build_params(config);
        truth = summarize_truth(*params, config);
    });
    if (!rec.failure_kind.empty()) return rec;
    return run_pipeline(config, *params, truth, seed, record_time);
}

std::vector<SweepCell> run_scaling_sweep(const ExperimentConfig& base, const std::vector<std::size_t>& ns,
                                         const std::vector<std::size_t>& ds, bool record_time) {
    if (ns.empty() || ds.empty()) throw PreconditionError("sweep: the (n, d) grid is empty");
    if (base.seeds.empty()) throw PreconditionError("sweep: no seeds");
    std::vector<SweepCell> cells;
    for (std::size_t n : ns)
        for (std::size_t d : ds) {
            SweepCell cell;
            cell.n = n;
            cell.d = d;
            ExperimentConfig cfg = base;
            cfg.n = n;
            cfg.d = d;
            std::optional<GmmParams> params;
            TruthSummary truth;
            TrialRecord setup;
            capture_failure(setup, [&] {
                cfg.validate();
                params = build_params(cfg);
                truth = summarize_truth(*params, cfg);
            });
            if (!setup.failure_kind.empty()) {
                cell.failure = setup.failure_kind + ": " + setup.failure_message;
                cell.failures = cfg.seeds.size();
                cells.push_back(std::move(cell));
                continue;
            }
            std::vector<double> risks;
            std::size_t recovered = 0;
            for (std::uint64_t seed : cfg.seeds) {
                TrialRecord rec = run_pipeline(cfg, *params, truth, seed, record_time);
                if (rec.ok) {
                    risks.push_back(rec.excess_risk);
                    recovered += rec.exact_match ? 1 : 0;
                } else {
                    ++cell.failures;
                }
                cell.trials.push_back(std::move(rec));
            }
            if (!risks.empty()) cell.median_excess_risk = median(risks);
            cell.recovery_rate = static_cast<double>(recovered) / static_cast<double>(cfg.seeds.size());
            cells.push_back(std::move(cell));
        }
    return cells;
}

io::Json to_json(const ExperimentConfig& c) {
    io::Json j;
    j["fixture"] = to_string(c.fixture);
    if (c.custom_params) j["params"] = io::to_json(*c.custom_params);
    j["d"] = c.d;
    j["n"] = c.n;
    j["s"] = c.s;
    j["rho_target"] = c.rho_target ? io::Json(*c.rho_target) : io::Json(nullptr);
    j["correlation"] = c.correlation;
    j["seeds"] = c.seeds;
    j["eps_constant"] = c.eps_constant;
    j["c1"] = c.c1;
    j["delta"] = c.delta;
    j["c_multiplier"] = c.c_multiplier;
    j["lambda"] = c.lambda_override ? io::Json(*c.lambda_override) : io::Json(nullptr);
    j["eta"] = c.eta_override ? io::Json(*c.eta_override) : io::Json(nullptr);
    j["n_test"] = c.n_test;
    j["eta_grid"] = c.eta_grid;
    return j;
}

namespace {

std::vector<std::size_t> size_list(const io::Json& v, const char* key) {
    try {
        if (v.is_array()) {
            auto out = v.get<std::vector<std::size_t>>();
            if (out.empty()) throw PreconditionError(std::string("config: '") + key + "' is empty");
            return out;
        }
        return {v.get<std::size_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

template <typename T>
std::optional<T> optional_value(const io::Json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    try {
        return j[key].get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

ExperimentConfig config_from_json(const io::Json& j, std::vector<std::size_t>* ns, std::vector<std::size_t>* ds) {
    if (!j.is_object()) throw PreconditionError("config: expected a JSON object");
    static const char* const known[] = {"fixture", "params", "params_file", "d", "n", "s", "rho_target",
                                        "correlation", "seeds", "eps_constant", "c1", "delta", "c_multiplier",
                                        "lambda", "eta", "n_test", "eta_grid"};
    for (const auto& item : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return item.key() == k; }) ==
            std::end(known))
            throw PreconditionError("config: unknown key '" + item.key() + "'");

    ExperimentConfig c;
    if (auto f = optional_value<std::string>(j, "fixture")) c.fixture = fixture_from_string(*f);
    if (j.contains("params"))
        c.custom_params = io::params_from_json(j["params"]);
    else if (auto path = optional_value<std::string>(j, "params_file"))
        c.custom_params = io::params_from_json(io::read_json(*path));
    if (c.fixture == FixtureKind::custom && c.custom_params) c.d = static_cast<std::size_t>(c.custom_params->dim());

    if (j.contains("n")) {
        const auto v = size_list(j["n"], "n");
        c.n = v.front();
        if (ns) *ns = v;
    } else if (ns) {
        *ns = {c.n};
    }
    if (j.contains("d")) {
        const auto v = size_list(j["d"], "d");
        c.d = v.front();
        if (ds) *ds = v;
    } else if (ds) {
        *ds = {c.d};
    }
    if (auto v = optional_value<std::size_t>(j, "s")) c.s = *v;
    c.rho_target = optional_value<double>(j, "rho_target");
    if (auto v = optional_value<double>(j, "correlation")) c.correlation = *v;
    if (auto v = optional_value<std::vector<std::uint64_t>>(j, "seeds")) c.seeds = *v;
    if (auto v = optional_value<double>(j, "eps_constant")) c.eps_constant = *v;
    if (auto v = optional_value<double>(j, "c1")) c.c1 = *v;
    if (auto v = optional_value<double>(j, "delta")) c.delta = *v;
    if (auto v = optional_value<double>(j, "c_multiplier")) c.c_multiplier = *v;
    c.lambda_override = optional_value<double>(j, "lambda");
    c.eta_override = optional_value<double>(j, "eta");
    if (auto v = optional_value<std::size_t>(j, "n_test")) c.n_test = *v;
    if (auto v = optional_value<std::size_t>(j, "eta_grid")) c.eta_grid = *v;
    return c;
}

io::Json to_json(const TruthSummary& t) {
    io::Json j;
    j["rho"] = t.rho;
    j["bayes_overlap"] = t.bayes_overlap;
    j["eta"] = t.eta;
    j["eta_exhaustive"] = t.eta_exhaustive;
    j["D0"] = t.d0;
    j["c"] = t.c;
    j["support"] = io::to_json(t.support);
    j["beta"] = io::vector_json(t.beta);
    return j;
}

io::Json to_json(const TrialRecord& r) {
    io::Json j;
    j["seed"] = r.seed;
    j["ok"] = r.ok;
    if (!r.ok) {
        j["failure"] = {{"kind", r.failure_kind}, {"message", r.failure_message}};
        if (r.seconds) j["seconds"] = *r.seconds;
        return j;
    }
    j["fit"] = {{"eps", r.eps},
                {"vhat", r.vhat},
                {"anchor", r.anchor ? io::Json(*r.anchor) : io::Json(nullptr)},
                {"xi_gap0", r.xi_gap0},
                {"gap_threshold", r.gap_threshold},
                {"errors", io::to_json(r.errors)},
                {"counters",
                 {{"univariate", r.counters.univariate},
                  {"bivariate_alignment", r.counters.bivariate_alignment},
                  {"bivariate_covariance", r.counters.bivariate_covariance}}}};
    j["discriminant"] = {{"lambda", r.lambda},
                         {"status", r.lp_status},
                         {"beta_hat_l1", r.beta_hat_l1},
                         {"beta_linf_error", r.beta_linf_error},
                         {"linf_bound", r.theorem2_bound},
                         {"linf_bound_holds", r.theorem2_holds}};
    j["rule"] = {{"degenerate", r.rule_degenerate},
                 {"exact_overlap", r.exact_overlap},
                 {"excess_risk", r.excess_risk},
                 {"empirical_misclustering", r.empirical_misclustering},
                 {"risk_bound", io::to_json(r.prop1)},
                 {"risk_bound_holds", r.prop1_holds}};
    j["support"] = {{"selected", io::to_json(r.selected)},
                    {"threshold", r.threshold},
                    {"exact_match", r.exact_match},
                    {"precision", r.precision},
                    {"recall", r.recall},
                    {"margin_condition", r.margin_condition}};
    if (r.seconds) j["seconds"] = *r.seconds;
    return j;
}

io::Json to_json(const SweepCell& c) {
    io::Json j;
    j["n"] = c.n;
    j["d"] = c.d;
    j["median_excess_risk"] = c.median_excess_risk ? io::Json(*c.median_excess_risk) : io::Json(nullptr);
    j["recovery_rate"] = c.recovery_rate;
    j["failures"] = c.failures;
    if (!c.failure.empty()) j["failure"] = c.failure;
    io::Json trials = io::Json::array();
    for (const auto& t : c.trials) trials.push_back(to_json(t));
    j["trials"] = std::move(trials);
    return j;
}

std::string format_sweep_table(const std::vector<SweepCell>& cells) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%10s %6s %6s %9s %20s %14s\n", "n", "d", "seeds", "failures",
                  "median_excess_risk", "recovery_rate");
    out += buf;
    for (const auto& c : cells) {
        const std::size_t seeds = c.trials.empty() ? c.failures : c.trials.size();
        if (c.median_excess_risk)
            std::snprintf(buf, sizeof buf, "%10zu %6zu %6zu %9zu %20.6e %14.3f\n", c.n, c.d, seeds, c.failures,
                          *c.median_excess_risk, c.recovery_rate);
        else
            std::snprintf(buf, sizeof buf, "%10zu %6zu %6zu %9zu %20s %14.3f\n", c.n, c.d, seeds, c.failures,
                          "failed", c.recovery_rate);
        out += buf;
    }
    return out;
}

}  // namespace sparseclust
