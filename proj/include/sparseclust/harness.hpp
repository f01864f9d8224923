#pragma once

// End-to-end experiments: sample from a known mixture, fit it, solve for a
// sparse discriminant, threshold its support, and score every stage against
// the ground truth.

#include "sparseclust/discriminant.hpp"
#include "sparseclust/highdim_fit.hpp"
#include "sparseclust/io.hpp"
#include "sparseclust/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparseclust {

enum class FixtureKind { figure1_embed, identity_sparse, custom };

const char* to_string(FixtureKind kind);
FixtureKind fixture_from_string(const std::string& name);

struct ExperimentConfig {
    FixtureKind fixture = FixtureKind::figure1_embed;
    std::optional<GmmParams> custom_params;  // required for FixtureKind::custom
    std::size_t d = 10;
    std::size_t n = 100000;
    std::size_t s = 2;
    std::optional<double> rho_target;
    double correlation = 0.8;
    std::vector<std::uint64_t> seeds{1};
    double eps_constant = 1.0;
    double c1 = 0.005;
    double delta = 0.05;
    double c_multiplier = 2.5;  // threshold constant c = c_multiplier / eta
    std::optional<double> lambda_override;
    std::optional<double> eta_override;
    std::size_t n_test = 100000;  // held-out points for the empirical risk
    std::size_t eta_grid = 16;    // seeds per cone in the restricted-eigenvalue search

    /// Throws PreconditionError on an invalid combination.
    void validate() const;
};

GmmParams build_params(const ExperimentConfig& config);

/// Ground-truth quantities shared by every seed of one configuration.
struct TruthSummary {
    Vector beta;
    FeatureSet support;
    double rho = 0.0;
    double bayes_overlap = 0.0;
    double eta = 0.0;
    bool eta_exhaustive = false;
    double d0 = 0.0;  // ||Sigma||_2
    double c = 0.0;
};

TruthSummary summarize_truth(const GmmParams& params, const ExperimentConfig& config);

struct TrialRecord {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string failure_kind;  // "precondition", "alignment_failure", "infeasible_lp", "algorithm_failure"
    std::string failure_message;

    // Stage 1: mixture fit.
    double eps = 0.0;
    double vhat = 0.0;
    std::optional<std::size_t> anchor;
    double xi_gap0 = 0.0;  // |xi1(0) - xi2(0)|
    double gap_threshold = 0.0;
    ParameterError errors{};
    FitCounters counters;

    // Stage 2: discriminant.
    double lambda = 0.0;
    std::string lp_status;
    double beta_hat_l1 = 0.0;
    double beta_linf_error = 0.0;
    double theorem2_bound = 0.0;
    bool theorem2_holds = false;

    // Plug-in rule.
    bool rule_degenerate = false;
    double exact_overlap = 0.0;
    double excess_risk = 0.0;
    double empirical_misclustering = 0.0;
    BoundReport prop1;
    bool prop1_holds = false;

    // Stage 3: support.
    FeatureSet selected;
    double threshold = 0.0;
    bool exact_match = false;
    double precision = 0.0;
    double recall = 0.0;
    bool margin_condition = false;

    std::optional<double> seconds;
};

/// Deterministic per (config, seed). Library errors become failure records.
TrialRecord run_pipeline(const ExperimentConfig& config, std::uint64_t seed, bool record_time = false);
TrialRecord run_pipeline(const ExperimentConfig& config, const GmmParams& params, const TruthSummary& truth,
                         std::uint64_t seed, bool record_time = false);

struct SweepCell {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<TrialRecord> trials;
    std::optional<double> median_excess_risk;  // over successful trials
    double recovery_rate = 0.0;                // exact matches over all seeds
    std::size_t failures = 0;
    std::string failure;  // set when the cell could not run at all
};

std::vector<SweepCell> run_scaling_sweep(const ExperimentConfig& base, const std::vector<std::size_t>& ns,
                                         const std::vector<std::size_t>& ds, bool record_time = false);

io::Json to_json(const ExperimentConfig& config);
/// Reads a config object. "n" and "d" may be numbers or arrays; arrays fill
/// `ns` / `ds` for a sweep, and the first entry seeds `config`.
ExperimentConfig config_from_json(const io::Json& j, std::vector<std::size_t>* ns = nullptr,
                                  std::vector<std::size_t>* ds = nullptr);

io::Json to_json(const TruthSummary& truth);
io::Json to_json(const TrialRecord& record);
io::Json to_json(const SweepCell& cell);

/// Fixed-width text table, one row per cell.
std::string format_sweep_table(const std::vector<SweepCell>& cells);

}  // namespace sparseclust
