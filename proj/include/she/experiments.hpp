#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "she/record.hpp"
#include "she/solver.hpp"

namespace she {

// Index-based parallel map; the body sees each index exactly once, results must
// be written to per-index slots so worker count cannot affect the outcome.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

// Stable 64-bit FNV-1a, used to derive per-probe seeds from names.
std::uint64_t fnv1a(const std::string& s);

struct ProbeResult {
    std::string probe;
    nlohmann::json params;
    double estimate = 0.0;
    double se = 0.0;
    double bound = 0.0;
    std::string verdict;  // pass | fail | indeterminate | not-applicable
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
    std::string config_digest;
    nlohmann::json extra;  // probe-specific diagnostics

    nlohmann::json to_json() const;          // full row, includes wall_ms
    nlohmann::json to_json_stable() const;   // same row without wall_ms, for digests
};

enum class InitialProfile { Constant, CosineBump };

struct ExperimentPlan {
    std::string name = "default";
    SolverConfig base;                 // seed is filled per trajectory
    InitialProfile u0 = InitialProfile::Constant;
    double u0_value = 1.0;             // level of the constant / base of the bump
    std::vector<std::string> probes;
    std::size_t n_trajectories = 200;
    double horizon = 8.0;
    std::uint64_t master_seed = 1;
    int workers = 1;
    std::string output_dir = "out";
    bool save_trajectories = false;

    // probe constants
    double mass_decay_eps = 0.5;       // the eps of the exceedance threshold
    double mass_decay_t = 4.0;         // tail start
    std::vector<double> lambda_sweep = {1.0, 2.0, 4.0};
    double large_lambda_t = 1.0;
    double large_lambda_slack = 0.5;
    std::vector<double> void_t_grid = {2.0, 4.0, 6.0};
    double mg_T = 4.0;
    double mg_c = 1.0;
    double mg_eps = 1.0;
    std::size_t mg_paths = 5000;
    std::size_t mg_ks_paths = 10000;
    double ld_q = 0.5;
    double ld_eps = 0.5;
    std::size_t ld_n = 64;
    std::size_t ld_trials = 20000;

    void validate() const;
    GridFunction make_u0() const;
    std::uint64_t probe_seed(const std::string& probe_name) const;
};

nlohmann::json plan_to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& j);  // strict: unknown keys rejected

// Tail of the total-mass exceedance: frequency of M_s >= M_0 e^{-(1-eps) l^2 L^2 s / 4}
// for some recorded s in [t, horizon], against exp(-eps^2 l^2 L^2 t / 16).
ProbeResult probe_mass_decay(const ExperimentPlan& plan);

// Synthetic martingale tail: frequency of B_t/t >= eps over a log grid of t >= T
// against exp(-c T eps^2 / 2), plus the time-inversion two-sample KS check.
ProbeResult probe_martingale_tail(double T, double c, double eps, std::size_t n_paths,
                                  std::size_t ks_paths, std::uint64_t seed, int workers);

// Large-noise sweep: p(l) = P{sup_x u(t) > e^{-L^2 l^2 t / 64}}; checks that
// (1/l^2) log p(l) is strictly decreasing and the terminal value clears the rate.
ProbeResult probe_large_lambda(const ExperimentPlan& plan);

// Void event B(t) = {mass below e^{-l^2 L^2 t/8}} inter {inf stays above the
// floor}; monotone probability in t plus conditional sup-moment decay fit.
ProbeResult probe_void_event(const ExperimentPlan& plan);

// Pathwise decay proxy: median and 90th percentile of (1/T) log sup_x u(T)
// negative, and the per-trajectory slope on [T/2, T] negative for >= 95%.
ProbeResult probe_pathwise_decay(const ExperimentPlan& plan);

// Left tail of Bernoulli sums, i.i.d. and a dependent construction with
// conditional success rate >= q, against exp(-n q eps^2 / 2).
ProbeResult probe_bernoulli_ld(double q, double eps, std::size_t n, std::size_t trials,
                               std::uint64_t seed);

struct PlanOutcome {
    std::vector<ProbeResult> results;
    std::vector<std::string> errors;  // structured messages for failed probes
    bool any_fail = false;
    std::string results_digest;       // over wall-clock-independent rows
};

// Runs the plan's probes sequentially, writes results.jsonl and manifest.json
// (and per-trajectory CSVs when requested) under output_dir.
PlanOutcome run_plan(const ExperimentPlan& plan);

extern const char* kToolVersion;

}  // namespace she
