#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "proto_rmdp/analysis.hpp"
#include "proto_rmdp/learning.hpp"

namespace proto_rmdp {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SweepConfig {
    std::vector<Algorithm> algorithms{Algorithm::RpoAas, Algorithm::NrpoNpc, Algorithm::NrpoNpc2,
                                      Algorithm::Ucbvi};
    int episodes = 3000;
    int sims = 100;
    std::uint64_t seed = 0; // simulation i runs with seed + i
    double delta = 0.05;
    int prototypes = 4; // K
    bool fixed_gap = true;
    Real gap = 0.2;
    bool early_stop = false;
    double ucbvi_bonus_scale = 1.0;
    bool family_per_layer = false; // independent prototype draws per layer
    std::string out_dir;
};

// Strict `key = value` text: '#' comments and blank lines allowed, unknown
// and duplicate keys rejected.  Starts from defaults.
SweepConfig parse_config_text(const std::string& text);

// single-key override (command-line flags); same validation as the file path
void apply_override(SweepConfig& config, const std::string& key, const std::string& value);

// cross-field checks (fixed-gap feasibility, output directory present)
void validate_config(const SweepConfig& config);

// resolved configuration, parseable by parse_config_text
std::string echo_config(const SweepConfig& config);

struct SimulationSummary {
    Algorithm algorithm = Algorithm::RpoAas;
    int sim = 0;
    std::uint64_t seed = 0;
    long long convergence_episode = 0; // 0 = never converged / no candidate sets
    bool converged_to_true = false;
    bool coverage_all = false;
    Real coverage_rate = 0.0;
    Real final_reward = 0.0;
    Real optimal_reward = 0.0;
    Real gamma = 1.0;
    Real h = 0.0;
    Real cum_regret_final = 0.0;
    Real cum_regret_500 = 0.0; // at episode min(500, T)
    long long bound_violations = 0;
    long long radius_violations = 0;
    long long decomposition_violations = 0;
    long long coverage_loss_events = 0;
    std::optional<long long> convergence_threshold;
    std::optional<long long> finite_sample_threshold;
    std::optional<Real> regret_bound_final;
};

struct AlgoCurves {
    std::vector<Real> mean_reward;
    std::vector<Real> std_reward; // population standard deviation across sims
    std::vector<Real> mean_cum_regret;
};

struct SweepResult {
    SweepConfig config;
    std::vector<AlgoCurves> curves;          // index-aligned with config.algorithms
    std::vector<SimulationSummary> runs;      // grouped by algorithm, then sim
    std::vector<std::string> families;        // per-sim reconstruction record
    // per (algorithm, sim) expected-reward and cumulative-regret series,
    // retained for acceptance checks; indexed [algo][sim][episode]
    std::vector<std::vector<std::vector<Real>>> rewards;
    std::vector<std::vector<std::vector<Real>>> cum_regret;
};

// One prototype family per simulation, shared by every algorithm in that
// simulation (paired comparisons).  Deterministic for a given config,
// independent of the worker-pool size; PROTO_RMDP_THREADS caps the pool.
SweepResult run_sweep(const SweepConfig& config);

// curves.csv, runs.csv, analysis.csv, config.echo, families.txt
void write_csv(const SweepResult& result, const std::string& dir);

std::string summarize(const SweepResult& result);
std::string summarize_dir(const std::string& dir);

std::string format_real(Real v); // fixed 12-significant-digit formatting

} // namespace proto_rmdp
