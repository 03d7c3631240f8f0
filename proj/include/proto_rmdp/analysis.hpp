#pragma once

#include <optional>
#include <vector>

#include "proto_rmdp/learning.hpp"

namespace proto_rmdp {

// prefix sums of the per-episode regret terms
std::vector<Real> cumulative_regret(const std::vector<EpisodeRecord>& records);

// r_max * L^2 * gamma * sqrt(4 t |S| |A| ln(3 L T / delta)) for t = 1..T;
// nullopt when gamma is infinite (the bound is unavailable)
std::optional<std::vector<Real>> theoretical_regret_bound(int num_layers, Real gamma, int S_size,
                                                          int A_size, int T, double delta,
                                                          Real r_max);

// smallest t with t >= 4 L^4 gamma^2 |S| |A| ln(3 L T / delta) / (eps/r_max)^2
std::optional<long long> finite_sample_threshold(int num_layers, Real gamma, int S_size,
                                                 int A_size, int T, double delta, Real epsilon,
                                                 Real r_max);

// ceil(8 |S|^2 |A| ln(3 L T / delta) / h); 1 when h is infinite (nothing to
// eliminate), nullopt when h <= 0 (degenerate family)
std::optional<long long> convergence_threshold(int S_size, int A_size, int num_layers, int T,
                                               double delta, Real h);

struct RadiusCheckReport {
    bool available = false; // requires finite gamma and recorded survivor sets
    long long violations = 0;
    std::vector<Real> max_xi; // per episode: largest gap of the adversary's chosen rows
};

// For every covered episode, checks that each surviving prototype stays
// within 4 gamma sqrt(|S_{l+1}| |S_l| |A| ln(3 L T / delta) / t) of the truth
// in l1, uniformly over the layer's pairs, and reports the planner's chosen
// per-pair gaps.
RadiusCheckReport radius_consistency_check(const std::vector<EpisodeRecord>& records,
                                           const PrototypeFamily& family, const LayeredMdp& mdp,
                                           const ExperimentConfig& config);

// Sign checks of the regret decomposition: covered RPO-AAS episodes must
// have robust lower bound <= exact reward; NRPO episodes must have the
// optimal policy's value under the selected kernel no larger than the
// selected policy's.  Returns the number of episodes violating the sign
// beyond tolerance.
long long decomposition_diagnostic(const std::vector<EpisodeRecord>& records,
                                   const PrototypeFamily& family, const LayeredMdp& mdp);

struct AnalysisReport {
    std::vector<Real> cumulative_regret;
    std::optional<std::vector<Real>> theoretical_regret_bound;
    std::optional<long long> finite_sample_threshold; // at the reference accuracy below
    std::optional<long long> convergence_threshold;
    Real coverage_rate = 0.0; // fraction of episodes with the truth inside the ambiguity set
    bool coverage_all = false;
    long long bound_violations = 0; // episodes with cumulative regret above the bound
    long long radius_violations = 0;
    long long decomposition_violations = 0;
    long long coverage_loss_events = 0;
    long long convergence_episode = 0; // first all-singleton episode; 0 = never / no sets
    bool converged_to_true = false;
    Real gamma = 1.0;
    Real h = 0.0;
    Real r_max = 0.0;
};

// reference accuracy for the finite-sample threshold reported alongside runs
inline constexpr Real kReferenceEpsilon = 0.5;

AnalysisReport analyze_run(const std::vector<EpisodeRecord>& records,
                           const PrototypeFamily& family, const LayeredMdp& mdp,
                           const ExperimentConfig& config);

} // namespace proto_rmdp
