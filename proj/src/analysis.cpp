#include "proto_rmdp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace proto_rmdp {

std::vector<Real> cumulative_regret(const std::vector<EpisodeRecord>& records) {
    std::vector<Real> cum;
    cum.reserve(records.size());
    Real total = 0.0;
    for (const auto& rec : records) {
        total += rec.regret;
        cum.push_back(total);
    }
    return cum;
}

std::optional<std::vector<Real>> theoretical_regret_bound(int num_layers, Real gamma, int S_size,
                                                          int A_size, int T, double delta,
                                                          Real r_max) {
    if (!std::isfinite(gamma)) return std::nullopt;
    Real log_term = std::log(3.0 * num_layers * std::max(T, 1) / delta);
    Real scale = r_max * num_layers * num_layers * gamma *
                 std::sqrt(4.0 * S_size * A_size * log_term);
    std::vector<Real> bound;
    bound.reserve(T);
    for (int t = 1; t <= T; ++t) bound.push_back(scale * std::sqrt(static_cast<Real>(t)));
    return bound;
}

std::optional<long long> finite_sample_threshold(int num_layers, Real gamma, int S_size,
                                                 int A_size, int T, double delta, Real epsilon,
                                                 Real r_max) {
    if (!std::isfinite(gamma)) return std::nullopt;
    if (epsilon <= 0.0 || r_max <= 0.0) return std::nullopt;
    Real unit_eps = epsilon / r_max; // the closed form assumes rewards in [0,1]
    Real L = num_layers;
    Real raw = 4.0 * L * L * L * L * gamma * gamma * S_size * A_size *
               std::log(3.0 * L * std::max(T, 1) / delta) / (unit_eps * unit_eps);
    return std::max<long long>(1, static_cast<long long>(std::ceil(raw)));
}

std::optional<long long> convergence_threshold(int S_size, int A_size, int num_layers, int T,
                                               double delta, Real h) {
    if (std::isinf(h)) return 1; // no competitor to eliminate
    if (h <= 0.0) return std::nullopt;
    Real raw = 8.0 * static_cast<Real>(S_size) * S_size * A_size *
               std::log(3.0 * num_layers * std::max(T, 1) / delta) / h;
    return std::max<long long>(1, static_cast<long long>(std::ceil(raw)));
}

RadiusCheckReport radius_consistency_check(const std::vector<EpisodeRecord>& records,
                                           const PrototypeFamily& family, const LayeredMdp& mdp,
                                           const ExperimentConfig& config) {
    RadiusCheckReport report;
    Real gamma = compute_gamma(family, mdp);
    if (!std::isfinite(gamma)) return report;
    report.available = true;
    report.max_xi.assign(records.size(), 0.0);

    int A = mdp.num_actions();
    int L = mdp.num_layers();
    Real log_term = std::log(3.0 * L * std::max(config.episodes, 1) / config.delta);

    // prototype-vs-truth gaps are fixed over a run: per (layer, k) the
    // maximum over the layer's pairs, plus per-pair values for the xi report
    std::vector<std::vector<Real>> max_gap(L - 1);
    std::vector<std::vector<std::vector<Real>>> pair_gap(L - 1); // [l][k][i*A+a]
    for (int l = 0; l + 1 < L; ++l) {
        const auto& protos = (*family.fragments)[l];
        int truth = family.true_index[l];
        max_gap[l].assign(protos.size(), 0.0);
        pair_gap[l].assign(protos.size(),
                           std::vector<Real>(static_cast<std::size_t>(mdp.layer_size(l)) * A, 0.0));
        for (std::size_t k = 0; k < protos.size(); ++k)
            for (int i = 0; i < mdp.layer_size(l); ++i)
                for (int a = 0; a < A; ++a) {
                    Real d = l1_distance(protos[k].row(i, a), protos[truth].row(i, a));
                    pair_gap[l][k][i * A + a] = d;
                    max_gap[l][k] = std::max(max_gap[l][k], d);
                }
    }

    for (std::size_t e = 0; e < records.size(); ++e) {
        const auto& rec = records[e];
        if (rec.survivors.empty()) continue; // no ambiguity set recorded
        int t = static_cast<int>(e) + 1;
        if (rec.coverage) {
            for (int l = 0; l + 1 < L; ++l) {
                Real bound = 4.0 * gamma *
                             std::sqrt(mdp.layer_size(l + 1) * mdp.layer_size(l) * A * log_term /
                                       static_cast<Real>(t));
                for (int k : rec.survivors[l])
                    if (max_gap[l][k] > bound) ++report.violations;
            }
        }
        if (!rec.minimizers.empty()) {
            Real xi = 0.0;
            for (int l = 0; l + 1 < L; ++l)
                for (int i = 0; i < mdp.layer_size(l); ++i) {
                    int s = mdp.state_id(l, i);
                    for (int a = 0; a < A; ++a) {
                        int k = rec.minimizers[static_cast<std::size_t>(s) * A + a];
                        if (k >= 0) xi = std::max(xi, pair_gap[l][k][i * A + a]);
                    }
                }
            report.max_xi[e] = xi;
        }
    }
    return report;
}

long long decomposition_diagnostic(const std::vector<EpisodeRecord>& records,
                                   const PrototypeFamily& family, const LayeredMdp& mdp) {
    long long violations = 0;
    DenseKernel truth = DenseKernel::compile(mdp.true_kernel(), mdp);
    Policy optimal = optimal_policy_dp(truth, mdp).first;
    // value of the optimal-under-truth policy and of the per-episode plan,
    // both under the selected kernel; memoized on the selection
    std::map<std::vector<int>, std::pair<Real, Real>> cache;
    for (const auto& rec : records) {
        if (rec.has_lower_bound) {
            if (rec.coverage && rec.robust_lower_bound > rec.expected_reward + kDerivedTol)
                ++violations;
            continue;
        }
        if (rec.chosen.empty()) continue;
        auto it = cache.find(rec.chosen);
        if (it == cache.end()) {
            std::vector<LayerKernel> layers;
            layers.reserve(rec.chosen.size());
            for (std::size_t l = 0; l < rec.chosen.size(); ++l)
                layers.push_back((*family.fragments)[l][rec.chosen[l]]);
            DenseKernel selected(std::move(layers));
            Real planned = optimal_policy_dp(selected, mdp).second[mdp.start_state()];
            Real reference = value_function(optimal, selected, mdp)[mdp.start_state()];
            it = cache.emplace(rec.chosen, std::make_pair(planned, reference)).first;
        }
        if (it->second.second > it->second.first + kDerivedTol) ++violations;
    }
    return violations;
}

AnalysisReport analyze_run(const std::vector<EpisodeRecord>& records,
                           const PrototypeFamily& family, const LayeredMdp& mdp,
                           const ExperimentConfig& config) {
    AnalysisReport report;
    report.gamma = compute_gamma(family, mdp);
    report.h = compute_h(family, mdp);
    report.r_max = mdp.max_reward();
    report.cumulative_regret = cumulative_regret(records);
    report.theoretical_regret_bound =
        theoretical_regret_bound(mdp.num_layers(), report.gamma, mdp.num_states(),
                                 mdp.num_actions(), config.episodes, config.delta, report.r_max);
    report.finite_sample_threshold =
        finite_sample_threshold(mdp.num_layers(), report.gamma, mdp.num_states(),
                                mdp.num_actions(), config.episodes, config.delta,
                                kReferenceEpsilon, report.r_max);
    report.convergence_threshold = convergence_threshold(
        mdp.num_states(), mdp.num_actions(), mdp.num_layers(), config.episodes, config.delta,
        report.h);

    long long covered = 0;
    bool all_covered = !records.empty();
    for (std::size_t e = 0; e < records.size(); ++e) {
        const auto& rec = records[e];
        if (rec.coverage)
            ++covered;
        else if (rec.has_lower_bound)
            all_covered = false;
        if (rec.coverage_loss) ++report.coverage_loss_events;
        if (report.convergence_episode == 0 && !rec.candidate_sizes.empty()) {
            bool all_one = true;
            for (int size : rec.candidate_sizes)
                if (size != 1) all_one = false;
            if (all_one) {
                report.convergence_episode = static_cast<long long>(e) + 1;
                report.converged_to_true = rec.coverage;
            }
        }
        if (report.theoretical_regret_bound &&
            report.cumulative_regret[e] > (*report.theoretical_regret_bound)[e] + kDerivedTol)
            ++report.bound_violations;
    }
    report.coverage_rate =
        records.empty() ? 0.0 : static_cast<Real>(covered) / static_cast<Real>(records.size());
    report.coverage_all = all_covered && covered == static_cast<long long>(records.size());

    report.radius_violations =
        radius_consistency_check(records, family, mdp, config).violations;
    report.decomposition_violations = decomposition_diagnostic(records, family, mdp);
    return report;
}

} // namespace proto_rmdp
