#include "proto_rmdp/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace proto_rmdp {

std::string algorithm_name(Algorithm algo) {
    switch (algo) {
    case Algorithm::RpoAas: return "rpo-aas";
    case Algorithm::NrpoNpc: return "nrpo-npc";
    case Algorithm::NrpoNpc2: return "nrpo-npc2";
    case Algorithm::Ucbvi: return "ucbvi";
    case Algorithm::Oracle: return "oracle";
    }
    return "unknown";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
    for (Algorithm algo : {Algorithm::RpoAas, Algorithm::NrpoNpc, Algorithm::NrpoNpc2,
                           Algorithm::Ucbvi, Algorithm::Oracle})
        if (algorithm_name(algo) == name) return algo;
    return std::nullopt;
}

LearnerState make_learner_state(const LayeredMdp& mdp, const PrototypeFamily& family) {
    LearnerState st;
    int A = mdp.num_actions();
    std::size_t pairs = static_cast<std::size_t>(mdp.num_states()) * A;
    st.count.assign(pairs, 0);
    st.transition_count.resize(pairs);
    st.empirical.resize(pairs);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l)
        for (int s : mdp.layer_states(l))
            for (int a = 0; a < A; ++a)
                st.transition_count[static_cast<std::size_t>(s) * A + a].assign(
                    mdp.layer_size(l + 1), 0);
    st.surviving.resize(mdp.num_layers() - 1);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        st.surviving[l].resize(family.prototypes_per_layer(l));
        std::iota(st.surviving[l].begin(), st.surviving[l].end(), 0);
    }
    return st;
}

Real hoeffding_radius(int succ_layer_size, int num_layers, int episodes, double delta, long n) {
    if (delta <= 0.0 || delta >= 1.0)
        throw std::invalid_argument("delta must lie strictly between 0 and 1");
    if (n < 0) throw std::invalid_argument("negative sample count");
    if (n == 0) return std::numeric_limits<Real>::infinity();
    Real log_term = std::log(3.0 * num_layers * episodes / delta);
    return std::sqrt(4.0 * succ_layer_size * log_term / static_cast<Real>(n));
}

std::pair<int, int> select_anchor_pair(const LearnerState& state, const LayeredMdp& mdp,
                                       int layer) {
    int A = mdp.num_actions();
    int best_state = mdp.state_id(layer, 0);
    int best_action = 0;
    long best_count = -1;
    for (int i = 0; i < mdp.layer_size(layer); ++i) {
        int s = mdp.state_id(layer, i);
        for (int a = 0; a < A; ++a) {
            long n = state.count[static_cast<std::size_t>(s) * A + a];
            if (n > best_count) {
                best_count = n;
                best_state = s;
                best_action = a;
            }
        }
    }
    return {best_state, best_action};
}

EliminationResult eliminate_prototypes(const LearnerState& state, const PrototypeFamily& family,
                                       const LayeredMdp& mdp, int layer,
                                       const ExperimentConfig& config) {
    const std::vector<int>& current = state.surviving[layer];
    auto [s, a] = select_anchor_pair(state, mdp, layer);
    long n = state.count[static_cast<std::size_t>(s) * mdp.num_actions() + a];
    Real radius = hoeffding_radius(mdp.layer_size(layer + 1), mdp.num_layers(),
                                   config.episodes, config.delta, n);
    if (!std::isfinite(radius)) return {current, false};

    const auto& empirical = state.empirical[static_cast<std::size_t>(s) * mdp.num_actions() + a];
    const auto& protos = (*family.fragments)[layer];
    int idx = mdp.index_in_layer(s);

    EliminationResult res;
    Real nearest = std::numeric_limits<Real>::infinity();
    int nearest_k = current.front();
    for (int k : current) {
        Real d = l1_distance(protos[k].row(idx, a), empirical);
        if (d <= radius) res.survivors.push_back(k);
        if (d < nearest) {
            nearest = d;
            nearest_k = k;
        }
    }
    if (res.survivors.empty()) {
        res.survivors.push_back(nearest_k);
        res.coverage_loss = true;
    }
    return res;
}

bool early_stop_check(const LearnerState& state) {
    for (const auto& set : state.surviving)
        if (set.size() != 1) return false;
    return true;
}

namespace {

// per (layer, prototype): fragment rows coincide with the truth everywhere
// in the layer; coverage of the ambiguity set reduces to a set lookup
std::vector<std::vector<bool>> match_truth_table(const PrototypeFamily& family,
                                                 const DenseKernel& truth,
                                                 const LayeredMdp& mdp) {
    std::vector<std::vector<bool>> matches(mdp.num_layers() - 1);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        const auto& protos = (*family.fragments)[l];
        matches[l].resize(protos.size());
        for (std::size_t k = 0; k < protos.size(); ++k) {
            bool equal = true;
            for (int i = 0; equal && i < mdp.layer_size(l); ++i)
                for (int a = 0; equal && a < mdp.num_actions(); ++a)
                    if (l1_distance(protos[k].row(i, a), truth.row(l, i, a)) > kRowTol)
                        equal = false;
            matches[l][k] = equal;
        }
    }
    return matches;
}

bool ambiguity_covers_truth(const std::vector<std::vector<int>>& surviving,
                            const std::vector<std::vector<bool>>& matches) {
    for (std::size_t l = 0; l < surviving.size(); ++l) {
        bool found = false;
        for (int k : surviving[l])
            if (matches[l][k]) {
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

void update_counts(LearnerState& st, const std::vector<TrajectoryStep>& trajectory,
                   const LayeredMdp& mdp) {
    int A = mdp.num_actions();
    for (const auto& step : trajectory) {
        std::size_t pair = static_cast<std::size_t>(step.state) * A + step.action;
        ++st.count[pair];
        auto& tc = st.transition_count[pair];
        ++tc[mdp.index_in_layer(step.next)];
        auto& row = st.empirical[pair];
        row.resize(tc.size());
        Real n = static_cast<Real>(st.count[pair]);
        for (std::size_t j = 0; j < tc.size(); ++j) row[j] = static_cast<Real>(tc[j]) / n;
    }
}

// loop-free structure: every layer is visited once per episode
void check_count_consistency(const LearnerState& st, const LayeredMdp& mdp, int episodes_done) {
    int A = mdp.num_actions();
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        long total = 0;
        for (int s : mdp.layer_states(l))
            for (int a = 0; a < A; ++a) total += st.count[static_cast<std::size_t>(s) * A + a];
        if (total != episodes_done)
            throw std::logic_error("layer " + std::to_string(l) + " holds " +
                                   std::to_string(total) + " visits after " +
                                   std::to_string(episodes_done) + " episodes");
    }
}

void check_monotone_subset(const std::vector<int>& next, const std::vector<int>& prev) {
    if (!std::includes(prev.begin(), prev.end(), next.begin(), next.end()))
        throw std::logic_error("candidate set grew between episodes");
}

} // namespace

int nrpo_nearest_at_anchor(const LearnerState& st, const PrototypeFamily& family,
                           const LayeredMdp& mdp, int layer) {
    auto [s, a] = select_anchor_pair(st, mdp, layer);
    std::size_t pair = static_cast<std::size_t>(s) * mdp.num_actions() + a;
    if (st.count[pair] == 0) return 0; // no data: smallest index
    const auto& protos = (*family.fragments)[layer];
    int idx = mdp.index_in_layer(s);
    int best_k = 0;
    Real best = std::numeric_limits<Real>::infinity();
    for (int k = 0; k < static_cast<int>(protos.size()); ++k) {
        Real d = l1_distance(protos[k].row(idx, a), st.empirical[pair]);
        if (d < best) {
            best = d;
            best_k = k;
        }
    }
    return best_k;
}

int nrpo_nearest_layer_sum(const LearnerState& st, const PrototypeFamily& family,
                           const LayeredMdp& mdp, int layer) {
    const auto& protos = (*family.fragments)[layer];
    int A = mdp.num_actions();
    int best_k = 0;
    Real best = std::numeric_limits<Real>::infinity();
    for (int k = 0; k < static_cast<int>(protos.size()); ++k) {
        Real sum = 0.0;
        for (int i = 0; i < mdp.layer_size(layer); ++i) {
            int s = mdp.state_id(layer, i);
            for (int a = 0; a < A; ++a) {
                std::size_t pair = static_cast<std::size_t>(s) * A + a;
                if (st.count[pair] == 0) continue; // undefined rows contribute nothing
                sum += l1_distance(protos[k].row(i, a), st.empirical[pair]);
            }
        }
        if (sum < best) {
            best = sum;
            best_k = k;
        }
    }
    return best_k;
}

// optimistic backward induction on the empirical model
std::pair<Policy, std::vector<Real>> ucbvi_plan(const LearnerState& st, const LayeredMdp& mdp,
                                                const ExperimentConfig& config) {
    int A = mdp.num_actions();
    Real ceiling = mdp.max_reward() * mdp.num_layers();
    Real log_term =
        std::log(3.0 * mdp.num_states() * A * std::max(config.episodes, 1) / config.delta);
    std::vector<Real> values(mdp.num_states(), 0.0);
    std::vector<int> actions(mdp.num_states(), -1);
    for (int l = mdp.num_layers() - 2; l >= 0; --l) {
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            int s = mdp.state_id(l, i);
            Real best = -std::numeric_limits<Real>::infinity();
            int best_a = 0;
            for (int a = 0; a < A; ++a) {
                std::size_t pair = static_cast<std::size_t>(s) * A + a;
                long n = st.count[pair];
                Real q;
                if (n == 0) {
                    // nothing observed: maximal bonus, the pair saturates at
                    // the value ceiling
                    q = ceiling;
                } else {
                    Real bonus = config.ucbvi_bonus_scale * (mdp.num_layers() - l) *
                                 std::sqrt(log_term / static_cast<Real>(n));
                    q = mdp.reward(s, a) + bonus;
                    const auto& row = st.empirical[pair];
                    for (int j = 0; j < mdp.layer_size(l + 1); ++j)
                        q += row[j] * values[mdp.state_id(l + 1, j)];
                }
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            values[s] = std::clamp(best, 0.0, ceiling);
            actions[s] = best_a;
        }
    }
    return {Policy::deterministic(std::move(actions)), std::move(values)};
}

std::vector<EpisodeRecord> run_learner(const ExperimentConfig& config, const LayeredMdp& mdp,
                                       const PrototypeFamily& family) {
    if (config.delta <= 0.0 || config.delta >= 1.0)
        throw std::invalid_argument("delta must lie strictly between 0 and 1");
    std::vector<EpisodeRecord> records;
    if (config.episodes <= 0) return records;
    records.reserve(config.episodes);

    DenseKernel truth = DenseKernel::compile(mdp.true_kernel(), mdp);
    auto [optimal_policy, optimal_values] = optimal_policy_dp(truth, mdp);
    Real optimal_value = optimal_values[mdp.start_state()];

    LearnerState st = make_learner_state(mdp, family);
    Rng rng(config.seed);
    auto matches = match_truth_table(family, truth, mdp);

    CandidateSets sets;
    sets.fragments = family.fragments;

    // carried across frozen episodes
    Real frozen_lower_bound = 0.0;
    bool frozen_coverage = false;
    std::vector<int> frozen_minimizers;

    for (int t = 1; t <= config.episodes; ++t) {
        st.episode = t;
        EpisodeRecord rec;

        switch (config.algorithm) {
        case Algorithm::RpoAas: {
            if (!st.frozen) {
                bool coverage_loss = false;
                for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
                    EliminationResult res = eliminate_prototypes(st, family, mdp, l, config);
                    check_monotone_subset(res.survivors, st.surviving[l]);
                    coverage_loss |= res.coverage_loss;
                    if (family.shared) {
                        for (auto& set : st.surviving) set = res.survivors;
                    } else {
                        st.surviving[l] = std::move(res.survivors);
                    }
                }
                sets.survivors = st.surviving;
                RobustSolution sol = robust_policy_dp(sets, mdp);
                st.current_policy = std::move(sol.policy);
                rec.coverage_loss = coverage_loss;
                frozen_lower_bound = sol.worst_case_values[mdp.start_state()];
                frozen_coverage = ambiguity_covers_truth(st.surviving, matches);
                frozen_minimizers = std::move(sol.per_pair_minimizers);
                if (config.early_stop && early_stop_check(st)) st.frozen = true;
            }
            rec.robust_lower_bound = frozen_lower_bound;
            rec.has_lower_bound = true;
            rec.coverage = frozen_coverage;
            rec.minimizers = frozen_minimizers;
            rec.survivors = st.surviving;
            rec.candidate_sizes.reserve(st.surviving.size());
            for (const auto& set : st.surviving)
                rec.candidate_sizes.push_back(static_cast<int>(set.size()));
            break;
        }
        case Algorithm::NrpoNpc:
        case Algorithm::NrpoNpc2: {
            std::vector<int> chosen(mdp.num_layers() - 1);
            for (int l = 0; l + 1 < mdp.num_layers(); ++l)
                chosen[l] = config.algorithm == Algorithm::NrpoNpc
                                ? nrpo_nearest_at_anchor(st, family, mdp, l)
                                : nrpo_nearest_layer_sum(st, family, mdp, l);
            std::vector<LayerKernel> layers;
            layers.reserve(chosen.size());
            for (std::size_t l = 0; l < chosen.size(); ++l)
                layers.push_back((*family.fragments)[l][chosen[l]]);
            st.current_policy = optimal_policy_dp(DenseKernel(std::move(layers)), mdp).first;
            rec.chosen = std::move(chosen);
            rec.candidate_sizes.reserve(st.surviving.size());
            for (const auto& set : st.surviving)
                rec.candidate_sizes.push_back(static_cast<int>(set.size()));
            break;
        }
        case Algorithm::Ucbvi:
            st.current_policy = ucbvi_plan(st, mdp, config).first;
            break;
        case Algorithm::Oracle:
            st.current_policy = optimal_policy;
            break;
        }

        auto trajectory = sample_trajectory(truth, st.current_policy, mdp, rng);
        update_counts(st, trajectory, mdp);
        check_count_consistency(st, mdp, t);

        rec.expected_reward = expected_reward(occupancy_from(truth, st.current_policy, mdp), mdp);
        rec.regret = optimal_value - rec.expected_reward;
        rec.frozen = st.frozen;
        rec.policy_actions = st.current_policy.actions();
        if (rec.has_lower_bound && rec.coverage &&
            rec.robust_lower_bound > rec.expected_reward + kDerivedTol)
            throw std::logic_error("robust lower bound exceeds the exact reward under coverage");
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace proto_rmdp
