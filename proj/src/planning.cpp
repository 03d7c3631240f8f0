#include "proto_rmdp/planning.hpp"

#include <limits>
#include <stdexcept>

namespace proto_rmdp {

std::pair<Policy, std::vector<Real>> optimal_policy_dp(const DenseKernel& kernel,
                                                       const LayeredMdp& mdp) {
    std::vector<Real> values(mdp.num_states(), 0.0);
    std::vector<int> actions(mdp.num_states(), -1);
    for (int l = mdp.num_layers() - 2; l >= 0; --l) {
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            int s = mdp.state_id(l, i);
            Real best = -std::numeric_limits<Real>::infinity();
            int best_a = 0;
            for (int a = 0; a < mdp.num_actions(); ++a) {
                Real q = mdp.reward(s, a);
                auto row = kernel.row(l, i, a);
                for (int j = 0; j < mdp.layer_size(l + 1); ++j)
                    q += row[j] * values[mdp.state_id(l + 1, j)];
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            values[s] = best;
            actions[s] = best_a;
        }
    }
    return {Policy::deterministic(std::move(actions)), std::move(values)};
}

std::pair<Policy, std::vector<Real>> optimal_policy_dp(const TransitionKernel& kernel,
                                                       const LayeredMdp& mdp) {
    return optimal_policy_dp(DenseKernel::compile(kernel, mdp), mdp);
}

RobustSolution robust_policy_dp(const CandidateSets& sets, const LayeredMdp& mdp,
                                BackupStats* stats) {
    if (sets.num_layers_with_rows() != mdp.num_layers() - 1)
        throw std::invalid_argument("candidate sets do not cover every non-terminal layer");
    RobustSolution sol;
    sol.worst_case_values.assign(mdp.num_states(), 0.0);
    sol.robust_q.assign(static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions(), 0.0);
    sol.per_pair_minimizers.assign(sol.robust_q.size(), -1);
    std::vector<int> actions(mdp.num_states(), -1);
    long long inner_updates = 0;

    for (int l = mdp.num_layers() - 2; l >= 0; --l) {
        const auto& protos = (*sets.fragments)[l];
        const auto& alive = sets.survivors[l];
        if (alive.empty()) throw std::invalid_argument("empty candidate set at layer " +
                                                       std::to_string(l));
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            int s = mdp.state_id(l, i);
            Real best = -std::numeric_limits<Real>::infinity();
            int best_a = 0;
            for (int a = 0; a < mdp.num_actions(); ++a) {
                Real worst = std::numeric_limits<Real>::infinity();
                int worst_k = -1;
                for (int k : alive) {
                    Real exp_v = 0.0;
                    auto row = protos[k].row(i, a);
                    for (int j = 0; j < mdp.layer_size(l + 1); ++j)
                        exp_v += row[j] * sol.worst_case_values[mdp.state_id(l + 1, j)];
                    inner_updates += mdp.layer_size(l + 1);
                    if (exp_v < worst) {
                        worst = exp_v;
                        worst_k = k;
                    }
                }
                Real q = mdp.reward(s, a) + worst;
                std::size_t pair = static_cast<std::size_t>(s) * mdp.num_actions() + a;
                sol.robust_q[pair] = q;
                sol.per_pair_minimizers[pair] = worst_k;
                if (q > best) {
                    best = q;
                    best_a = a;
                }
            }
            sol.worst_case_values[s] = best;
            actions[s] = best_a;
        }
    }
    sol.policy = Policy::deterministic(std::move(actions));
    if (stats) stats->inner_updates = inner_updates;
    return sol;
}

namespace {

// exact evaluation of a fixed policy under a fixed per-pair prototype choice
Real evaluate_assignment(const std::vector<int>& actions, const std::vector<int>& choice,
                         const CandidateSets& sets, const LayeredMdp& mdp) {
    std::vector<Real> values(mdp.num_states(), 0.0);
    for (int l = mdp.num_layers() - 2; l >= 0; --l) {
        const auto& protos = (*sets.fragments)[l];
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            int s = mdp.state_id(l, i);
            int a = actions[s];
            int k = choice[static_cast<std::size_t>(s) * mdp.num_actions() + a];
            Real v = mdp.reward(s, a);
            auto row = protos[k].row(i, a);
            for (int j = 0; j < mdp.layer_size(l + 1); ++j)
                v += row[j] * values[mdp.state_id(l + 1, j)];
            values[s] = v;
        }
    }
    return values[mdp.start_state()];
}

} // namespace

std::pair<Policy, Real> brute_force_robust_oracle(const CandidateSets& sets,
                                                  const LayeredMdp& mdp) {
    // non-terminal states in global-id order; the odometer below varies the
    // action of the last state fastest, so the first maximum encountered is
    // the coordinate-wise smallest optimal policy, matching robust_policy_dp
    std::vector<int> states;
    for (int l = 0; l + 1 < mdp.num_layers(); ++l)
        for (int s : mdp.layer_states(l)) states.push_back(s);

    double policy_count = 1.0;
    for (std::size_t i = 0; i < states.size(); ++i) policy_count *= mdp.num_actions();
    double assignment_count = 1.0;
    for (int s : states) {
        int kl = static_cast<int>(sets.survivors[mdp.layer_of(s)].size());
        for (int a = 0; a < mdp.num_actions(); ++a) assignment_count *= kl;
    }
    if (policy_count * assignment_count > 1e6)
        throw std::invalid_argument("instance too large for brute-force search");

    std::vector<int> actions(mdp.num_states(), 0);
    std::vector<int> best_actions;
    Real best_value = -std::numeric_limits<Real>::infinity();

    std::vector<int> pair_layer; // layer of each enumerated (s, a) slot
    std::vector<std::size_t> pair_index;
    for (int s : states)
        for (int a = 0; a < mdp.num_actions(); ++a) {
            pair_layer.push_back(mdp.layer_of(s));
            pair_index.push_back(static_cast<std::size_t>(s) * mdp.num_actions() + a);
        }

    while (true) {
        // worst case over every per-pair prototype assignment
        std::vector<std::size_t> pos(pair_layer.size(), 0);
        std::vector<int> choice(static_cast<std::size_t>(mdp.num_states()) * mdp.num_actions(), 0);
        Real worst = std::numeric_limits<Real>::infinity();
        while (true) {
            for (std::size_t p = 0; p < pos.size(); ++p)
                choice[pair_index[p]] = sets.survivors[pair_layer[p]][pos[p]];
            worst = std::min(worst, evaluate_assignment(actions, choice, sets, mdp));
            std::size_t p = pos.size();
            while (p > 0) {
                --p;
                if (++pos[p] < sets.survivors[pair_layer[p]].size()) break;
                pos[p] = 0;
                if (p == 0) goto assignments_done;
            }
            if (pos.size() == 0) break;
        }
    assignments_done:
        if (worst > best_value) {
            best_value = worst;
            best_actions = actions;
        }
        std::size_t i = states.size();
        while (i > 0) {
            --i;
            if (++actions[states[i]] < mdp.num_actions()) break;
            actions[states[i]] = 0;
            if (i == 0) goto policies_done;
        }
        if (states.empty()) break;
    }
policies_done:
    std::vector<int> full(mdp.num_states(), -1);
    for (int s : states) full[s] = best_actions[s];
    return {Policy::deterministic(std::move(full)), best_value};
}

} // namespace proto_rmdp
