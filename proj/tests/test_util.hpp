#pragma once

#include <memory>
#include <numeric>
#include <vector>

#include "proto_rmdp/gridworld.hpp"
#include "proto_rmdp/mdp.hpp"
#include "proto_rmdp/planning.hpp"
#include "proto_rmdp/rng.hpp"

namespace proto_rmdp::testing {

// random stochastic row bounded away from zero, so induced quantities and
// round trips stay well-conditioned
inline std::vector<Real> random_row(int size, Rng& rng, Real floor = 0.05) {
    std::vector<Real> row(size);
    Real sum = 0.0;
    for (Real& v : row) {
        v = floor + rng.uniform();
        sum += v;
    }
    for (Real& v : row) v /= sum;
    return row;
}

// layered MDP with strictly positive random rows and uniform [0,1] rewards
inline LayeredMdp random_instance(const std::vector<int>& sizes, int num_actions, Rng& rng) {
    int num_states = std::accumulate(sizes.begin(), sizes.end(), 0);
    std::vector<std::vector<int>> layers(sizes.size());
    int id = 0;
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        layers[l].resize(sizes[l]);
        for (int& s : layers[l]) s = id++;
    }
    std::vector<std::vector<Real>> reward(num_states, std::vector<Real>(num_actions, 0.0));
    for (auto& row : reward)
        for (Real& v : row) v = rng.uniform();
    TransitionKernel kernel(num_states, num_actions);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        for (int s : layers[l])
            for (int a = 0; a < num_actions; ++a) {
                TransitionRow row;
                row.states = layers[l + 1];
                row.probs = random_row(sizes[l + 1], rng);
                kernel.set_row(s, a, std::move(row));
            }
    return LayeredMdp(std::move(layers), num_actions, std::move(reward), std::move(kernel));
}

inline Policy random_deterministic_policy(const LayeredMdp& mdp, Rng& rng) {
    std::vector<int> actions(mdp.num_states(), -1);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l)
        for (int s : mdp.layer_states(l)) actions[s] = rng.uniform_int(mdp.num_actions());
    return Policy::deterministic(std::move(actions));
}

inline Policy random_stochastic_policy(const LayeredMdp& mdp, Rng& rng) {
    std::vector<std::vector<Real>> probs(mdp.num_states());
    for (int l = 0; l + 1 < mdp.num_layers(); ++l)
        for (int s : mdp.layer_states(l)) probs[s] = random_row(mdp.num_actions(), rng, 0.2);
    return Policy::stochastic(std::move(probs));
}

// random per-layer prototype rows; survivors cover the full family
inline CandidateSets random_candidates(const LayeredMdp& mdp, const std::vector<int>& prototypes,
                                       Rng& rng) {
    auto fragments = std::make_shared<std::vector<std::vector<LayerKernel>>>();
    CandidateSets sets;
    fragments->resize(mdp.num_layers() - 1);
    sets.survivors.resize(mdp.num_layers() - 1);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        for (int k = 0; k < prototypes[l]; ++k) {
            LayerKernel lk(mdp.layer_size(l), mdp.num_actions(), mdp.layer_size(l + 1));
            for (int i = 0; i < mdp.layer_size(l); ++i)
                for (int a = 0; a < mdp.num_actions(); ++a) {
                    auto row = random_row(mdp.layer_size(l + 1), rng);
                    std::copy(row.begin(), row.end(), lk.row(i, a).begin());
                }
            (*fragments)[l].push_back(std::move(lk));
        }
        sets.survivors[l].resize(prototypes[l]);
        std::iota(sets.survivors[l].begin(), sets.survivors[l].end(), 0);
    }
    sets.fragments = fragments;
    return sets;
}

// prototype family over an arbitrary layered MDP whose true fragments are
// copied from the MDP's own kernel; wrong prototypes are random
inline PrototypeFamily family_for(const LayeredMdp& mdp, int K, int true_index, Rng& rng) {
    auto fragments = std::make_shared<std::vector<std::vector<LayerKernel>>>();
    fragments->resize(mdp.num_layers() - 1);
    DenseKernel truth = DenseKernel::compile(mdp.true_kernel(), mdp);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l)
        for (int k = 0; k < K; ++k) {
            LayerKernel lk(mdp.layer_size(l), mdp.num_actions(), mdp.layer_size(l + 1));
            for (int i = 0; i < mdp.layer_size(l); ++i)
                for (int a = 0; a < mdp.num_actions(); ++a) {
                    auto dst = lk.row(i, a);
                    if (k == true_index) {
                        auto src = truth.row(l, i, a);
                        std::copy(src.begin(), src.end(), dst.begin());
                    } else {
                        auto row = random_row(mdp.layer_size(l + 1), rng);
                        std::copy(row.begin(), row.end(), dst.begin());
                    }
                }
            (*fragments)[l].push_back(std::move(lk));
        }
    PrototypeFamily family;
    family.fragments = fragments;
    family.true_index.assign(mdp.num_layers() - 1, true_index);
    family.shared = true;
    return family;
}

} // namespace proto_rmdp::testing
