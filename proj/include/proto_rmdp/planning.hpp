#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "proto_rmdp/mdp.hpp"

namespace proto_rmdp {

// Per-layer prototype rows plus the indices still standing.  The row data is
// shared (it never changes over a run); only the survivor lists do.
struct CandidateSets {
    // fragments[l][k]: dense rows of prototype k for layer l, l = 0..num_layers-2
    std::shared_ptr<const std::vector<std::vector<LayerKernel>>> fragments;
    std::vector<std::vector<int>> survivors; // ascending prototype indices per layer

    int num_layers_with_rows() const { return static_cast<int>(survivors.size()); }
};

struct RobustSolution {
    Policy policy;
    std::vector<Real> worst_case_values;   // per global state; 0 at the terminal
    std::vector<Real> robust_q;            // per (state, action): state * A + a
    std::vector<int> per_pair_minimizers;  // prototype attaining the inner min; -1 at terminal
};

// number of inner-loop updates of the last backup sweep (one per
// (state, action, prototype, successor) touched); used to pin down the
// sweep's cost model in tests
struct BackupStats {
    long long inner_updates = 0;
};

// standard backward induction; argmax ties break toward the smaller action
std::pair<Policy, std::vector<Real>> optimal_policy_dp(const DenseKernel& kernel,
                                                       const LayeredMdp& mdp);
std::pair<Policy, std::vector<Real>> optimal_policy_dp(const TransitionKernel& kernel,
                                                       const LayeredMdp& mdp);

// Robust backward induction over finite per-layer prototype sets.  The
// adversary picks a prototype independently at every (s, a) pair (the
// ambiguity set is a Cartesian product over pairs), so the per-pair inner
// minimization is exact.  Inner ties keep the smallest prototype index,
// outer ties the smallest action.
RobustSolution robust_policy_dp(const CandidateSets& sets, const LayeredMdp& mdp,
                                BackupStats* stats = nullptr);

// Exhaustive max-min search: every deterministic policy against every
// per-pair prototype assignment.  Only for small instances; throws if the
// search space exceeds 1e6 evaluations.
std::pair<Policy, Real> brute_force_robust_oracle(const CandidateSets& sets,
                                                  const LayeredMdp& mdp);

} // namespace proto_rmdp
