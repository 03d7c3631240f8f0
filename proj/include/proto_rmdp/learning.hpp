#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "proto_rmdp/gridworld.hpp"
#include "proto_rmdp/mdp.hpp"
#include "proto_rmdp/planning.hpp"

namespace proto_rmdp {

enum class Algorithm { RpoAas, NrpoNpc, NrpoNpc2, Ucbvi, Oracle };

std::string algorithm_name(Algorithm algo);
std::optional<Algorithm> parse_algorithm(const std::string& name);

struct ExperimentConfig {
    int episodes = 3000; // T; fixed up front, the elimination radius depends on it
    double delta = 0.05;
    Algorithm algorithm = Algorithm::RpoAas;
    std::uint64_t seed = 0;
    bool early_stop = false;
    double ucbvi_bonus_scale = 1.0;
};

// Visit counts, empirical transition rows and the surviving candidate sets.
// Counts read during episode t cover episodes 1..t-1; bookkeeping is updated
// after the episode has been executed.
struct LearnerState {
    std::vector<long> count;                          // N(s,a), flat s * A + a
    std::vector<std::vector<long>> transition_count;  // per (s,a), over next-layer indices
    std::vector<std::vector<Real>> empirical;         // P-hat rows; empty while N(s,a) = 0
    std::vector<std::vector<int>> surviving;          // per layer, ascending
    Policy current_policy;
    int episode = 1;
    bool frozen = false;

    long pair_count(int state, int action, int num_actions) const {
        return count[static_cast<std::size_t>(state) * num_actions + action];
    }
};

LearnerState make_learner_state(const LayeredMdp& mdp, const PrototypeFamily& family);

// Elimination radius sqrt(4 |S_{l+1}| ln(3 L T / delta) / n).  n = 0 returns
// infinity: with no samples at the anchor nothing may be eliminated.
Real hoeffding_radius(int succ_layer_size, int num_layers, int episodes, double delta, long n);

// most-visited (state, action) of the layer; ties toward the smallest
// (in-layer state index, action index)
std::pair<int, int> select_anchor_pair(const LearnerState& state, const LayeredMdp& mdp,
                                       int layer);

struct EliminationResult {
    std::vector<int> survivors;
    bool coverage_loss = false; // every prototype failed; nearest one retained
};

// Keeps the prototypes whose row at the layer's anchor pair lies within the
// Hoeffding radius of the empirical row.  If the test would empty the set,
// the nearest prototype is retained and the event reported.
EliminationResult eliminate_prototypes(const LearnerState& state, const PrototypeFamily& family,
                                       const LayeredMdp& mdp, int layer,
                                       const ExperimentConfig& config);

// true once every layer's surviving set is a singleton
bool early_stop_check(const LearnerState& state);

// NRPO-NPC selection: the prototype nearest (in l1) to the empirical row at
// the layer's anchor pair; smallest index with no data
int nrpo_nearest_at_anchor(const LearnerState& state, const PrototypeFamily& family,
                           const LayeredMdp& mdp, int layer);

// NRPO-NPC2 selection: smallest summed l1 distance over the layer's visited
// pairs (never-visited pairs contribute nothing)
int nrpo_nearest_layer_sum(const LearnerState& state, const PrototypeFamily& family,
                           const LayeredMdp& mdp, int layer);

// Optimistic backward induction on the empirical model.  Pairs without data
// saturate at the value ceiling r_max * L; visited pairs get the exploration
// bonus scale * (L - layer) * sqrt(ln(3 |S| |A| T / delta) / N).  Returns the
// greedy policy and the optimistic values, clipped to [0, r_max * L].
std::pair<Policy, std::vector<Real>> ucbvi_plan(const LearnerState& state, const LayeredMdp& mdp,
                                                const ExperimentConfig& config);

struct EpisodeRecord {
    Real expected_reward = 0.0; // exact, under the true kernel
    Real regret = 0.0;          // optimal value minus expected_reward
    Real robust_lower_bound = 0.0;
    bool has_lower_bound = false; // RPO-AAS only
    bool coverage = false;        // true kernel inside the ambiguity set
    bool frozen = false;
    bool coverage_loss = false;
    std::vector<int> policy_actions;         // the episode's policy
    std::vector<int> candidate_sizes;        // per layer; empty when no candidate sets
    std::vector<std::vector<int>> survivors; // RPO-AAS
    std::vector<int> minimizers;             // RPO-AAS, per (s,a): adversary's prototype
    std::vector<int> chosen;                 // NRPO-*, per layer: selected prototype
};

// Runs T episodes of the configured algorithm.  Family is ignored by the
// UCBVI and oracle baselines.  Deterministic given (config, mdp, family).
std::vector<EpisodeRecord> run_learner(const ExperimentConfig& config, const LayeredMdp& mdp,
                                       const PrototypeFamily& family);

} // namespace proto_rmdp
