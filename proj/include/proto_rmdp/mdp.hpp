#pragma once

#include <span>
#include <string>
#include <vector>

#include "proto_rmdp/rng.hpp"

namespace proto_rmdp {

using Real = double;

// construction-level tolerance (row stochasticity) and derived-quantity
// tolerance (occupancy identities, round trips)
inline constexpr Real kRowTol = 1e-12;
inline constexpr Real kDerivedTol = 1e-9;

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// One transition row stored as explicit (successor, probability) pairs over
// global state ids.  Rows of a well-formed layered MDP only name states in
// the next layer; validate_layered_mdp reports any row that does not.
// An empty row means "undefined" (e.g. never-visited pairs in an induced
// kernel); it is never silently treated as a distribution.
struct TransitionRow {
    std::vector<int> states;
    std::vector<Real> probs;

    bool defined() const { return !states.empty(); }
};

class TransitionKernel {
  public:
    TransitionKernel() = default;
    TransitionKernel(int num_states, int num_actions)
        : num_states_(num_states), num_actions_(num_actions),
          rows_(static_cast<std::size_t>(num_states) * num_actions) {}

    void set_row(int state, int action, TransitionRow row) {
        rows_[index(state, action)] = std::move(row);
    }
    const TransitionRow& row(int state, int action) const {
        return rows_[index(state, action)];
    }
    bool has_row(int state, int action) const {
        return rows_[index(state, action)].defined();
    }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

  private:
    std::size_t index(int state, int action) const {
        return static_cast<std::size_t>(state) * num_actions_ + action;
    }

    int num_states_ = 0;
    int num_actions_ = 0;
    std::vector<TransitionRow> rows_;
};

// A deterministic action map, or (for policies induced from occupancy
// measures) a per-state distribution over actions.  States with no data in
// the stochastic form are "undefined" rather than silently uniform.
class Policy {
  public:
    Policy() = default;

    static Policy deterministic(std::vector<int> actions);
    static Policy stochastic(std::vector<std::vector<Real>> probs);

    bool deterministic_form() const { return stochastic_.empty(); }
    int num_states() const;

    // deterministic form only
    int action(int state) const;
    const std::vector<int>& actions() const { return actions_; }

    // valid in both forms
    Real prob(int state, int action) const;
    bool defined(int state) const;

  private:
    std::vector<int> actions_;                 // deterministic form
    std::vector<std::vector<Real>> stochastic_; // stochastic form
};

// Layered (loop-free) episodic MDP.  States live in a global table; layer
// membership is an explicit list of global ids per layer, so a malformed
// instance (overlapping layers, leaking rows, ...) is representable and
// reported by validate_layered_mdp rather than being unconstructible.
class LayeredMdp {
  public:
    LayeredMdp(std::vector<std::vector<int>> layers, int num_actions,
               std::vector<std::vector<Real>> reward, TransitionKernel true_kernel);

    int num_layers() const { return static_cast<int>(layers_.size()); }
    int horizon() const { return num_layers() - 1; } // transitions per episode
    int num_states() const { return static_cast<int>(reward_.size()); }
    int num_actions() const { return num_actions_; }

    int layer_size(int layer) const { return static_cast<int>(layers_[layer].size()); }
    int state_id(int layer, int index) const { return layers_[layer][index]; }
    const std::vector<int>& layer_states(int layer) const { return layers_[layer]; }

    // -1 for states not covered by any layer (malformed instances)
    int layer_of(int state) const { return layer_of_[state]; }
    int index_in_layer(int state) const { return index_in_layer_[state]; }

    int start_state() const { return layers_.front().empty() ? -1 : layers_.front()[0]; }
    int terminal_state() const { return layers_.back().empty() ? -1 : layers_.back()[0]; }

    Real reward(int state, int action) const { return reward_[state][action]; }
    Real max_reward() const;

    const TransitionKernel& true_kernel() const { return true_kernel_; }

  private:
    std::vector<std::vector<int>> layers_;
    int num_actions_;
    std::vector<std::vector<Real>> reward_;
    TransitionKernel true_kernel_;
    std::vector<int> layer_of_;
    std::vector<int> index_in_layer_;
};

// Dense transition rows for every (state, action) pair of a single layer,
// aligned to the ordering of the successor layer.
class LayerKernel {
  public:
    LayerKernel() = default;
    LayerKernel(int num_states, int num_actions, int succ_size)
        : num_states_(num_states), num_actions_(num_actions), succ_size_(succ_size),
          data_(static_cast<std::size_t>(num_states) * num_actions * succ_size, 0.0) {}

    std::span<Real> row(int index, int action) {
        return {data_.data() + offset(index, action), static_cast<std::size_t>(succ_size_)};
    }
    std::span<const Real> row(int index, int action) const {
        return {data_.data() + offset(index, action), static_cast<std::size_t>(succ_size_)};
    }

    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }
    int succ_size() const { return succ_size_; }

  private:
    std::size_t offset(int index, int action) const {
        return (static_cast<std::size_t>(index) * num_actions_ + action) * succ_size_;
    }

    int num_states_ = 0;
    int num_actions_ = 0;
    int succ_size_ = 0;
    std::vector<Real> data_;
};

// Evaluation form of a kernel: one LayerKernel per non-terminal layer.
// compile() checks the kernel against the MDP structure and throws
// std::invalid_argument on any mismatch.
class DenseKernel {
  public:
    DenseKernel() = default;
    static DenseKernel compile(const TransitionKernel& kernel, const LayeredMdp& mdp);

    const LayerKernel& layer(int l) const { return layers_[l]; }
    LayerKernel& layer(int l) { return layers_[l]; }
    std::span<const Real> row(int layer, int index, int action) const {
        return layers_[layer].row(index, action);
    }
    int num_layers() const { return static_cast<int>(layers_.size()) + 1; }

    // assemble directly from per-layer dense rows
    explicit DenseKernel(std::vector<LayerKernel> layers) : layers_(std::move(layers)) {}

  private:
    std::vector<LayerKernel> layers_; // size num_layers()-1
};

// q(s, a, s') over consecutive-layer triples, addressed by
// (layer, index-in-layer, action, index-in-next-layer).
class OccupancyMeasure {
  public:
    explicit OccupancyMeasure(const LayeredMdp& mdp);

    Real at(int layer, int index, int action, int succ) const {
        return q_[layer][offset(layer, index, action, succ)];
    }
    Real& at(int layer, int index, int action, int succ) {
        return q_[layer][offset(layer, index, action, succ)];
    }

    Real pair_mass(int layer, int index, int action) const;
    Real state_mass(int layer, int index) const;
    Real action_mass(int layer, int index) const; // sum over actions and successors == state_mass

    int num_layers() const { return static_cast<int>(layer_sizes_.size()); }
    int layer_size(int layer) const { return layer_sizes_[layer]; }
    int num_actions() const { return num_actions_; }

  private:
    std::size_t offset(int layer, int index, int action, int succ) const {
        return (static_cast<std::size_t>(index) * num_actions_ + action) * layer_sizes_[layer + 1] + succ;
    }

    std::vector<int> layer_sizes_;
    int num_actions_ = 0;
    std::vector<std::vector<Real>> q_; // per layer, flattened (index, action, succ)
};

struct TrajectoryStep {
    int state;
    int action;
    int next;
};

// ---- operations ----

ValidationReport validate_layered_mdp(const LayeredMdp& mdp);

// occupancy identities at tolerance kDerivedTol: per-layer unit mass and
// flow conservation at interior states
ValidationReport validate_occupancy(const OccupancyMeasure& q, const LayeredMdp& mdp);

OccupancyMeasure occupancy_from(const DenseKernel& kernel, const Policy& policy,
                                const LayeredMdp& mdp);
OccupancyMeasure occupancy_from(const TransitionKernel& kernel, const Policy& policy,
                                const LayeredMdp& mdp);

// Induced kernel/policy from an occupancy measure.  Rows (states) with zero
// mass come back undefined, never fabricated.
TransitionKernel induce_kernel(const OccupancyMeasure& q, const LayeredMdp& mdp);
Policy induce_policy(const OccupancyMeasure& q, const LayeredMdp& mdp);

Real expected_reward(const OccupancyMeasure& q, const LayeredMdp& mdp);

// exact backward policy evaluation; values indexed by global state id
std::vector<Real> value_function(const Policy& policy, const DenseKernel& kernel,
                                 const LayeredMdp& mdp);
std::vector<Real> value_function(const Policy& policy, const TransitionKernel& kernel,
                                 const LayeredMdp& mdp);

std::vector<TrajectoryStep> sample_trajectory(const DenseKernel& kernel, const Policy& policy,
                                              const LayeredMdp& mdp, Rng& rng);
std::vector<TrajectoryStep> sample_trajectory(const TransitionKernel& kernel, const Policy& policy,
                                              const LayeredMdp& mdp, Rng& rng);

Real l1_distance(std::span<const Real> p, std::span<const Real> q);

} // namespace proto_rmdp
