#include "proto_rmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace proto_rmdp {

namespace {

std::string pair_name(int s, int a) {
    return "(s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")";
}

std::string real_str(Real v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

// ---- Policy ----

Policy Policy::deterministic(std::vector<int> actions) {
    Policy p;
    p.actions_ = std::move(actions);
    return p;
}

Policy Policy::stochastic(std::vector<std::vector<Real>> probs) {
    Policy p;
    p.stochastic_ = std::move(probs);
    return p;
}

int Policy::num_states() const {
    return deterministic_form() ? static_cast<int>(actions_.size())
                                : static_cast<int>(stochastic_.size());
}

int Policy::action(int state) const {
    if (!deterministic_form())
        throw std::logic_error("Policy::action called on a stochastic policy");
    return actions_[state];
}

Real Policy::prob(int state, int action) const {
    if (deterministic_form()) return actions_[state] == action ? 1.0 : 0.0;
    const auto& row = stochastic_[state];
    return row.empty() ? 0.0 : row[action];
}

bool Policy::defined(int state) const {
    if (deterministic_form()) return actions_[state] >= 0;
    return !stochastic_[state].empty();
}

// ---- LayeredMdp ----

LayeredMdp::LayeredMdp(std::vector<std::vector<int>> layers, int num_actions,
                       std::vector<std::vector<Real>> reward, TransitionKernel true_kernel)
    : layers_(std::move(layers)), num_actions_(num_actions), reward_(std::move(reward)),
      true_kernel_(std::move(true_kernel)),
      layer_of_(reward_.size(), -1), index_in_layer_(reward_.size(), -1) {
    for (int l = 0; l < num_layers(); ++l) {
        for (int i = 0; i < layer_size(l); ++i) {
            int s = layers_[l][i];
            if (s >= 0 && s < num_states()) {
                layer_of_[s] = l;
                index_in_layer_[s] = i;
            }
        }
    }
}

Real LayeredMdp::max_reward() const {
    Real r = 0.0;
    for (const auto& row : reward_)
        for (Real v : row) r = std::max(r, v);
    return r;
}

// ---- validation ----

ValidationReport validate_layered_mdp(const LayeredMdp& mdp) {
    ValidationReport rep;
    auto fail = [&rep](std::string msg) { rep.violations.push_back(std::move(msg)); };

    if (mdp.num_layers() < 2) fail("fewer than two layers");
    if (mdp.num_actions() < 1) fail("empty action set");
    if (mdp.num_layers() >= 1 && mdp.layer_size(0) != 1)
        fail("first layer has " + std::to_string(mdp.layer_size(0)) +
             " states, expected singleton");
    if (mdp.num_layers() >= 2 && mdp.layer_size(mdp.num_layers() - 1) != 1)
        fail("last layer has " + std::to_string(mdp.layer_size(mdp.num_layers() - 1)) +
             " states, expected singleton");

    // layers must partition the global state table
    std::vector<int> seen(mdp.num_states(), 0);
    for (int l = 0; l < mdp.num_layers(); ++l) {
        for (int s : mdp.layer_states(l)) {
            if (s < 0 || s >= mdp.num_states()) {
                fail("layer " + std::to_string(l) + " names state " + std::to_string(s) +
                     " outside the state table");
                continue;
            }
            if (++seen[s] > 1)
                fail("state " + std::to_string(s) + " appears in more than one layer");
        }
    }
    for (int s = 0; s < mdp.num_states(); ++s)
        if (seen[s] == 0) fail("state " + std::to_string(s) + " belongs to no layer");

    for (int s = 0; s < mdp.num_states(); ++s)
        for (int a = 0; a < mdp.num_actions(); ++a)
            if (mdp.reward(s, a) < 0.0)
                fail("negative reward at " + pair_name(s, a));
    if (!rep.ok()) return rep; // kernel checks need a coherent layer map

    const auto& kernel = mdp.true_kernel();
    if (kernel.num_states() != mdp.num_states() || kernel.num_actions() != mdp.num_actions()) {
        fail("kernel shape does not match the MDP");
        return rep;
    }
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        for (int s : mdp.layer_states(l)) {
            for (int a = 0; a < mdp.num_actions(); ++a) {
                const TransitionRow& row = kernel.row(s, a);
                if (!row.defined()) {
                    fail("missing transition row at " + pair_name(s, a));
                    continue;
                }
                if (row.states.size() != row.probs.size()) {
                    fail("ragged transition row at " + pair_name(s, a));
                    continue;
                }
                Real sum = 0.0;
                for (std::size_t i = 0; i < row.states.size(); ++i) {
                    int sp = row.states[i];
                    Real p = row.probs[i];
                    if (sp < 0 || sp >= mdp.num_states()) {
                        fail("row " + pair_name(s, a) + " names state " + std::to_string(sp) +
                             " outside the table");
                        continue;
                    }
                    if (mdp.layer_of(sp) != l + 1)
                        fail("row " + pair_name(s, a) + " leaks to state " + std::to_string(sp) +
                             " in layer " + std::to_string(mdp.layer_of(sp)) + " (expected layer " +
                             std::to_string(l + 1) + ")");
                    if (p < 0.0)
                        fail("row " + pair_name(s, a) + " has negative probability " +
                             real_str(p));
                    sum += p;
                }
                if (std::abs(sum - 1.0) > kRowTol)
                    fail("row " + pair_name(s, a) + " sums to " + real_str(sum) +
                         " (expected 1)");
            }
        }
    }
    // terminal states must not carry rows
    for (int s : mdp.layer_states(mdp.num_layers() - 1))
        for (int a = 0; a < mdp.num_actions(); ++a)
            if (kernel.has_row(s, a))
                fail("terminal state " + std::to_string(s) + " carries a transition row");
    return rep;
}

// ---- DenseKernel ----

DenseKernel DenseKernel::compile(const TransitionKernel& kernel, const LayeredMdp& mdp) {
    if (kernel.num_states() != mdp.num_states() || kernel.num_actions() != mdp.num_actions())
        throw std::invalid_argument("kernel shape does not match the MDP");
    std::vector<LayerKernel> layers;
    layers.reserve(mdp.num_layers() - 1);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        LayerKernel lk(mdp.layer_size(l), mdp.num_actions(), mdp.layer_size(l + 1));
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            int s = mdp.state_id(l, i);
            for (int a = 0; a < mdp.num_actions(); ++a) {
                const TransitionRow& row = kernel.row(s, a);
                if (!row.defined())
                    throw std::invalid_argument("undefined transition row at " + pair_name(s, a));
                auto dense = lk.row(i, a);
                for (std::size_t e = 0; e < row.states.size(); ++e) {
                    int sp = row.states[e];
                    if (sp < 0 || sp >= mdp.num_states() || mdp.layer_of(sp) != l + 1)
                        throw std::invalid_argument("row " + pair_name(s, a) +
                                                    " is not supported on layer " +
                                                    std::to_string(l + 1));
                    dense[mdp.index_in_layer(sp)] += row.probs[e];
                }
            }
        }
        layers.push_back(std::move(lk));
    }
    return DenseKernel(std::move(layers));
}

// ---- OccupancyMeasure ----

OccupancyMeasure::OccupancyMeasure(const LayeredMdp& mdp) : num_actions_(mdp.num_actions()) {
    layer_sizes_.resize(mdp.num_layers());
    for (int l = 0; l < mdp.num_layers(); ++l) layer_sizes_[l] = mdp.layer_size(l);
    q_.resize(mdp.num_layers() - 1);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l)
        q_[l].assign(static_cast<std::size_t>(layer_sizes_[l]) * num_actions_ * layer_sizes_[l + 1],
                     0.0);
}

Real OccupancyMeasure::pair_mass(int layer, int index, int action) const {
    Real sum = 0.0;
    for (int j = 0; j < layer_sizes_[layer + 1]; ++j) sum += at(layer, index, action, j);
    return sum;
}

Real OccupancyMeasure::state_mass(int layer, int index) const {
    Real sum = 0.0;
    for (int a = 0; a < num_actions_; ++a) sum += pair_mass(layer, index, a);
    return sum;
}

Real OccupancyMeasure::action_mass(int layer, int index) const { return state_mass(layer, index); }

ValidationReport validate_occupancy(const OccupancyMeasure& q, const LayeredMdp& mdp) {
    ValidationReport rep;
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        Real mass = 0.0;
        for (int i = 0; i < mdp.layer_size(l); ++i) mass += q.state_mass(l, i);
        if (std::abs(mass - 1.0) > kDerivedTol)
            rep.violations.push_back("layer " + std::to_string(l) + " mass " + real_str(mass) +
                                     " differs from 1");
    }
    // inflow into every interior state equals outflow
    for (int l = 1; l + 1 < mdp.num_layers(); ++l) {
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            Real inflow = 0.0;
            for (int ip = 0; ip < mdp.layer_size(l - 1); ++ip)
                for (int a = 0; a < mdp.num_actions(); ++a) inflow += q.at(l - 1, ip, a, i);
            Real outflow = q.state_mass(l, i);
            if (std::abs(inflow - outflow) > kDerivedTol)
                rep.violations.push_back("state (" + std::to_string(l) + "," + std::to_string(i) +
                                         ") inflow " + real_str(inflow) + " differs from outflow " +
                                         real_str(outflow));
        }
    }
    return rep;
}

// ---- occupancy_from ----

OccupancyMeasure occupancy_from(const DenseKernel& kernel, const Policy& policy,
                                const LayeredMdp& mdp) {
    if (policy.num_states() != mdp.num_states())
        throw std::invalid_argument("policy shape does not match the MDP");
    OccupancyMeasure q(mdp);
    std::vector<Real> reach(1, 1.0); // distribution over the current layer
    std::vector<Real> next;
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        next.assign(mdp.layer_size(l + 1), 0.0);
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            if (reach[i] == 0.0) continue;
            int s = mdp.state_id(l, i);
            for (int a = 0; a < mdp.num_actions(); ++a) {
                Real pa = policy.prob(s, a);
                if (pa == 0.0) continue;
                auto row = kernel.row(l, i, a);
                for (int j = 0; j < mdp.layer_size(l + 1); ++j) {
                    Real mass = reach[i] * pa * row[j];
                    q.at(l, i, a, j) += mass;
                    next[j] += mass;
                }
            }
        }
        reach = next;
    }
    return q;
}

OccupancyMeasure occupancy_from(const TransitionKernel& kernel, const Policy& policy,
                                const LayeredMdp& mdp) {
    return occupancy_from(DenseKernel::compile(kernel, mdp), policy, mdp);
}

// ---- induced kernel / policy ----

TransitionKernel induce_kernel(const OccupancyMeasure& q, const LayeredMdp& mdp) {
    TransitionKernel kernel(mdp.num_states(), mdp.num_actions());
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            int s = mdp.state_id(l, i);
            for (int a = 0; a < mdp.num_actions(); ++a) {
                Real denom = q.pair_mass(l, i, a);
                if (denom <= 0.0) continue; // undefined row
                TransitionRow row;
                for (int j = 0; j < mdp.layer_size(l + 1); ++j) {
                    row.states.push_back(mdp.state_id(l + 1, j));
                    row.probs.push_back(q.at(l, i, a, j) / denom);
                }
                kernel.set_row(s, a, std::move(row));
            }
        }
    }
    return kernel;
}

Policy induce_policy(const OccupancyMeasure& q, const LayeredMdp& mdp) {
    std::vector<std::vector<Real>> probs(mdp.num_states());
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            Real denom = q.state_mass(l, i);
            if (denom <= 0.0) continue; // undefined state
            auto& row = probs[mdp.state_id(l, i)];
            row.resize(mdp.num_actions());
            for (int a = 0; a < mdp.num_actions(); ++a) row[a] = q.pair_mass(l, i, a) / denom;
        }
    }
    return Policy::stochastic(std::move(probs));
}

// ---- reward / values ----

Real expected_reward(const OccupancyMeasure& q, const LayeredMdp& mdp) {
    Real total = 0.0;
    for (int l = 0; l + 1 < mdp.num_layers(); ++l)
        for (int i = 0; i < mdp.layer_size(l); ++i)
            for (int a = 0; a < mdp.num_actions(); ++a)
                total += q.pair_mass(l, i, a) * mdp.reward(mdp.state_id(l, i), a);
    return total;
}

std::vector<Real> value_function(const Policy& policy, const DenseKernel& kernel,
                                 const LayeredMdp& mdp) {
    std::vector<Real> values(mdp.num_states(), 0.0);
    for (int l = mdp.num_layers() - 2; l >= 0; --l) {
        for (int i = 0; i < mdp.layer_size(l); ++i) {
            int s = mdp.state_id(l, i);
            Real v = 0.0;
            for (int a = 0; a < mdp.num_actions(); ++a) {
                Real pa = policy.prob(s, a);
                if (pa == 0.0) continue;
                Real qsa = mdp.reward(s, a);
                auto row = kernel.row(l, i, a);
                for (int j = 0; j < mdp.layer_size(l + 1); ++j)
                    qsa += row[j] * values[mdp.state_id(l + 1, j)];
                v += pa * qsa;
            }
            values[s] = v;
        }
    }
    return values;
}

std::vector<Real> value_function(const Policy& policy, const TransitionKernel& kernel,
                                 const LayeredMdp& mdp) {
    return value_function(policy, DenseKernel::compile(kernel, mdp), mdp);
}

// ---- trajectory sampling ----

std::vector<TrajectoryStep> sample_trajectory(const DenseKernel& kernel, const Policy& policy,
                                              const LayeredMdp& mdp, Rng& rng) {
    std::vector<TrajectoryStep> steps;
    steps.reserve(mdp.horizon());
    int index = 0;
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        int s = mdp.state_id(l, index);
        int a;
        if (policy.deterministic_form()) {
            a = policy.action(s);
        } else {
            std::vector<Real> probs(mdp.num_actions());
            for (int b = 0; b < mdp.num_actions(); ++b) probs[b] = policy.prob(s, b);
            a = rng.categorical(probs);
        }
        int j = rng.categorical(kernel.row(l, index, a));
        steps.push_back({s, a, mdp.state_id(l + 1, j)});
        index = j;
    }
    return steps;
}

std::vector<TrajectoryStep> sample_trajectory(const TransitionKernel& kernel, const Policy& policy,
                                              const LayeredMdp& mdp, Rng& rng) {
    DenseKernel dense = DenseKernel::compile(kernel, mdp);
    return sample_trajectory(dense, policy, mdp, rng);
}

// ---- l1 ----

Real l1_distance(std::span<const Real> p, std::span<const Real> q) {
    if (p.size() != q.size()) throw std::invalid_argument("l1_distance: length mismatch");
    Real sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
    return sum;
}

} // namespace proto_rmdp
