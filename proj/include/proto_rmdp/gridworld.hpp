#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "proto_rmdp/mdp.hpp"
#include "proto_rmdp/planning.hpp"

namespace proto_rmdp {

// 5x4 grid, start (0,0), goal (4,3).  A cell (x1, x2) lives in layer
// x1 + x2; within a layer cells are ordered by ascending x1.  Action 0 moves
// up, action 1 moves right; a move succeeds with the prototype's z(a) and
// goes the other way otherwise.  On the right edge both actions move up, on
// the top edge both move right ("only inward" at a boundary).
struct GridWorldSpec {
    int width = 5;
    int height = 4;
    struct RewardCell {
        int x1, x2;
        Real value;
    };
    std::vector<RewardCell> reward_cells{{2, 2, 3.0}, {1, 1, 5.0}, {1, 2, 1.0}};

    int num_layers() const { return width + height - 1; }
};

// Per-layer candidate transition kernels with known ground truth.  When
// `shared` is set the same K success-probability pairs (and the same true
// index) back every layer, and learners may treat the per-layer candidate
// sets as one set.
struct PrototypeFamily {
    std::shared_ptr<const std::vector<std::vector<LayerKernel>>> fragments; // [layer][k]
    std::vector<int> true_index; // per layer
    bool shared = true;

    // generator provenance (gridworld families), used for serialization:
    // z[layer][k] = {z(a=0), z(a=1)}; in shared mode every layer holds the
    // same values
    std::vector<std::vector<std::array<Real, 2>>> z;

    int prototypes_per_layer(int layer) const {
        return static_cast<int>((*fragments)[layer].size());
    }
};

// layer index of a cell
inline int gridworld_layer(int x1, int x2) { return x1 + x2; }

// cell coordinates of (layer, index) under the ascending-x1 ordering
std::pair<int, int> gridworld_cell(const GridWorldSpec& spec, int layer, int index);
int gridworld_index(const GridWorldSpec& spec, int x1, int x2);

// The layered MDP whose true kernel is assembled from the family's true
// prototypes.  Throws std::invalid_argument if a reward cell lies outside
// the grid.
LayeredMdp build_gridworld(const GridWorldSpec& spec, const PrototypeFamily& family);

// z_k(a) = offset_a + k * gap, offset_a drawn uniformly from
// [0, 1 - (K-1) gap]; requires (K-1) gap <= 1.  Adjacent prototypes differ
// by exactly `gap` in every success probability.
PrototypeFamily generate_fixed_gap_prototypes(const GridWorldSpec& spec, int K, Real gap,
                                              Rng& rng, bool per_layer = false);

// z_k(a) drawn independently uniform on [0, 1]
PrototypeFamily generate_random_prototypes(const GridWorldSpec& spec, int K, Rng& rng,
                                           bool per_layer = false);

// family from explicit success probabilities, one z pair per prototype,
// shared by every layer
PrototypeFamily make_family_from_z(const GridWorldSpec& spec,
                                   const std::vector<std::array<Real, 2>>& z, int true_index,
                                   bool shared = true);

// Largest ratio, over layers and wrong prototypes, between the biggest and
// smallest prototype-vs-truth l1 gap across the layer's informative pairs
// (pairs where at least two prototypes disagree; boundary-cell rows are the
// same under every prototype and carry no information).  Returns infinity
// when some prototype coincides with the truth at one informative pair but
// not at another, and 1 when there is nothing to compare.
Real compute_gamma(const PrototypeFamily& family, const LayeredMdp& mdp);

// Smallest l1 gap between the truth and any wrong prototype over informative
// pairs; 0 flags a duplicate of the truth, infinity a family with no
// competitor (K = 1).
Real compute_h(const PrototypeFamily& family, const LayeredMdp& mdp);

// line-oriented description (grid size, reward cells, per-prototype z
// values, true index) from which a run can be reconstructed
std::string describe_family(const GridWorldSpec& spec, const PrototypeFamily& family);

} // namespace proto_rmdp
