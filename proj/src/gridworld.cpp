#include "proto_rmdp/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace proto_rmdp {

namespace {

int layer_lo_x1(const GridWorldSpec& spec, int layer) {
    return std::max(0, layer - (spec.height - 1));
}

int layer_size_of(const GridWorldSpec& spec, int layer) {
    int lo = layer_lo_x1(spec, layer);
    int hi = std::min(spec.width - 1, layer);
    return hi - lo + 1;
}

// successors of a cell under the move-inward rule; fills a dense row over
// the next layer given the success probabilities z = {z(up), z(right)}
void fill_row(const GridWorldSpec& spec, int x1, int x2, int action,
              const std::array<Real, 2>& z, std::span<Real> row) {
    std::fill(row.begin(), row.end(), 0.0);
    auto succ = [&](int nx1, int nx2) { return gridworld_index(spec, nx1, nx2); };
    bool right_edge = x1 == spec.width - 1;
    bool top_edge = x2 == spec.height - 1;
    if (right_edge && top_edge) throw std::logic_error("goal cell has no transition row");
    if (right_edge) {
        row[succ(x1, x2 + 1)] = 1.0;
    } else if (top_edge) {
        row[succ(x1 + 1, x2)] = 1.0;
    } else {
        int up = succ(x1, x2 + 1);
        int right = succ(x1 + 1, x2);
        Real p = z[action];
        if (action == 0) {
            row[up] = p;
            row[right] = 1.0 - p;
        } else {
            row[right] = p;
            row[up] = 1.0 - p;
        }
    }
}

std::vector<std::vector<LayerKernel>> build_fragments(
    const GridWorldSpec& spec, const std::vector<std::vector<std::array<Real, 2>>>& z) {
    int L = spec.num_layers();
    std::vector<std::vector<LayerKernel>> fragments(L - 1);
    for (int l = 0; l + 1 < L; ++l) {
        int K = static_cast<int>(z[l].size());
        fragments[l].reserve(K);
        for (int k = 0; k < K; ++k) {
            LayerKernel lk(layer_size_of(spec, l), 2, layer_size_of(spec, l + 1));
            for (int i = 0; i < lk.num_states(); ++i) {
                auto [x1, x2] = gridworld_cell(spec, l, i);
                for (int a = 0; a < 2; ++a) fill_row(spec, x1, x2, a, z[l][k], lk.row(i, a));
            }
            fragments[l].push_back(std::move(lk));
        }
    }
    return fragments;
}

PrototypeFamily make_family(const GridWorldSpec& spec,
                            std::vector<std::vector<std::array<Real, 2>>> z,
                            std::vector<int> true_index, bool shared) {
    PrototypeFamily family;
    family.fragments = std::make_shared<const std::vector<std::vector<LayerKernel>>>(
        build_fragments(spec, z));
    family.z = std::move(z);
    family.true_index = std::move(true_index);
    family.shared = shared;
    return family;
}

} // namespace

std::pair<int, int> gridworld_cell(const GridWorldSpec& spec, int layer, int index) {
    int x1 = layer_lo_x1(spec, layer) + index;
    return {x1, layer - x1};
}

int gridworld_index(const GridWorldSpec& spec, int x1, int x2) {
    return x1 - layer_lo_x1(spec, gridworld_layer(x1, x2));
}

LayeredMdp build_gridworld(const GridWorldSpec& spec, const PrototypeFamily& family) {
    int L = spec.num_layers();
    std::vector<std::vector<int>> layers(L);
    int next_id = 0;
    for (int l = 0; l < L; ++l) {
        layers[l].resize(layer_size_of(spec, l));
        for (int& s : layers[l]) s = next_id++;
    }
    int num_states = next_id;

    std::vector<std::vector<Real>> reward(num_states, std::vector<Real>(2, 0.0));
    for (const auto& cell : spec.reward_cells) {
        if (cell.x1 < 0 || cell.x1 >= spec.width || cell.x2 < 0 || cell.x2 >= spec.height)
            throw std::invalid_argument("reward cell (" + std::to_string(cell.x1) + "," +
                                        std::to_string(cell.x2) + ") lies outside the grid");
        int l = gridworld_layer(cell.x1, cell.x2);
        int s = layers[l][gridworld_index(spec, cell.x1, cell.x2)];
        reward[s][0] = reward[s][1] = cell.value;
    }

    TransitionKernel kernel(num_states, 2);
    std::vector<Real> dense;
    for (int l = 0; l + 1 < L; ++l) {
        dense.assign(layer_size_of(spec, l + 1), 0.0);
        for (int i = 0; i < layer_size_of(spec, l); ++i) {
            auto [x1, x2] = gridworld_cell(spec, l, i);
            for (int a = 0; a < 2; ++a) {
                fill_row(spec, x1, x2, a, family.z[l][family.true_index[l]], dense);
                TransitionRow row;
                for (int j = 0; j < layer_size_of(spec, l + 1); ++j) {
                    if (dense[j] == 0.0) continue;
                    row.states.push_back(layers[l + 1][j]);
                    row.probs.push_back(dense[j]);
                }
                kernel.set_row(layers[l][i], a, std::move(row));
            }
        }
    }
    return LayeredMdp(std::move(layers), 2, std::move(reward), std::move(kernel));
}

PrototypeFamily generate_fixed_gap_prototypes(const GridWorldSpec& spec, int K, Real gap,
                                              Rng& rng, bool per_layer) {
    if (K < 1) throw std::invalid_argument("need at least one prototype");
    if ((K - 1) * gap > 1.0)
        throw std::invalid_argument("(K-1) * gap exceeds 1; prototypes cannot fit in [0,1]");
    int L = spec.num_layers();
    std::vector<std::vector<std::array<Real, 2>>> z(L - 1);
    std::vector<int> true_index(L - 1, 0);
    int blocks = per_layer ? L - 1 : 1;
    for (int b = 0; b < blocks; ++b) {
        std::array<Real, 2> offset;
        for (int a = 0; a < 2; ++a) offset[a] = rng.uniform(0.0, 1.0 - (K - 1) * gap);
        std::vector<std::array<Real, 2>> zs(K);
        for (int k = 0; k < K; ++k)
            for (int a = 0; a < 2; ++a) zs[k][a] = offset[a] + k * gap;
        int truth = rng.uniform_int(K);
        if (per_layer) {
            z[b] = zs;
            true_index[b] = truth;
        } else {
            for (int l = 0; l + 1 < L; ++l) {
                z[l] = zs;
                true_index[l] = truth;
            }
        }
    }
    return make_family(spec, std::move(z), std::move(true_index), !per_layer);
}

PrototypeFamily generate_random_prototypes(const GridWorldSpec& spec, int K, Rng& rng,
                                           bool per_layer) {
    if (K < 1) throw std::invalid_argument("need at least one prototype");
    int L = spec.num_layers();
    std::vector<std::vector<std::array<Real, 2>>> z(L - 1);
    std::vector<int> true_index(L - 1, 0);
    int blocks = per_layer ? L - 1 : 1;
    for (int b = 0; b < blocks; ++b) {
        std::vector<std::array<Real, 2>> zs(K);
        for (int k = 0; k < K; ++k)
            for (int a = 0; a < 2; ++a) zs[k][a] = rng.uniform();
        int truth = rng.uniform_int(K);
        if (per_layer) {
            z[b] = zs;
            true_index[b] = truth;
        } else {
            for (int l = 0; l + 1 < L; ++l) {
                z[l] = zs;
                true_index[l] = truth;
            }
        }
    }
    return make_family(spec, std::move(z), std::move(true_index), !per_layer);
}

PrototypeFamily make_family_from_z(const GridWorldSpec& spec,
                                   const std::vector<std::array<Real, 2>>& z, int true_index,
                                   bool shared) {
    if (z.empty()) throw std::invalid_argument("need at least one prototype");
    if (true_index < 0 || true_index >= static_cast<int>(z.size()))
        throw std::invalid_argument("true index outside the family");
    for (const auto& pair : z)
        for (Real v : pair)
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("success probabilities must lie in [0, 1]");
    int L = spec.num_layers();
    std::vector<std::vector<std::array<Real, 2>>> zs(L - 1, z);
    std::vector<int> true_indices(L - 1, true_index);
    return make_family(spec, std::move(zs), std::move(true_indices), shared);
}

namespace {

constexpr Real kZeroGap = 1e-12;

// a pair is informative when at least two prototypes disagree on its row
bool informative_pair(const std::vector<LayerKernel>& protos, int i, int a) {
    for (std::size_t k = 1; k < protos.size(); ++k)
        if (l1_distance(protos[k].row(i, a), protos[0].row(i, a)) > kZeroGap) return true;
    return false;
}

} // namespace

Real compute_gamma(const PrototypeFamily& family, const LayeredMdp& mdp) {
    Real gamma = 1.0;
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        const auto& protos = (*family.fragments)[l];
        int truth = family.true_index[l];
        for (int k = 0; k < static_cast<int>(protos.size()); ++k) {
            if (k == truth) continue;
            Real dmax = 0.0;
            Real dmin = std::numeric_limits<Real>::infinity();
            bool zero_gap = false;
            bool any = false;
            for (int i = 0; i < protos[k].num_states(); ++i) {
                for (int a = 0; a < mdp.num_actions(); ++a) {
                    if (!informative_pair(protos, i, a)) continue;
                    any = true;
                    Real d = l1_distance(protos[k].row(i, a), protos[truth].row(i, a));
                    if (d <= kZeroGap) {
                        zero_gap = true;
                    } else {
                        dmax = std::max(dmax, d);
                        dmin = std::min(dmin, d);
                    }
                }
            }
            if (!any || dmax == 0.0) continue; // duplicate of the truth, nothing to bound
            if (zero_gap) return std::numeric_limits<Real>::infinity();
            gamma = std::max(gamma, dmax / dmin);
        }
    }
    return gamma;
}

Real compute_h(const PrototypeFamily& family, const LayeredMdp& mdp) {
    Real h = std::numeric_limits<Real>::infinity();
    // max gap to the truth per (layer, wrong prototype); a prototype that
    // matches the truth across every layer it serves is a duplicate and can
    // never be told apart, which degenerates h to 0
    std::vector<std::vector<Real>> dmax(mdp.num_layers() - 1);
    for (int l = 0; l + 1 < mdp.num_layers(); ++l) {
        const auto& protos = (*family.fragments)[l];
        int truth = family.true_index[l];
        dmax[l].assign(protos.size(), 0.0);
        for (int k = 0; k < static_cast<int>(protos.size()); ++k) {
            if (k == truth) continue;
            for (int i = 0; i < protos[k].num_states(); ++i)
                for (int a = 0; a < mdp.num_actions(); ++a) {
                    Real d = l1_distance(protos[k].row(i, a), protos[truth].row(i, a));
                    dmax[l][k] = std::max(dmax[l][k], d);
                    if (informative_pair(protos, i, a)) h = std::min(h, d);
                }
        }
    }
    if (family.shared) {
        int K = family.prototypes_per_layer(0);
        for (int k = 0; k < K; ++k) {
            if (k == family.true_index[0]) continue;
            Real overall = 0.0;
            for (const auto& per_layer : dmax) overall = std::max(overall, per_layer[k]);
            if (overall <= kZeroGap) h = 0.0;
        }
    } else {
        for (int l = 0; l + 1 < mdp.num_layers(); ++l)
            for (int k = 0; k < static_cast<int>(dmax[l].size()); ++k)
                if (k != family.true_index[l] && dmax[l][k] <= kZeroGap) h = 0.0;
    }
    return h; // infinity: no competitor; 0: duplicate of the truth
}

std::string describe_family(const GridWorldSpec& spec, const PrototypeFamily& family) {
    std::ostringstream os;
    os.precision(17);
    os << "grid " << spec.width << "x" << spec.height << "\n";
    for (const auto& cell : spec.reward_cells)
        os << "reward (" << cell.x1 << "," << cell.x2 << ") " << cell.value << "\n";
    os << "shared " << (family.shared ? "true" : "false") << "\n";
    int blocks = family.shared ? 1 : static_cast<int>(family.z.size());
    for (int l = 0; l < blocks; ++l) {
        if (family.shared)
            os << "layer * true_index " << family.true_index[0] << "\n";
        else
            os << "layer " << l << " true_index " << family.true_index[l] << "\n";
        for (std::size_t k = 0; k < family.z[l].size(); ++k)
            os << "z " << k << " " << family.z[l][k][0] << " " << family.z[l][k][1] << "\n";
    }
    return os.str();
}

} // namespace proto_rmdp
