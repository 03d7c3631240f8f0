#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "proto_rmdp/experiment.hpp"

namespace py = pybind11;
using namespace proto_rmdp;

namespace {

ExperimentConfig make_config(const std::string& algorithm, int episodes, std::uint64_t seed,
                             double delta, bool early_stop, double ucbvi_bonus_scale) {
    auto parsed = parse_algorithm(algorithm);
    if (!parsed)
        throw std::invalid_argument("unknown algorithm tag '" + algorithm +
                                    "' (known: rpo-aas, nrpo-npc, nrpo-npc2, ucbvi, oracle)");
    ExperimentConfig config;
    config.algorithm = *parsed;
    config.episodes = episodes;
    config.seed = seed;
    config.delta = delta;
    config.early_stop = early_stop;
    config.ucbvi_bonus_scale = ucbvi_bonus_scale;
    return config;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Online robust MDP learning with transition-kernel prototypes";

    py::register_exception<ConfigError>(m, "ConfigError");

    py::class_<GridWorldSpec>(m, "GridWorldSpec")
        .def(py::init<>())
        .def_readwrite("width", &GridWorldSpec::width)
        .def_readwrite("height", &GridWorldSpec::height)
        .def_property_readonly("num_layers", &GridWorldSpec::num_layers);

    py::class_<PrototypeFamily>(m, "PrototypeFamily")
        .def_readonly("shared", &PrototypeFamily::shared)
        .def_readonly("true_index", &PrototypeFamily::true_index)
        .def("prototypes_per_layer", &PrototypeFamily::prototypes_per_layer, py::arg("layer"))
        .def("z_values", [](const PrototypeFamily& family, int layer) {
            return family.z.at(layer);
        }, py::arg("layer") = 0, "per-prototype (z_up, z_right) pairs for the layer");

    py::class_<LayeredMdp>(m, "LayeredMdp")
        .def_property_readonly("num_layers", &LayeredMdp::num_layers)
        .def_property_readonly("num_states", &LayeredMdp::num_states)
        .def_property_readonly("num_actions", &LayeredMdp::num_actions)
        .def_property_readonly("horizon", &LayeredMdp::horizon)
        .def_property_readonly("start_state", &LayeredMdp::start_state)
        .def_property_readonly("terminal_state", &LayeredMdp::terminal_state)
        .def_property_readonly("max_reward", &LayeredMdp::max_reward)
        .def("layer_sizes", [](const LayeredMdp& mdp) {
            std::vector<int> sizes(mdp.num_layers());
            for (int l = 0; l < mdp.num_layers(); ++l) sizes[l] = mdp.layer_size(l);
            return sizes;
        })
        .def("reward", &LayeredMdp::reward, py::arg("state"), py::arg("action"));

    m.def("generate_fixed_gap_prototypes",
          [](const GridWorldSpec& spec, int prototypes, Real gap, std::uint64_t seed,
             bool per_layer) {
              Rng rng(seed);
              return generate_fixed_gap_prototypes(spec, prototypes, gap, rng, per_layer);
          },
          py::arg("spec"), py::arg("prototypes"), py::arg("gap"), py::arg("seed"),
          py::arg("per_layer") = false);
    m.def("generate_random_prototypes",
          [](const GridWorldSpec& spec, int prototypes, std::uint64_t seed, bool per_layer) {
              Rng rng(seed);
              return generate_random_prototypes(spec, prototypes, rng, per_layer);
          },
          py::arg("spec"), py::arg("prototypes"), py::arg("seed"), py::arg("per_layer") = false);
    m.def("make_family_from_z", &make_family_from_z, py::arg("spec"), py::arg("z"),
          py::arg("true_index"), py::arg("shared") = true);
    m.def("build_gridworld", &build_gridworld, py::arg("spec"), py::arg("family"));
    m.def("describe_family", &describe_family, py::arg("spec"), py::arg("family"));

    m.def("validate", [](const LayeredMdp& mdp) { return validate_layered_mdp(mdp).violations; },
          py::arg("mdp"), "structural violations; empty when the instance is well-formed");

    m.def("optimal_policy",
          [](const LayeredMdp& mdp) {
              auto [policy, values] = optimal_policy_dp(mdp.true_kernel(), mdp);
              return py::make_tuple(policy.actions(), values);
          },
          py::arg("mdp"), "(actions, values) of exact backward induction on the true kernel");

    m.def("expected_episode_reward",
          [](const LayeredMdp& mdp, const std::vector<int>& actions) {
              Policy policy = Policy::deterministic(actions);
              return expected_reward(occupancy_from(mdp.true_kernel(), policy, mdp), mdp);
          },
          py::arg("mdp"), py::arg("actions"),
          "exact expected episode reward of a deterministic policy under the true kernel");

    m.def("sample_trajectory",
          [](const LayeredMdp& mdp, const std::vector<int>& actions, std::uint64_t seed) {
              Rng rng(seed);
              Policy policy = Policy::deterministic(actions);
              auto steps = sample_trajectory(mdp.true_kernel(), policy, mdp, rng);
              std::vector<std::tuple<int, int, int>> out;
              out.reserve(steps.size());
              for (const auto& step : steps) out.emplace_back(step.state, step.action, step.next);
              return out;
          },
          py::arg("mdp"), py::arg("actions"), py::arg("seed"));

    m.def("hoeffding_radius", &hoeffding_radius, py::arg("succ_layer_size"),
          py::arg("num_layers"), py::arg("episodes"), py::arg("delta"), py::arg("n"));
    m.def("compute_gamma", &compute_gamma, py::arg("family"), py::arg("mdp"));
    m.def("compute_h", &compute_h, py::arg("family"), py::arg("mdp"));
    m.def("theoretical_regret_bound", &theoretical_regret_bound, py::arg("num_layers"),
          py::arg("gamma"), py::arg("S_size"), py::arg("A_size"), py::arg("T"), py::arg("delta"),
          py::arg("r_max"));
    m.def("finite_sample_threshold", &finite_sample_threshold, py::arg("num_layers"),
          py::arg("gamma"), py::arg("S_size"), py::arg("A_size"), py::arg("T"), py::arg("delta"),
          py::arg("epsilon"), py::arg("r_max"));
    m.def("convergence_threshold", &convergence_threshold, py::arg("S_size"), py::arg("A_size"),
          py::arg("num_layers"), py::arg("T"), py::arg("delta"), py::arg("h"));

    m.def("run_learner",
          [](const std::string& algorithm, const LayeredMdp& mdp, const PrototypeFamily& family,
             int episodes, std::uint64_t seed, double delta, bool early_stop,
             double ucbvi_bonus_scale) {
              ExperimentConfig config = make_config(algorithm, episodes, seed, delta, early_stop,
                                                    ucbvi_bonus_scale);
              auto records = run_learner(config, mdp, family);
              std::vector<Real> rewards, regret, lower_bound;
              std::vector<bool> coverage, frozen;
              std::vector<std::vector<int>> candidate_sizes, policies;
              for (const auto& rec : records) {
                  rewards.push_back(rec.expected_reward);
                  regret.push_back(rec.regret);
                  lower_bound.push_back(rec.has_lower_bound
                                            ? rec.robust_lower_bound
                                            : std::numeric_limits<Real>::quiet_NaN());
                  coverage.push_back(rec.coverage);
                  frozen.push_back(rec.frozen);
                  candidate_sizes.push_back(rec.candidate_sizes);
                  policies.push_back(rec.policy_actions);
              }
              py::dict out;
              out["expected_reward"] = std::move(rewards);
              out["regret"] = std::move(regret);
              out["robust_lower_bound"] = std::move(lower_bound);
              out["coverage"] = std::move(coverage);
              out["frozen"] = std::move(frozen);
              out["candidate_sizes"] = std::move(candidate_sizes);
              out["policy_actions"] = std::move(policies);
              return out;
          },
          py::arg("algorithm"), py::arg("mdp"), py::arg("family"), py::arg("episodes"),
          py::arg("seed") = 0, py::arg("delta") = 0.05, py::arg("early_stop") = false,
          py::arg("ucbvi_bonus_scale") = 1.0,
          "run one seeded simulation; per-episode series keyed by name");
    // the sweep never touches python objects, so let other threads run


    m.def("run_sweep",
          [](const std::map<std::string, std::string>& options) {
              SweepConfig config;
              for (const auto& [key, value] : options) apply_override(config, key, value);
              validate_config(config);
              SweepResult result = run_sweep(config);
              write_csv(result, config.out_dir);
              return summarize(result);
          },
          py::arg("options"), py::call_guard<py::gil_scoped_release>(),
          "seeded multi-simulation sweep from config-file keys; writes CSV output and returns "
          "the text summary");

    m.def("summarize_dir", &summarize_dir, py::arg("dir"));
}
