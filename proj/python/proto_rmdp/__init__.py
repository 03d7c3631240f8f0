"""Online robust MDP learning with transition-kernel prototypes."""

from proto_rmdp._core import (
    ConfigError,
    GridWorldSpec,
    LayeredMdp,
    PrototypeFamily,
    build_gridworld,
    compute_gamma,
    compute_h,
    convergence_threshold,
    describe_family,
    expected_episode_reward,
    finite_sample_threshold,
    generate_fixed_gap_prototypes,
    generate_random_prototypes,
    hoeffding_radius,
    make_family_from_z,
    optimal_policy,
    run_learner,
    run_sweep,
    sample_trajectory,
    summarize_dir,
    theoretical_regret_bound,
    validate,
)

__all__ = [
    "ConfigError",
    "GridWorldSpec",
    "LayeredMdp",
    "PrototypeFamily",
    "build_gridworld",
    "compute_gamma",
    "compute_h",
    "convergence_threshold",
    "describe_family",
    "expected_episode_reward",
    "finite_sample_threshold",
    "generate_fixed_gap_prototypes",
    "generate_random_prototypes",
    "hoeffding_radius",
    "make_family_from_z",
    "optimal_policy",
    "run_learner",
    "run_sweep",
    "sample_trajectory",
    "summarize_dir",
    "theoretical_regret_bound",
    "validate",
]
