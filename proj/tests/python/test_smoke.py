import math

import pytest

import proto_rmdp as pr


@pytest.fixture
def gridworld():
    spec = pr.GridWorldSpec()
    family = pr.generate_fixed_gap_prototypes(spec, prototypes=4, gap=0.2, seed=1)
    return spec, family, pr.build_gridworld(spec, family)


def test_gridworld_shape(gridworld):
    _, _, mdp = gridworld
    assert mdp.num_states == 20
    assert mdp.num_layers == 8
    assert mdp.num_actions == 2
    assert mdp.horizon == 7
    assert mdp.layer_sizes() == [1, 2, 3, 4, 4, 3, 2, 1]
    assert pr.validate(mdp) == []
    assert mdp.max_reward == 5.0


def test_hoeffding_radius_values():
    assert math.isclose(
        pr.hoeffding_radius(2, 8, 1000, 0.05, 100), 1.0229972192683252, rel_tol=1e-12
    )
    assert math.isinf(pr.hoeffding_radius(2, 8, 1000, 0.05, 0))


def test_family_statistics(gridworld):
    _, family, mdp = gridworld
    assert pr.compute_gamma(family, mdp) == pytest.approx(1.0)
    assert pr.compute_h(family, mdp) == pytest.approx(0.4, rel=1e-9)
    assert family.shared
    assert len(family.z_values(0)) == 4


def test_bound_calculators():
    assert pr.finite_sample_threshold(8, 1.0, 20, 2, 5000, 0.05, 1.0, 5.0) == 240697005
    assert pr.convergence_threshold(20, 2, 8, 5000, 0.05, 0.4) == 235056
    bound = pr.theoretical_regret_bound(8, 1.0, 20, 2, 5000, 0.05, 5.0)
    assert len(bound) == 5000
    assert bound[4999] == pytest.approx(1097034.6502606309, rel=1e-12)
    assert pr.theoretical_regret_bound(8, math.inf, 20, 2, 100, 0.05, 5.0) is None


def test_optimal_policy_consistency(gridworld):
    _, _, mdp = gridworld
    actions, values = pr.optimal_policy(mdp)
    assert len(actions) == mdp.num_states
    assert values[mdp.terminal_state] == 0.0
    reward = pr.expected_episode_reward(mdp, actions)
    assert reward == pytest.approx(values[mdp.start_state], abs=1e-9)


def test_trajectories_are_seed_deterministic(gridworld):
    _, _, mdp = gridworld
    actions, _ = pr.optimal_policy(mdp)
    t1 = pr.sample_trajectory(mdp, actions, seed=42)
    t2 = pr.sample_trajectory(mdp, actions, seed=42)
    assert t1 == t2
    assert len(t1) == 7
    assert t1[0][0] == mdp.start_state
    assert t1[-1][2] == mdp.terminal_state


def test_learner_runs_deterministically(gridworld):
    _, family, mdp = gridworld
    a = pr.run_learner("rpo-aas", mdp, family, episodes=60, seed=9)
    b = pr.run_learner("rpo-aas", mdp, family, episodes=60, seed=9)
    assert a["expected_reward"] == b["expected_reward"]
    assert len(a["expected_reward"]) == 60
    assert all(all(size >= 1 for size in sizes) for sizes in a["candidate_sizes"])
    assert all(a["coverage"])


def test_oracle_has_zero_regret(gridworld):
    _, family, mdp = gridworld
    records = pr.run_learner("oracle", mdp, family, episodes=20, seed=3)
    assert all(abs(r) < 1e-12 for r in records["regret"])


def test_unknown_algorithm_rejected(gridworld):
    _, family, mdp = gridworld
    with pytest.raises(ValueError):
        pr.run_learner("frobnicate", mdp, family, episodes=5)


def test_sweep_writes_csv(tmp_path):
    out = tmp_path / "sweep"
    text = pr.run_sweep(
        {
            "algorithms": "oracle,rpo-aas",
            "episodes": "10",
            "sims": "2",
            "seed": "5",
            "prototypes": "2",
            "gap": "0.3",
            "out": str(out),
        }
    )
    for name in ["curves.csv", "runs.csv", "analysis.csv", "config.echo", "families.txt"]:
        assert (out / name).exists()
    assert "rpo-aas:" in text
    assert "oracle:" in pr.summarize_dir(str(out))
    with pytest.raises(pr.ConfigError):
        pr.run_sweep({"episodes": "0", "out": str(out)})
