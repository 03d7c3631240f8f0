#include <doctest.h>

#include <cmath>
#include <map>

#include "proto_rmdp/mdp.hpp"
#include "test_util.hpp"

using namespace proto_rmdp;
using proto_rmdp::testing::random_instance;
using proto_rmdp::testing::random_row;
using proto_rmdp::testing::random_stochastic_policy;

namespace {

// 3-layer chain 0 -> 1 -> 2, one action
LayeredMdp chain_mdp(Real middle_prob = 1.0, int leak_target = -1) {
    TransitionKernel kernel(3, 1);
    kernel.set_row(0, 0, {{1}, {middle_prob}});
    kernel.set_row(1, 0, {{leak_target < 0 ? 2 : leak_target}, {1.0}});
    return LayeredMdp({{0}, {1}, {2}}, 1, {{0.0}, {0.0}, {0.0}}, std::move(kernel));
}

bool mentions(const ValidationReport& rep, const std::string& needle) {
    for (const auto& v : rep.violations)
        if (v.find(needle) != std::string::npos) return true;
    return false;
}

} // namespace

TEST_CASE("validate accepts a well-formed chain") {
    CHECK(validate_layered_mdp(chain_mdp()).ok());
}

TEST_CASE("validate flags a row that does not sum to one") {
    auto rep = validate_layered_mdp(chain_mdp(0.9));
    CHECK_FALSE(rep.ok());
    CHECK(mentions(rep, "(s=0, a=0)"));
    CHECK(mentions(rep, "sums to"));
}

TEST_CASE("validate flags a transition leaking across layers") {
    // four layers; state 1 (layer 1) jumps to state 3 (layer 3)
    TransitionKernel kernel(4, 1);
    kernel.set_row(0, 0, {{1}, {1.0}});
    kernel.set_row(1, 0, {{3}, {1.0}});
    kernel.set_row(2, 0, {{3}, {1.0}});
    LayeredMdp mdp({{0}, {1}, {2}, {3}}, 1, {{0.0}, {0.0}, {0.0}, {0.0}}, std::move(kernel));
    auto rep = validate_layered_mdp(mdp);
    CHECK_FALSE(rep.ok());
    CHECK(mentions(rep, "leaks"));
    CHECK(mentions(rep, "(s=1, a=0)"));
}

TEST_CASE("validate flags structural defects") {
    TransitionKernel kernel(4, 1);
    kernel.set_row(0, 0, {{1}, {1.0}});
    kernel.set_row(1, 0, {{3}, {1.0}});
    kernel.set_row(2, 0, {{3}, {1.0}});

    SUBCASE("non-singleton ends") {
        LayeredMdp mdp({{0}, {1, 2}, {3}}, 1, {{0.0}, {0.0}, {0.0}, {0.0}}, kernel);
        CHECK(validate_layered_mdp(mdp).ok()); // this one is fine
        LayeredMdp bad({{0, 1}, {2}, {3}}, 1, {{0.0}, {0.0}, {0.0}, {0.0}}, kernel);
        CHECK(mentions(validate_layered_mdp(bad), "first layer"));
    }
    SUBCASE("overlapping and missing states") {
        LayeredMdp bad({{0}, {1, 1}, {3}}, 1, {{0.0}, {0.0}, {0.0}, {0.0}}, kernel);
        auto rep = validate_layered_mdp(bad);
        CHECK(mentions(rep, "more than one layer"));
        CHECK(mentions(rep, "belongs to no layer"));
    }
}

TEST_CASE("occupancy of a deterministic path is an indicator") {
    // two actions; action 0 traces the path
    TransitionKernel kernel(4, 2);
    kernel.set_row(0, 0, {{1}, {1.0}});
    kernel.set_row(0, 1, {{2}, {1.0}});
    kernel.set_row(1, 0, {{3}, {1.0}});
    kernel.set_row(1, 1, {{3}, {1.0}});
    kernel.set_row(2, 0, {{3}, {1.0}});
    kernel.set_row(2, 1, {{3}, {1.0}});
    LayeredMdp mdp({{0}, {1, 2}, {3}}, 2,
                   {{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}, std::move(kernel));
    Policy path = Policy::deterministic({0, 0, 0, -1});
    auto q = occupancy_from(mdp.true_kernel(), path, mdp);
    CHECK(q.at(0, 0, 0, 0) == 1.0);
    CHECK(q.at(0, 0, 0, 1) == 0.0);
    CHECK(q.at(0, 0, 1, 0) == 0.0);
    CHECK(q.at(1, 0, 0, 0) == 1.0);
    CHECK(q.at(1, 1, 0, 0) == 0.0);
    CHECK(validate_occupancy(q, mdp).ok());

    SUBCASE("induced kernel is deterministic on the path, undefined off it") {
        auto induced = induce_kernel(q, mdp);
        REQUIRE(induced.has_row(0, 0));
        CHECK(induced.row(0, 0).probs[0] == 1.0);
        CHECK_FALSE(induced.has_row(0, 1)); // never taken
        CHECK_FALSE(induced.has_row(2, 0)); // never reached
        auto pi = induce_policy(q, mdp);
        CHECK(pi.defined(0));
        CHECK_FALSE(pi.defined(2));
    }
    SUBCASE("path rewards 3,5,1 sum to 9") {
        TransitionKernel k2(4, 1);
        k2.set_row(0, 0, {{1}, {1.0}});
        k2.set_row(1, 0, {{2}, {1.0}});
        k2.set_row(2, 0, {{3}, {1.0}});
        LayeredMdp rewarded({{0}, {1}, {2}, {3}}, 1, {{3.0}, {5.0}, {1.0}, {0.0}},
                            std::move(k2));
        Policy chain = Policy::deterministic({0, 0, 0, -1});
        auto qr = occupancy_from(rewarded.true_kernel(), chain, rewarded);
        CHECK(expected_reward(qr, rewarded) == doctest::Approx(9.0).epsilon(1e-12));
    }
}

TEST_CASE("uniform two-state layer splits occupancy evenly") {
    TransitionKernel kernel(4, 1);
    kernel.set_row(0, 0, {{1, 2}, {0.5, 0.5}});
    kernel.set_row(1, 0, {{3}, {1.0}});
    kernel.set_row(2, 0, {{3}, {1.0}});
    LayeredMdp mdp({{0}, {1, 2}, {3}}, 1, {{0.0}, {0.0}, {0.0}, {0.0}}, std::move(kernel));
    auto q = occupancy_from(mdp.true_kernel(), Policy::deterministic({0, 0, 0, -1}), mdp);
    CHECK(q.at(0, 0, 0, 0) == doctest::Approx(0.5));
    CHECK(q.at(0, 0, 0, 1) == doctest::Approx(0.5));
}

TEST_CASE("occupancy matches Monte Carlo trajectory frequencies") {
    Rng rng(2024);
    LayeredMdp mdp = random_instance({1, 3, 2, 1}, 2, rng);
    Policy policy = random_stochastic_policy(mdp, rng);
    auto q = occupancy_from(mdp.true_kernel(), policy, mdp);
    REQUIRE(validate_occupancy(q, mdp).ok());

    const int n = 1'000'000;
    DenseKernel dense = DenseKernel::compile(mdp.true_kernel(), mdp);
    std::map<std::tuple<int, int, int>, long> freq;
    Rng sampler = rng.fork(7);
    for (int i = 0; i < n; ++i)
        for (const auto& step : sample_trajectory(dense, policy, mdp, sampler))
            ++freq[{step.state, step.action, step.next}];

    for (int l = 0; l + 1 < mdp.num_layers(); ++l)
        for (int i = 0; i < mdp.layer_size(l); ++i)
            for (int a = 0; a < mdp.num_actions(); ++a)
                for (int j = 0; j < mdp.layer_size(l + 1); ++j) {
                    Real p = q.at(l, i, a, j);
                    Real observed =
                        static_cast<Real>(freq[{mdp.state_id(l, i), a, mdp.state_id(l + 1, j)}]) /
                        n;
                    Real se = std::sqrt(std::max(p * (1 - p), 1e-12) / n);
                    CHECK(std::abs(observed - p) <= 3 * se + 1e-9);
                }
}

TEST_CASE("induced kernel and policy round-trip under positive visitation") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        LayeredMdp mdp = random_instance({1, 2, 3, 1}, 2, rng);
        Policy policy = random_stochastic_policy(mdp, rng);
        auto q = occupancy_from(mdp.true_kernel(), policy, mdp);
        auto kernel = induce_kernel(q, mdp);
        auto pi = induce_policy(q, mdp);

        DenseKernel original = DenseKernel::compile(mdp.true_kernel(), mdp);
        DenseKernel recovered = DenseKernel::compile(kernel, mdp);
        for (int l = 0; l + 1 < mdp.num_layers(); ++l)
            for (int i = 0; i < mdp.layer_size(l); ++i)
                for (int a = 0; a < mdp.num_actions(); ++a) {
                    CHECK(l1_distance(original.row(l, i, a), recovered.row(l, i, a)) < 1e-12);
                    CHECK(pi.prob(mdp.state_id(l, i), a) ==
                          doctest::Approx(policy.prob(mdp.state_id(l, i), a)).epsilon(1e-12));
                }

        // and the induced pair reproduces q itself
        auto q2 = occupancy_from(kernel, pi, mdp);
        for (int l = 0; l + 1 < mdp.num_layers(); ++l)
            for (int i = 0; i < mdp.layer_size(l); ++i)
                for (int a = 0; a < mdp.num_actions(); ++a)
                    for (int j = 0; j < mdp.layer_size(l + 1); ++j)
                        CHECK(std::abs(q2.at(l, i, a, j) - q.at(l, i, a, j)) < kDerivedTol);
    }
}

TEST_CASE("expected reward equals backward policy evaluation at the start") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        LayeredMdp mdp = random_instance({1, 3, 2, 2, 1}, 2, rng);
        Policy policy = trial % 2 == 0 ? random_stochastic_policy(mdp, rng)
                                       : proto_rmdp::testing::random_deterministic_policy(mdp, rng);
        Real via_occupancy = expected_reward(occupancy_from(mdp.true_kernel(), policy, mdp), mdp);
        Real via_values = value_function(policy, mdp.true_kernel(), mdp)[mdp.start_state()];
        CHECK(std::abs(via_occupancy - via_values) < kDerivedTol);
    }
}

TEST_CASE("value function basics") {
    LayeredMdp mdp = chain_mdp();
    SUBCASE("terminal state has value zero") {
        auto v = value_function(Policy::deterministic({0, 0, -1}), mdp.true_kernel(), mdp);
        CHECK(v[2] == 0.0);
    }
    SUBCASE("single interior state with unit reward") {
        TransitionKernel kernel(3, 1);
        kernel.set_row(0, 0, {{1}, {1.0}});
        kernel.set_row(1, 0, {{2}, {1.0}});
        LayeredMdp m({{0}, {1}, {2}}, 1, {{0.0}, {1.0}, {0.0}}, std::move(kernel));
        auto v = value_function(Policy::deterministic({0, 0, -1}), m.true_kernel(), m);
        CHECK(v[1] == doctest::Approx(1.0));
    }
    SUBCASE("zero rewards give zero expected reward") {
        auto q = occupancy_from(mdp.true_kernel(), Policy::deterministic({0, 0, -1}), mdp);
        CHECK(expected_reward(q, mdp) == 0.0);
    }
}

TEST_CASE("trajectory sampling") {
    SUBCASE("deterministic kernel yields the unique path for any seed") {
        LayeredMdp mdp = chain_mdp();
        Policy policy = Policy::deterministic({0, 0, -1});
        for (std::uint64_t seed : {1ull, 99ull, 12345ull}) {
            Rng rng(seed);
            auto traj = sample_trajectory(mdp.true_kernel(), policy, mdp, rng);
            REQUIRE(traj.size() == 2);
            CHECK(traj[0].state == 0);
            CHECK(traj[0].next == 1);
            CHECK(traj[1].next == 2);
        }
    }
    SUBCASE("same seed, same trajectory") {
        Rng rng(17);
        LayeredMdp mdp = random_instance({1, 3, 3, 1}, 2, rng);
        Policy policy = proto_rmdp::testing::random_deterministic_policy(mdp, rng);
        Rng a(42), b(42);
        auto ta = sample_trajectory(mdp.true_kernel(), policy, mdp, a);
        auto tb = sample_trajectory(mdp.true_kernel(), policy, mdp, b);
        REQUIRE(ta.size() == tb.size());
        for (std::size_t i = 0; i < ta.size(); ++i) {
            CHECK(ta[i].state == tb[i].state);
            CHECK(ta[i].action == tb[i].action);
            CHECK(ta[i].next == tb[i].next);
        }
    }
    SUBCASE("two-branch frequencies stay within three standard errors") {
        TransitionKernel kernel(4, 1);
        kernel.set_row(0, 0, {{1, 2}, {0.7, 0.3}});
        kernel.set_row(1, 0, {{3}, {1.0}});
        kernel.set_row(2, 0, {{3}, {1.0}});
        LayeredMdp mdp({{0}, {1, 2}, {3}}, 1, {{0.0}, {0.0}, {0.0}, {0.0}}, std::move(kernel));
        DenseKernel dense = DenseKernel::compile(mdp.true_kernel(), mdp);
        Policy policy = Policy::deterministic({0, 0, 0, -1});
        Rng rng(31);
        const int n = 1'000'000;
        long hits = 0;
        for (int i = 0; i < n; ++i) {
            auto traj = sample_trajectory(dense, policy, mdp, rng);
            if (traj[0].next == 1) ++hits;
        }
        Real se = std::sqrt(0.7 * 0.3 / n);
        CHECK(std::abs(static_cast<Real>(hits) / n - 0.7) <= 3 * se);
    }
}

TEST_CASE("l1 distance") {
    std::vector<Real> a{1.0, 0.0}, b{0.0, 1.0};
    CHECK(l1_distance(a, a) == 0.0);
    CHECK(l1_distance(a, b) == 2.0);
    std::vector<Real> c{0.9, 0.1}, d{0.2, 0.8};
    CHECK(l1_distance(c, d) == doctest::Approx(1.4).epsilon(1e-14));
    std::vector<Real> short_vec{1.0};
    CHECK_THROWS_AS((void)l1_distance(a, short_vec), std::invalid_argument);

    SUBCASE("symmetry and triangle inequality on random stochastic vectors") {
        Rng rng(3);
        for (int trial = 0; trial < 200; ++trial) {
            auto p = random_row(4, rng, 0.0);
            auto q = random_row(4, rng, 0.0);
            auto r = random_row(4, rng, 0.0);
            CHECK(l1_distance(p, q) == doctest::Approx(l1_distance(q, p)).epsilon(1e-15));
            CHECK(l1_distance(p, r) <= l1_distance(p, q) + l1_distance(q, r) + 1e-12);
            CHECK(l1_distance(p, q) <= 2.0 + 1e-12);
        }
    }
}
