#include <catch2/catch_amalgamated.hpp>

#include "prdc/diagnostics.hpp"
#include "test_helpers.hpp"

using namespace prdc;

namespace {

PrdcConfig tiny_config() {
    PrdcConfig cfg;
    cfg.td3.hidden_width = 8;
    cfg.td3.batch_size = 8;
    return cfg;
}

/// Agent whose actor outputs a constant (via a saturated final bias) and
/// whose critics output a constant.
AgentState constant_agent(double actor_bias, double critic_value) {
    AgentState agent;
    agent.actor = make_mlp({1, 8, 8, 1});
    agent.actor.biases.back()(0) = actor_bias;
    agent.critic1 = make_mlp({2, 8, 8, 1});
    agent.critic1.biases.back()(0) = critic_value;
    agent.critic2 = agent.critic1;
    agent.actor_target = agent.actor;
    agent.critic1_target = agent.critic1;
    agent.critic2_target = agent.critic2;
    return agent;
}

OfflineDataset easy_normalized() {
    DatasetSpec spec;
    spec.variant = LineworldVariant::easy;
    return normalize_states(generate_dataset(spec));
}

}  // namespace

TEST_CASE("value probe: always-right policy hits the closed-form return", "[diagnostics]") {
    const OfflineDataset ds = easy_normalized();
    const PrdcConfig cfg = tiny_config();
    // tanh(25) is 1 up to ~1e-21, an always-right policy.
    const AgentState agent = constant_agent(25.0, 0.0);
    Rng rng(5);
    const ValueProbe p = value_probe(agent, ds, cfg.td3, 0, rng, 10);

    // Oracle: walk the dynamics by hand from every probe state.
    const double a = std::tanh(25.0);
    double want = 0.0;
    for (double s0 : p.probe_states) {
        double s = s0;
        int steps = 0;
        while (s < 100.0) {
            s += a;
            ++steps;
        }
        want += 100.0 * std::pow(cfg.td3.gamma, steps - 1);
    }
    want /= 10.0;
    REQUIRE(p.true_q == Catch::Approx(want).epsilon(1e-12));
    REQUIRE(p.estimated_q == 0.0);  // zero-weight critic
    REQUIRE(p.probe_states.size() == 10);
    for (double s : p.probe_states) {
        REQUIRE(s >= 0.0);
        REQUIRE(s < 1.0);
    }
}

TEST_CASE("value probe: a frozen policy times out with zero return", "[diagnostics]") {
    const OfflineDataset ds = easy_normalized();
    const AgentState agent = constant_agent(0.0, 3.5);
    Rng rng(7);
    const ValueProbe p = value_probe(agent, ds, tiny_config().td3, 100, rng, 10);
    REQUIRE(p.true_q == 0.0);
    REQUIRE(p.estimated_q == Catch::Approx(3.5));
    REQUIRE(p.step == 100);
}

TEST_CASE("true values never exceed the single-goal bound", "[diagnostics]") {
    const OfflineDataset ds = easy_normalized();
    Rng init_rng(9);
    PrdcConfig cfg = tiny_config();
    const AgentState agent = init_agent(1, 1, cfg, init_rng);
    Rng rng(11);
    const ValueProbe p = value_probe(agent, ds, cfg.td3, 0, rng, 10);
    REQUIRE(p.true_q <= 100.0);
    REQUIRE(p.true_q >= 0.0);
}

TEST_CASE("overestimation report aligns series and raises flags", "[diagnostics]") {
    std::vector<ValueProbe> probes;
    for (int i = 0; i < 5; ++i) {
        ValueProbe p;
        p.step = i * 500;
        p.true_q = 40.0;
        p.estimated_q = i == 3 ? 140.0 : 40.0;  // one overshoot
        probes.push_back(p);
    }
    const auto report = overestimation_report(probes, 100.0);
    REQUIRE(report.size() == 5);
    for (int i = 0; i < 5; ++i) {
        REQUIRE(report[i].flagged == (i == 3));
        REQUIRE(report[i].gap == probes[i].estimated_q - 40.0);
    }

    // A calibrated critic produces an all-zero gap series.
    for (auto& p : probes) p.estimated_q = p.true_q;
    for (const auto& pt : overestimation_report(probes, 100.0)) {
        REQUIRE(pt.gap == 0.0);
        REQUIRE_FALSE(pt.flagged);
    }

    REQUIRE_THROWS_AS(overestimation_report({probes[0]}, 100.0), ConfigError);
}

TEST_CASE("distance trace is zero on dataset pairs and records beta=1", "[diagnostics]") {
    const OfflineDataset ds = easy_normalized();
    const NeighborIndex diag(ds, 1.0);

    EvalReport fake;
    DatasetSpec spec;
    spec.variant = LineworldVariant::easy;
    const OfflineDataset raw = generate_dataset(spec);
    for (size_t i = 0; i < 50; ++i) {
        fake.visited.emplace_back(raw.states(0, i * 7), raw.actions(0, i * 7));
    }
    fake.returns = {0.0};
    fake.successes = {false};
    const DistancePoint pt = distance_point(diag, ds, fake, 1234);
    REQUIRE(pt.mean_distance == 0.0);
    REQUIRE(pt.beta == 1.0);
    REQUIRE(pt.step == 1234);
}

TEST_CASE("random-init policies sit strictly off the dataset", "[diagnostics]") {
    const OfflineDataset ds = easy_normalized();
    const NeighborIndex diag(ds, 1.0);
    Rng rng(13);
    PrdcConfig cfg = tiny_config();
    const AgentState agent = init_agent(1, 1, cfg, rng);
    const auto policy = make_actor_policy(agent.actor, ds, 1.0);
    const EvalReport eval = evaluate_policy(policy, 3, 17);
    const DistancePoint pt = distance_point(diag, ds, eval, 0);
    // Actions near zero are ~1 away from the {-1, +1} action modes.
    REQUIRE(pt.mean_distance > 0.5);
}

TEST_CASE("policy profile spans the grid and respects the bound", "[diagnostics]") {
    const OfflineDataset ds = easy_normalized();
    Rng rng(17);
    PrdcConfig cfg = tiny_config();
    const AgentState agent = init_agent(1, 1, cfg, rng);
    const auto policy = make_actor_policy(agent.actor, ds, 1.0);
    const auto profile = policy_profile(policy, 0.0, 100.0, 201);
    REQUIRE(profile.size() == 201);
    REQUIRE(profile.front().first == 0.0);
    REQUIRE(profile.back().first == 100.0);
    for (const auto& [s, a] : profile) {
        REQUIRE(std::abs(a) <= 1.0);
        REQUIRE(std::abs(a) < 0.1);  // near-zero init
    }
    REQUIRE_THROWS_AS(policy_profile(policy, 0.0, 0.0, 10), ConfigError);
}
