#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "prdc/lineworld.hpp"

using namespace prdc;
namespace fs = std::filesystem;

TEST_CASE("reset is seeded and lands in the initial cell", "[lineworld]") {
    LineworldEnv a(42), b(42);
    REQUIRE(a.reset() == b.reset());

    LineworldEnv env(7);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double s = env.reset();
        REQUIRE(s >= 0.0);
        REQUIRE(s < 1.0);
        sum += s;
    }
    // Uniform[0,1): sigma of the mean = 1/sqrt(12 n).
    const double sigma = 1.0 / std::sqrt(12.0 * n);
    REQUIRE(std::abs(sum / n - 0.5) < 4.0 * sigma);
}

TEST_CASE("a step into the goal region pays and terminates", "[lineworld]") {
    LineworldEnv env(1);
    env.reset_to(99.8);
    const auto r = env.step(1.0);
    REQUIRE(r.next_state == Catch::Approx(100.8));
    REQUIRE(r.reward == 100.0);
    REQUIRE(r.done);
    REQUIRE_THROWS_AS(env.step(1.0), ConfigError);
}

TEST_CASE("left boundary clips without reward or termination", "[lineworld]") {
    LineworldEnv env(1);
    env.reset_to(0.0);
    const auto r = env.step(-1.0);
    REQUIRE(r.next_state == 0.0);
    REQUIRE(r.reward == 0.0);
    REQUIRE_FALSE(r.done);
}

TEST_CASE("always-right policy reaches the goal within the horizon", "[lineworld]") {
    // Closed form: from s0 the first state at or past the goal edge comes
    // after ceil(100 - s0) unit steps.
    LineworldEnv env(3);
    for (int e = 0; e < 20; ++e) {
        const double s0 = env.reset();
        const int expect_steps = static_cast<int>(std::ceil(100.0 - s0));
        double total = 0.0;
        int steps = 0;
        while (true) {
            const auto r = env.step(1.0);
            total += r.reward;
            ++steps;
            if (r.done) break;
        }
        REQUIRE(steps == expect_steps);
        REQUIRE(steps <= 101);
        REQUIRE(total == 100.0);
    }
}

TEST_CASE("out-of-range actions are clipped and counted", "[lineworld]") {
    LineworldEnv env(5);
    env.reset_to(50.0);
    const auto r = env.step(3.0);
    REQUIRE(r.next_state == Catch::Approx(51.0));
    REQUIRE(env.clip_warnings() == 1);
}

TEST_CASE("episode times out when the length cap is exceeded", "[lineworld]") {
    LineworldEnv env(9);
    env.reset_to(50.0);
    int steps = 0;
    while (true) {
        const auto r = env.step(0.0);
        ++steps;
        if (r.done) {
            REQUIRE(r.reward == 0.0);
            break;
        }
        REQUIRE(steps < 200);
    }
    REQUIRE(steps == env.step_count());
    REQUIRE(steps > LineworldEnv::kMaxEpisodeSteps - 1);
}

TEST_CASE("dataset compositions match the published ratios exactly", "[lineworld]") {
    auto counts = [](const OfflineDataset& ds) {
        std::map<double, std::pair<int, int>> per_state;  // state -> (minus, plus)
        for (size_t i = 0; i < ds.size(); ++i) {
            auto& c = per_state[ds.states(0, i)];
            (ds.actions(0, i) < 0 ? c.first : c.second) += 1;
        }
        return per_state;
    };

    DatasetSpec spec;
    spec.variant = LineworldVariant::easy;
    const OfflineDataset easy = generate_dataset(spec);
    REQUIRE(easy.size() == 10100);
    REQUIRE(easy.env_id == "lineworld-easy");
    int minus_total = 0;
    for (size_t i = 0; i < easy.size(); ++i) minus_total += easy.actions(0, i) < 0 ? 1 : 0;
    REQUIRE(minus_total == 101);
    for (const auto& [s, c] : counts(easy)) {
        REQUIRE(c.first == 1);
        REQUIRE(c.second == 99);
    }

    spec.variant = LineworldVariant::medium;
    const OfflineDataset medium = generate_dataset(spec);
    REQUIRE(medium.size() == 5000);
    for (const auto& [s, c] : counts(medium)) {
        REQUIRE(static_cast<long>(s) % 2 == 1);
        REQUIRE(c.first == 50);
        REQUIRE(c.second == 50);
    }

    spec.variant = LineworldVariant::hard;
    const OfflineDataset hard = generate_dataset(spec);
    REQUIRE(hard.size() == 5000);
    for (const auto& [s, c] : counts(hard)) {
        REQUIRE(c.first == 99);
        REQUIRE(c.second == 1);
    }

    spec.variant = LineworldVariant::superhard;
    const OfflineDataset super = generate_dataset(spec);
    REQUIRE(super.size() == 10100);
    for (const auto& [s, c] : counts(super)) {
        if (static_cast<long>(s) % 2 == 1) {
            REQUIRE(c.first == 99);
            REQUIRE(c.second == 1);
        } else {
            REQUIRE(c.first == 100);
            REQUIRE(c.second == 0);
        }
    }
}

TEST_CASE("dataset transitions obey the step dynamics", "[lineworld]") {
    DatasetSpec spec;
    spec.variant = LineworldVariant::superhard;
    const OfflineDataset ds = generate_dataset(spec);
    for (size_t i = 0; i < ds.size(); ++i) {
        const double s = ds.states(0, i);
        const double a = ds.actions(0, i);
        const double next = clip(s + a, 0.0, 101.0);
        REQUIRE(ds.next_states(0, i) == next);
        const bool goal = LineworldEnv::in_goal(next);
        REQUIRE(ds.rewards(i) == (goal ? 100.0 : 0.0));
        REQUIRE(ds.dones(i) == (goal ? 1.0 : 0.0));
        REQUIRE(ds.rewards(i) * (1.0 - ds.dones(i)) == 0.0);  // reward only on done-by-goal
    }
}

TEST_CASE("generation is byte-identical across repeats", "[lineworld]") {
    DatasetSpec spec;
    spec.variant = LineworldVariant::medium;
    spec.seed = 17;
    const auto p1 = fs::temp_directory_path() / "prdc_lineworld_a.bin";
    const auto p2 = fs::temp_directory_path() / "prdc_lineworld_b.bin";
    save_dataset(generate_dataset(spec), p1.string());
    save_dataset(generate_dataset(spec), p2.string());
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    REQUIRE(b1 == b2);
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("policy evaluation covers the three canonical policies", "[lineworld]") {
    const EvalReport right = evaluate_policy([](double) { return 1.0; }, 10, 11);
    REQUIRE(right.success_count() == 10);
    for (double r : right.returns) REQUIRE(r == 100.0);

    const EvalReport left = evaluate_policy([](double) { return -1.0; }, 10, 11);
    REQUIRE(left.success_count() == 0);
    REQUIRE(left.mean_return() == 0.0);

    const EvalReport still = evaluate_policy([](double) { return 0.0; }, 10, 11);
    REQUIRE(still.success_count() == 0);
    REQUIRE(still.mean_return() == 0.0);
}

TEST_CASE("visited pairs stay in range and rewards are binary", "[lineworld]") {
    const EvalReport rep = evaluate_policy([](double s) { return s < 30 ? 1.0 : -0.5; }, 5, 13);
    for (const auto& [s, a] : rep.visited) {
        REQUIRE(s >= 0.0);
        REQUIRE(s <= 101.0);
        REQUIRE(std::abs(a) <= 1.0);
    }
    for (double r : rep.returns) REQUIRE((r == 0.0 || r == 100.0));
}

TEST_CASE("no policy beats the single-goal return bound", "[lineworld]") {
    // Undiscounted return can only be 0 or 100; discounted return from the
    // initial cell is at most 100 * gamma^99 (at least 99 full steps needed).
    const double gamma = 0.99;
    Rng rng(15);
    for (int trial = 0; trial < 10; ++trial) {
        const double bias = rng.uniform(-1.0, 1.0);
        const auto policy = [bias](double s) {
            return clip(bias + 0.3 * std::sin(s), -1.0, 1.0);
        };
        const double start = rng.uniform();
        const double ret = discounted_return(policy, start, gamma);
        REQUIRE(ret <= 100.0 * std::pow(gamma, 99.0) + 1e-9);
        REQUIRE(ret >= 0.0);
    }
}

TEST_CASE("accomplishment demands exactly 5x10 and full success", "[lineworld]") {
    const auto good = evaluate_policy([](double) { return 1.0; }, 10, 3);
    const auto bad = evaluate_policy([](double) { return -1.0; }, 10, 3);

    REQUIRE(accomplishment({good, good, good, good, good}));
    REQUIRE_FALSE(accomplishment({good, good, good, good, bad}));
    REQUIRE_FALSE(accomplishment({bad, bad, bad, bad, bad}));

    // 49/50: four clean reports and one with a single failure.
    EvalReport almost = good;
    almost.successes[7] = false;
    REQUIRE_FALSE(accomplishment({good, good, good, good, almost}));

    REQUIRE_THROWS_AS(accomplishment({good, good}), ConfigError);
    const auto short_report = evaluate_policy([](double) { return 1.0; }, 9, 3);
    REQUIRE_THROWS_AS(accomplishment({good, good, good, good, short_report}), ConfigError);
}
