#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "prdc/common.hpp"
#include "prdc/dataset.hpp"

namespace prdc {

/// Deterministic 1-D chain of unit cells. States live in [0, 101]; episodes
/// start uniformly in [0, 1]; moving right by the (clipped) action each step.
/// Reaching the goal region at the right end pays 100 and ends the episode;
/// otherwise the episode times out once its length exceeds 105 steps.
///
/// The goal region is closed at its left edge, [100, 101]: grid datasets step
/// from integer states with unit actions, and 99 + 1 must land inside the
/// goal for those datasets to contain any reward signal at all.
class LineworldEnv {
public:
    static constexpr double kStateMin = 0.0;
    static constexpr double kStateMax = 101.0;
    static constexpr double kGoalThreshold = 100.0;
    static constexpr double kGoalReward = 100.0;
    static constexpr double kActionBound = 1.0;
    static constexpr int kMaxEpisodeSteps = 105;

    explicit LineworldEnv(uint64_t seed) : rng_(seed) { reset(); }

    static bool in_goal(double s) { return s >= kGoalThreshold && s <= kStateMax; }

    double reset() {
        state_ = rng_.uniform();  // [0, 1)
        step_count_ = 0;
        done_ = false;
        return state_;
    }

    /// Restart the episode from an arbitrary state (used by value probes).
    double reset_to(double state) {
        if (state < kStateMin || state > kStateMax) {
            throw ConfigError("lineworld: reset_to state out of [0, 101]");
        }
        state_ = state;
        step_count_ = 0;
        done_ = false;
        return state_;
    }

    struct StepResult {
        double next_state;
        double reward;
        bool done;
    };

    StepResult step(double action) {
        if (done_) throw ConfigError("lineworld: step on a finished episode");
        if (action < -kActionBound || action > kActionBound) {
            if (clip_warnings_++ == 0) {
                std::cerr << "lineworld: clipping out-of-range action " << action << "\n";
            }
            action = clip(action, -kActionBound, kActionBound);
        }
        state_ = clip(state_ + action, kStateMin, kStateMax);
        step_count_ += 1;
        const bool goal = in_goal(state_);
        done_ = goal || step_count_ > kMaxEpisodeSteps;
        return {state_, goal ? kGoalReward : 0.0, done_};
    }

    double state() const { return state_; }
    int step_count() const { return step_count_; }
    bool done() const { return done_; }
    long clip_warnings() const { return clip_warnings_; }

private:
    double state_ = 0.0;
    int step_count_ = 0;
    bool done_ = false;
    long clip_warnings_ = 0;
    Rng rng_;
};

// ---------------------------------------------------------------------------
// Dataset generators
// ---------------------------------------------------------------------------

enum class LineworldVariant { easy, medium, hard, superhard };

inline std::string variant_name(LineworldVariant v) {
    switch (v) {
        case LineworldVariant::easy: return "easy";
        case LineworldVariant::medium: return "medium";
        case LineworldVariant::hard: return "hard";
        case LineworldVariant::superhard: return "superhard";
    }
    throw ConfigError("unknown lineworld variant");
}

inline LineworldVariant parse_variant(const std::string& s) {
    if (s == "easy") return LineworldVariant::easy;
    if (s == "medium") return LineworldVariant::medium;
    if (s == "hard") return LineworldVariant::hard;
    if (s == "superhard") return LineworldVariant::superhard;
    throw ConfigError("unknown lineworld variant: " + s);
}

struct DatasetSpec {
    LineworldVariant variant = LineworldVariant::easy;
    int samples_per_state = 100;
    uint64_t seed = 0;  // recorded for provenance; generation is exact-count
};

namespace detail {

struct GridSample {
    double state;
    double action;
};

// Emits `count` copies of (state, action) into the sample list.
inline void emit(std::vector<GridSample>& out, double state, double action, int count) {
    for (int i = 0; i < count; ++i) out.push_back({state, action});
}

}  // namespace detail

/// Builds one of the four grid datasets. Action ratios are realized by exact
/// counts (per state: minus-actions first, then plus-actions), and every
/// transition's next_state/reward/done comes from the true step dynamics
/// applied to the exact grid state. Generation is fully deterministic.
inline OfflineDataset generate_dataset(const DatasetSpec& spec) {
    const int sps = spec.samples_per_state;
    if (sps <= 0 || sps % 100 != 0) {
        throw ConfigError("generate_dataset: samples_per_state must be a positive multiple of 100");
    }
    const int unit = sps / 100;

    std::vector<detail::GridSample> samples;
    switch (spec.variant) {
        case LineworldVariant::easy:
            for (int s = 0; s <= 100; ++s) {
                detail::emit(samples, s, -1.0, 1 * unit);
                detail::emit(samples, s, +1.0, 99 * unit);
            }
            break;
        case LineworldVariant::medium:
            for (int s = 1; s <= 99; s += 2) {
                detail::emit(samples, s, -1.0, 50 * unit);
                detail::emit(samples, s, +1.0, 50 * unit);
            }
            break;
        case LineworldVariant::hard:
            for (int s = 1; s <= 99; s += 2) {
                detail::emit(samples, s, -1.0, 99 * unit);
                detail::emit(samples, s, +1.0, 1 * unit);
            }
            break;
        case LineworldVariant::superhard:
            for (int s = 0; s <= 100; ++s) {
                if (s % 2 == 1) {
                    detail::emit(samples, s, -1.0, 99 * unit);
                    detail::emit(samples, s, +1.0, 1 * unit);
                } else {
                    detail::emit(samples, s, -1.0, 100 * unit);
                }
            }
            break;
    }

    OfflineDataset ds;
    ds.env_id = "lineworld-" + variant_name(spec.variant);
    ds.state_dim = 1;
    ds.action_dim = 1;
    const size_t n = samples.size();
    ds.states.resize(1, n);
    ds.actions.resize(1, n);
    ds.rewards.resize(n);
    ds.next_states.resize(1, n);
    ds.dones.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double s = samples[i].state;
        const double a = samples[i].action;
        const double next = clip(s + a, LineworldEnv::kStateMin, LineworldEnv::kStateMax);
        const bool goal = LineworldEnv::in_goal(next);
        ds.states(0, i) = s;
        ds.actions(0, i) = a;
        ds.next_states(0, i) = next;
        ds.rewards(i) = goal ? LineworldEnv::kGoalReward : 0.0;
        ds.dones(i) = 0.0;  // EXPERIMENT: no terminal cut
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Policy evaluation
// ---------------------------------------------------------------------------

/// Deterministic policy over the raw (unnormalized) lineworld state.
using LineworldPolicy = std::function<double(double)>;

/// Per-evaluation results: one entry per episode plus every (s, a) pair
/// visited, which feeds the point-to-set distance diagnostics.
struct EvalReport {
    std::vector<double> returns;
    std::vector<bool> successes;
    std::vector<std::pair<double, double>> visited;  // raw (state, action)

    int episodes() const { return static_cast<int>(returns.size()); }
    int success_count() const {
        int c = 0;
        for (bool s : successes) c += s ? 1 : 0;
        return c;
    }
    double mean_return() const {
        if (returns.empty()) return 0.0;
        double sum = 0.0;
        for (double r : returns) sum += r;
        return sum / static_cast<double>(returns.size());
    }
};

/// Noise-free rollouts from the initial state distribution.
inline EvalReport evaluate_policy(const LineworldPolicy& policy, int episodes, uint64_t seed) {
    if (episodes < 1) throw ConfigError("evaluate_policy: episodes must be >= 1");
    LineworldEnv env(seed);
    EvalReport report;
    for (int e = 0; e < episodes; ++e) {
        double s = env.reset();
        double total = 0.0;
        bool success = false;
        while (true) {
            const double a = policy(s);
            report.visited.emplace_back(s, a);
            const auto r = env.step(a);
            total += r.reward;
            if (r.done) {
                success = LineworldEnv::in_goal(r.next_state);
                break;
            }
            s = r.next_state;
        }
        report.returns.push_back(total);
        report.successes.push_back(success);
    }
    return report;
}

/// Discounted Monte-Carlo return of a deterministic policy from one start
/// state. The first step's reward is undiscounted.
inline double discounted_return(const LineworldPolicy& policy, double start, double gamma) {
    LineworldEnv env(0);
    env.reset_to(start);
    double ret = 0.0;
    double discount = 1.0;
    double s = start;
    while (true) {
        const auto r = env.step(policy(s));
        ret += discount * r.reward;
        if (r.done) break;
        discount *= gamma;
        s = r.next_state;
    }
    return ret;
}

/// The all-or-nothing criterion: true only if every episode in exactly five
/// 10-episode reports reached the goal.
inline bool accomplishment(const std::vector<EvalReport>& seed_reports) {
    if (seed_reports.size() != 5) {
        throw ConfigError("accomplishment: expected exactly 5 seed reports, got " +
                          std::to_string(seed_reports.size()));
    }
    for (const auto& r : seed_reports) {
        if (r.episodes() != 10) {
            throw ConfigError("accomplishment: each report must hold exactly 10 episodes");
        }
        if (r.success_count() != 10) return false;
    }
    return true;
}

}  // namespace prdc
