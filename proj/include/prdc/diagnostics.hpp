#pragma once

#include <utility>
#include <vector>

#include "prdc/agent.hpp"
#include "prdc/lineworld.hpp"

namespace prdc {

/// Deterministic lineworld policy backed by a trained actor. States are
/// normalized with the dataset statistics before the forward pass. Captures
/// copies, so it outlives the agent it was made from.
inline LineworldPolicy make_actor_policy(const Mlp& actor, const OfflineDataset& ds,
                                         double action_bound) {
    const bool normalized = ds.normalized;
    const VectorXd mean = ds.state_mean;
    const VectorXd std_dev = ds.state_std;
    return [actor, normalized, mean, std_dev, action_bound](double raw_state) {
        VectorXd x(1);
        x(0) = raw_state;
        if (normalized) x = (x - mean).cwiseQuotient(std_dev);
        return mlp_forward_one(actor, x, Head::TanhBounded, action_bound)(0);
    };
}

// ---------------------------------------------------------------------------
// Value estimation probes
// ---------------------------------------------------------------------------

/// One comparison of the critic's opinion against ground truth: mean
/// Q1(s, pi(s)) over probe states drawn from the initial distribution versus
/// the mean Monte-Carlo discounted return of the same policy.
struct ValueProbe {
    long step = 0;
    std::vector<double> probe_states;
    double estimated_q = 0.0;
    double true_q = 0.0;
};

inline ValueProbe value_probe(const AgentState& agent, const OfflineDataset& ds,
                              const Td3Config& cfg, long step, Rng& rng, int num_states = 10,
                              int rollouts_per_state = 1) {
    if (num_states < 1) throw ConfigError("value_probe: need at least one probe state");
    if (rollouts_per_state < 1) throw ConfigError("value_probe: rollouts_per_state must be >= 1");
    ValueProbe probe;
    probe.step = step;
    for (int i = 0; i < num_states; ++i) probe.probe_states.push_back(rng.uniform());

    const LineworldPolicy policy = make_actor_policy(agent.actor, ds, cfg.action_bound);
    double est_sum = 0.0, true_sum = 0.0;
    for (double raw : probe.probe_states) {
        VectorXd s(1);
        s(0) = raw;
        const VectorXd sn = ds.normalize_state(s);
        const VectorXd a = mlp_forward_one(agent.actor, sn, Head::TanhBounded, cfg.action_bound);
        VectorXd x(sn.size() + a.size());
        x << sn, a;
        est_sum += mlp_forward_one(agent.critic1, x, Head::Linear)(0);
        // Environment and policy are deterministic; repeated rollouts from the
        // same start state are identical, so one per state is exact.
        double mc = 0.0;
        for (int r = 0; r < rollouts_per_state; ++r) {
            mc += discounted_return(policy, raw, cfg.gamma);
        }
        true_sum += mc / static_cast<double>(rollouts_per_state);
    }
    probe.estimated_q = est_sum / static_cast<double>(num_states);
    probe.true_q = true_sum / static_cast<double>(num_states);
    return probe;
}

struct OverestimationPoint {
    long step = 0;
    double estimated = 0.0;
    double true_value = 0.0;
    double gap = 0.0;      // estimated - true
    bool flagged = false;  // estimate exceeds the feasibility bound
};

/// Aligns the probe series for plotting and flags every step whose estimate
/// exceeds the feasibility bound (for lineworld: 100, since an episode pays
/// at most one goal reward). Nothing above the bound passes silently.
inline std::vector<OverestimationPoint> overestimation_report(
    const std::vector<ValueProbe>& probes, double feasibility_bound) {
    if (probes.size() < 2) {
        throw ConfigError("overestimation_report: need at least two probes");
    }
    std::vector<OverestimationPoint> out;
    out.reserve(probes.size());
    for (const auto& p : probes) {
        out.push_back({p.step, p.estimated_q, p.true_q, p.estimated_q - p.true_q,
                       p.estimated_q > feasibility_bound});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Point-to-set distance trace
// ---------------------------------------------------------------------------

struct DistancePoint {
    long step = 0;
    double mean_distance = 0.0;
    double beta = 1.0;  // captured from the index so reports can assert beta == 1
};

/// Mean point-to-set distance of one evaluation's visited pairs, measured
/// against the normalized dataset with beta = 1 regardless of the training
/// beta. Visited states are raw env states and get normalized here.
inline DistancePoint distance_point(const NeighborIndex& diag_index, const OfflineDataset& ds,
                                    const EvalReport& eval, long step) {
    if (eval.visited.empty()) throw ConfigError("distance_point: evaluation visited no pairs");
    double sum = 0.0;
    VectorXd s(1), a(1);
    for (const auto& [raw_s, raw_a] : eval.visited) {
        s(0) = raw_s;
        a(0) = raw_a;
        sum += diag_index.nearest(ds.normalize_state(s), a).distance;
    }
    return {step, sum / static_cast<double>(eval.visited.size()), diag_index.beta()};
}

// ---------------------------------------------------------------------------
// Policy shape export
// ---------------------------------------------------------------------------

/// Policy outputs over a uniform state grid, for Fig.-style visualization.
inline std::vector<std::pair<double, double>> policy_profile(const LineworldPolicy& policy,
                                                             double lo, double hi, int points) {
    if (points < 2 || hi <= lo) throw ConfigError("policy_profile: bad grid");
    std::vector<std::pair<double, double>> out;
    out.reserve(points);
    for (int i = 0; i < points; ++i) {
        const double s = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        out.emplace_back(s, policy(s));
    }
    return out;
}

}  // namespace prdc
