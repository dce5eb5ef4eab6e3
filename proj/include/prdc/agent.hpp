#pragma once

#include <optional>
#include <string>

#include "prdc/dataset.hpp"
#include "prdc/mlp.hpp"
#include "prdc/neighbor_index.hpp"
#include "prdc/optim.hpp"

namespace prdc {

struct Td3Config {
    double gamma = 0.99;
    double tau = 0.005;
    double policy_noise = 0.2;  // sigma of the target-policy smoothing noise
    double noise_clip = 0.5;
    int policy_update_frequency = 2;
    int batch_size = 256;
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    double action_bound = 1.0;
    int hidden_width = 256;

    void validate() const {
        if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in [0, 1)");
        if (tau <= 0.0 || tau > 1.0) throw ConfigError("tau must be in (0, 1]");
        if (policy_noise < 0.0) throw ConfigError("policy_noise must be >= 0");
        if (noise_clip < 0.0) throw ConfigError("noise_clip must be >= 0");
        if (policy_update_frequency < 1) throw ConfigError("policy_update_frequency must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (actor_lr <= 0.0 || critic_lr <= 0.0) throw ConfigError("learning rates must be > 0");
        if (action_bound <= 0.0) throw ConfigError("action_bound must be > 0");
        if (hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
    }
};

/// Which penalty augments the TD3 actor loss.
enum class Regularizer {
    prdc_nearest,  // point-to-set distance to the nearest dataset pair
    knn_average,   // distance to the mean action of the k nearest pairs
    bc,            // squared error to the batch action (TD3+BC)
    none,          // plain TD3
};

inline std::string regularizer_name(Regularizer r) {
    switch (r) {
        case Regularizer::prdc_nearest: return "prdc_nearest";
        case Regularizer::knn_average: return "knn_average";
        case Regularizer::bc: return "bc";
        case Regularizer::none: return "none";
    }
    throw ConfigError("unknown regularizer");
}

struct PrdcConfig {
    Td3Config td3;
    double alpha = 2.5;
    double beta = 2.0;
    int k = 1;
    Regularizer regularizer = Regularizer::prdc_nearest;

    bool needs_index() const {
        return regularizer == Regularizer::prdc_nearest || regularizer == Regularizer::knn_average;
    }

    void validate() const {
        td3.validate();
        if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
        if (beta <= 0.0) throw ConfigError("beta must be > 0");
        if (k < 1) throw ConfigError("k must be >= 1");
    }
};

/// Online and target networks plus per-network optimizer state.
struct AgentState {
    Mlp actor, critic1, critic2;
    Mlp actor_target, critic1_target, critic2_target;
    AdamState actor_opt, critic1_opt, critic2_opt;
    long step = 0;
};

inline constexpr double kPolicyFinalInitBound = 3e-3;

/// Networks are width-w two-hidden-layer MLPs. The policy's final layer is
/// initialized near zero; targets start as exact copies of the online nets.
inline AgentState init_agent(int state_dim, int action_dim, const PrdcConfig& cfg, Rng& rng) {
    cfg.validate();
    const int w = cfg.td3.hidden_width;
    AgentState agent;
    agent.actor = init_mlp({state_dim, w, w, action_dim}, rng, kPolicyFinalInitBound);
    agent.critic1 = init_mlp({state_dim + action_dim, w, w, 1}, rng);
    agent.critic2 = init_mlp({state_dim + action_dim, w, w, 1}, rng);
    agent.actor_target = agent.actor;
    agent.critic1_target = agent.critic1;
    agent.critic2_target = agent.critic2;
    agent.actor_opt = make_adam(agent.actor, cfg.td3.actor_lr);
    agent.critic1_opt = make_adam(agent.critic1, cfg.td3.critic_lr);
    agent.critic2_opt = make_adam(agent.critic2, cfg.td3.critic_lr);
    return agent;
}

inline MatrixXd vstack(const MatrixXd& top, const MatrixXd& bottom) {
    MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

// ---------------------------------------------------------------------------
// Critic side
// ---------------------------------------------------------------------------

/// Bootstrap targets y = r + gamma*(1-d)*min_i Q'_i(s', a') with
/// a' = clip(pi'(s') + eps), eps ~ clip(N(0, sigma^2)). No gradient flows
/// through y. Noise is drawn per sample, per action dimension.
inline VectorXd critic_target(const MiniBatch& batch, const AgentState& agent,
                              const Td3Config& cfg, Rng& rng) {
    const double a_bound = cfg.action_bound;
    MatrixXd next_actions =
        mlp_forward(agent.actor_target, batch.next_states, Head::TanhBounded, a_bound);
    for (Eigen::Index i = 0; i < next_actions.cols(); ++i) {
        for (Eigen::Index j = 0; j < next_actions.rows(); ++j) {
            const double eps = clip(rng.normal() * cfg.policy_noise, -cfg.noise_clip,
                                    cfg.noise_clip);
            next_actions(j, i) = clip(next_actions(j, i) + eps, -a_bound, a_bound);
        }
    }
    const MatrixXd x = vstack(batch.next_states, next_actions);
    const MatrixXd q1 = mlp_forward(agent.critic1_target, x, Head::Linear);
    const MatrixXd q2 = mlp_forward(agent.critic2_target, x, Head::Linear);
    VectorXd y(batch.size());
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
        y(i) = batch.rewards(i) +
               cfg.gamma * (1.0 - batch.dones(i)) * std::min(q1(0, i), q2(0, i));
    }
    return y;
}

struct LossGrad {
    double loss = 0.0;
    MlpGrad grad;
};

/// Mean squared TD error of one critic against fixed targets y, plus its
/// parameter gradient.
inline LossGrad critic_loss(const MiniBatch& batch, const Mlp& critic, const VectorXd& y) {
    const auto n = static_cast<double>(batch.size());
    MlpTrace trace;
    const MatrixXd q = mlp_forward(critic, vstack(batch.states, batch.actions), Head::Linear, 1.0,
                                   &trace);
    const MatrixXd err = q.row(0).transpose() - y;
    LossGrad out;
    out.loss = err.squaredNorm() / n;
    if (!std::isfinite(out.loss)) throw NumericError("critic_loss: non-finite TD loss");
    const MatrixXd upstream = (2.0 / n) * err.transpose();
    out.grad = mlp_backward(critic, trace, upstream, Head::Linear);
    return out;
}

// ---------------------------------------------------------------------------
// Dataset-constraint terms
//
// The retrieved neighbor is captured as a constant before any gradient is
// taken: back-propagation reaches only the policy's action block, never the
// stored sample.
// ---------------------------------------------------------------------------

struct DcTerms {
    MatrixXd neighbor_actions;  // (action_dim x N), frozen copies
    VectorXd distances;         // full scaled distances per sample
    double mean_distance = 0.0;
};

inline DcTerms dc_query(const MatrixXd& states, const MatrixXd& actions,
                        const NeighborIndex& idx) {
    if (states.rows() != idx.state_dim() || actions.rows() != idx.action_dim() ||
        states.cols() != actions.cols()) {
        throw ConfigError("dc_query: batch does not match index dimensions");
    }
    const auto n = states.cols();
    DcTerms t;
    t.neighbor_actions.resize(actions.rows(), n);
    t.distances.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const NeighborResult r = idx.nearest(states.col(i), actions.col(i));
        t.neighbor_actions.col(i) = r.neighbor_action;
        t.distances(i) = r.distance;
    }
    t.mean_distance = t.distances.mean();
    return t;
}

/// d/d(actions) of mean_i distances(i), with the neighbor held fixed. The
/// distance includes the (constant) state block, so the derivative is the
/// action residual over the full distance; at distance zero the subgradient
/// is taken as zero.
inline MatrixXd dc_action_gradient(const MatrixXd& actions, const DcTerms& t) {
    const auto n = static_cast<double>(actions.cols());
    MatrixXd g = MatrixXd::Zero(actions.rows(), actions.cols());
    for (Eigen::Index i = 0; i < actions.cols(); ++i) {
        if (t.distances(i) > 0.0) {
            g.col(i) = (actions.col(i) - t.neighbor_actions.col(i)) / (t.distances(i) * n);
        }
    }
    return g;
}

struct KnnTerms {
    MatrixXd mean_actions;  // (action_dim x N), frozen average of k neighbors
    VectorXd residual_norms;
    double mean_norm = 0.0;
};

inline KnnTerms knn_query(const MatrixXd& states, const MatrixXd& actions,
                          const NeighborIndex& idx, int k) {
    if (states.rows() != idx.state_dim() || actions.rows() != idx.action_dim() ||
        states.cols() != actions.cols()) {
        throw ConfigError("knn_query: batch does not match index dimensions");
    }
    const auto n = states.cols();
    KnnTerms t;
    t.mean_actions.resize(actions.rows(), n);
    t.residual_norms.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto hits = idx.k_nearest(states.col(i), actions.col(i), k);
        VectorXd mean = VectorXd::Zero(actions.rows());
        for (const auto& h : hits) mean += h.neighbor_action;
        mean /= static_cast<double>(hits.size());
        t.mean_actions.col(i) = mean;
        t.residual_norms(i) = (actions.col(i) - mean).norm();
    }
    t.mean_norm = t.residual_norms.mean();
    return t;
}

inline MatrixXd knn_action_gradient(const MatrixXd& actions, const KnnTerms& t) {
    const auto n = static_cast<double>(actions.cols());
    MatrixXd g = MatrixXd::Zero(actions.rows(), actions.cols());
    for (Eigen::Index i = 0; i < actions.cols(); ++i) {
        if (t.residual_norms(i) > 0.0) {
            g.col(i) = (actions.col(i) - t.mean_actions.col(i)) / (t.residual_norms(i) * n);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Actor side
// ---------------------------------------------------------------------------

/// lambda = alpha*N / max(sum_i |Q_i|, 1e-8). Treated as a constant in the
/// actor update. The absolute-value sum keeps the normalizer a magnitude
/// scale even when raw Q values are near zero or negative.
inline double lambda_weight(const VectorXd& q_values, double alpha, int n) {
    const double denom = std::max(q_values.cwiseAbs().sum(), 1e-8);
    return alpha * static_cast<double>(n) / denom;
}

struct ActorLoss {
    double loss = 0.0;
    double lambda = 1.0;
    std::optional<double> dc_distance;  // mean constraint value, when one is active
    MlpGrad grad;
};

/// Combined policy loss: lambda * mean(-Q1(s, pi(s))) plus the configured
/// penalty. With Regularizer::none the loss is plain mean(-Q1) and lambda
/// stays 1 (vanilla TD3).
inline ActorLoss actor_loss(const MiniBatch& batch, const AgentState& agent,
                            const PrdcConfig& cfg, const NeighborIndex* idx) {
    if (cfg.needs_index() && idx == nullptr) {
        throw ConfigError("actor_loss: regularizer " + regularizer_name(cfg.regularizer) +
                          " requires a neighbor index");
    }
    const auto n = static_cast<double>(batch.size());
    const double a_bound = cfg.td3.action_bound;

    MlpTrace actor_trace;
    const MatrixXd actions =
        mlp_forward(agent.actor, batch.states, Head::TanhBounded, a_bound, &actor_trace);

    MlpTrace critic_trace;
    const MatrixXd q =
        mlp_forward(agent.critic1, vstack(batch.states, actions), Head::Linear, 1.0,
                    &critic_trace);

    ActorLoss out;
    const double q_mean = q.row(0).mean();
    if (cfg.regularizer == Regularizer::none) {
        out.lambda = 1.0;
        out.loss = -q_mean;
    } else {
        out.lambda = lambda_weight(q.row(0).transpose(), cfg.alpha, batch.size());
        out.loss = out.lambda * (-q_mean);
    }

    // d(lambda * -mean(Q))/d(actions), via the critic's input gradient.
    // Critic parameters receive nothing from the actor update.
    const MatrixXd q_upstream = MatrixXd::Constant(1, batch.size(), -out.lambda / n);
    MatrixXd d_critic_input;
    mlp_backward(agent.critic1, critic_trace, q_upstream, Head::Linear, 1.0, &d_critic_input);
    MatrixXd upstream = d_critic_input.bottomRows(actions.rows());

    switch (cfg.regularizer) {
        case Regularizer::none:
            break;
        case Regularizer::prdc_nearest: {
            const DcTerms t = dc_query(batch.states, actions, *idx);
            out.loss += t.mean_distance;
            out.dc_distance = t.mean_distance;
            upstream += dc_action_gradient(actions, t);
            break;
        }
        case Regularizer::knn_average: {
            const KnnTerms t = knn_query(batch.states, actions, *idx, cfg.k);
            out.loss += t.mean_norm;
            out.dc_distance = t.mean_norm;
            upstream += knn_action_gradient(actions, t);
            break;
        }
        case Regularizer::bc: {
            const MatrixXd resid = actions - batch.actions;
            out.loss += resid.squaredNorm() / n;
            upstream += (2.0 / n) * resid;
            break;
        }
    }
    if (!std::isfinite(out.loss)) throw NumericError("actor_loss: non-finite loss");
    out.grad = mlp_backward(agent.actor, actor_trace, upstream, Head::TanhBounded, a_bound);
    return out;
}

// ---------------------------------------------------------------------------
// Training step
// ---------------------------------------------------------------------------

struct StepMetrics {
    long step = 0;
    double critic_loss = 0.0;  // mean of the two critics' TD losses
    std::optional<double> actor_loss;
    std::optional<double> lambda;
    std::optional<double> dc_distance;
};

/// One iteration: both critics every step; actor and target blends every
/// policy_update_frequency steps (so with frequency 2 the first actor update
/// lands on step 2).
inline StepMetrics train_step(AgentState& agent, const OfflineDataset& ds,
                              const NeighborIndex* idx, const PrdcConfig& cfg, Rng& rng) {
    agent.step += 1;
    StepMetrics m;
    m.step = agent.step;

    const MiniBatch batch = sample_batch(ds, cfg.td3.batch_size, rng);
    const VectorXd y = critic_target(batch, agent, cfg.td3, rng);
    try {
        const LossGrad c1 = critic_loss(batch, agent.critic1, y);
        const LossGrad c2 = critic_loss(batch, agent.critic2, y);
        m.critic_loss = 0.5 * (c1.loss + c2.loss);
        adam_step(agent.critic1, c1.grad, agent.critic1_opt);
        adam_step(agent.critic2, c2.grad, agent.critic2_opt);

        if (agent.step % cfg.td3.policy_update_frequency == 0) {
            const ActorLoss a = actor_loss(batch, agent, cfg, idx);
            adam_step(agent.actor, a.grad, agent.actor_opt);
            polyak_blend_into(agent.actor_target, agent.actor, cfg.td3.tau);
            polyak_blend_into(agent.critic1_target, agent.critic1, cfg.td3.tau);
            polyak_blend_into(agent.critic2_target, agent.critic2, cfg.td3.tau);
            m.actor_loss = a.loss;
            m.lambda = a.lambda;
            m.dc_distance = a.dc_distance;
        }
    } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (training step " +
                           std::to_string(agent.step) + ")");
    }
    return m;
}

}  // namespace prdc
