#pragma once

#include <cmath>
#include <string>

#include "prdc/mlp.hpp"

namespace prdc {

/// Adam state wrapping one Mlp. Moment tensors mirror the parameter shapes.
struct AdamState {
    std::vector<MatrixXd> m_weights, v_weights;
    std::vector<VectorXd> m_biases, v_biases;
    long step_count = 0;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

inline AdamState make_adam(const Mlp& net, double learning_rate) {
    if (learning_rate <= 0.0) throw ConfigError("adam: learning rate must be positive");
    AdamState st;
    st.learning_rate = learning_rate;
    for (size_t l = 0; l < net.num_layers(); ++l) {
        st.m_weights.push_back(MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        st.v_weights.push_back(MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        st.m_biases.push_back(VectorXd::Zero(net.biases[l].size()));
        st.v_biases.push_back(VectorXd::Zero(net.biases[l].size()));
    }
    return st;
}

namespace detail {

template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, const AdamState& st, double corr1,
                 double corr2) {
    m = st.beta1 * m + (1.0 - st.beta1) * grad;
    v = st.beta2 * v + (1.0 - st.beta2) * grad.cwiseProduct(grad);
    param.array() -=
        st.learning_rate * (m.array() / corr1) / ((v.array() / corr2).sqrt() + st.epsilon);
}

}  // namespace detail

/// One Adam step with bias correction, in place. Rejects non-finite
/// gradients before touching the parameters.
inline void adam_step(Mlp& net, const MlpGrad& grad, AdamState& st) {
    if (grad.d_weights.size() != net.num_layers() || grad.d_biases.size() != net.num_layers()) {
        throw ConfigError("adam_step: gradient layer count mismatch");
    }
    for (size_t l = 0; l < net.num_layers(); ++l) {
        if (grad.d_weights[l].rows() != net.weights[l].rows() ||
            grad.d_weights[l].cols() != net.weights[l].cols() ||
            grad.d_biases[l].size() != net.biases[l].size()) {
            throw ConfigError("adam_step: gradient shape mismatch at layer " + std::to_string(l));
        }
    }
    if (!all_finite(grad)) {
        throw NumericError("adam_step: non-finite gradient");
    }
    st.step_count += 1;
    const double corr1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
    const double corr2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
    for (size_t l = 0; l < net.num_layers(); ++l) {
        detail::adam_update(net.weights[l], grad.d_weights[l], st.m_weights[l], st.v_weights[l],
                            st, corr1, corr2);
        detail::adam_update(net.biases[l], grad.d_biases[l], st.m_biases[l], st.v_biases[l], st,
                            corr1, corr2);
    }
    if (!all_finite(net)) {
        throw NumericError("adam_step: parameters non-finite after update");
    }
}

/// target <- tau*online + (1-tau)*target, elementwise. tau=1 copies online.
inline void polyak_blend_into(Mlp& target, const Mlp& online, double tau) {
    if (tau <= 0.0 || tau > 1.0) {
        throw ConfigError("polyak_blend: tau must be in (0, 1], got " + format_double(tau));
    }
    if (target.layer_sizes != online.layer_sizes) {
        throw ConfigError("polyak_blend: incongruent networks");
    }
    for (size_t l = 0; l < target.num_layers(); ++l) {
        target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
        target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
    }
}

inline Mlp polyak_blend(const Mlp& target, const Mlp& online, double tau) {
    Mlp out = target;
    polyak_blend_into(out, online, tau);
    return out;
}

}  // namespace prdc
