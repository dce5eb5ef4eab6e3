#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "prdc/binio.hpp"
#include "prdc/common.hpp"

namespace prdc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Output head of a dense network. Hidden layers are always ReLU.
enum class Head {
    Linear,       // critic: raw affine output
    TanhBounded,  // policy: bound * tanh(z), keeps actions in [-bound, bound]
};

/// Fully-connected network parameters. weights[l] is (layer_sizes[l+1] x
/// layer_sizes[l]); samples are matrix columns throughout.
struct Mlp {
    std::vector<int> layer_sizes;
    std::vector<MatrixXd> weights;
    std::vector<VectorXd> biases;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    size_t num_layers() const { return weights.size(); }
};

/// Forward-pass cache: inputs to every layer plus pre-activations, needed by
/// the backward pass.
struct MlpTrace {
    std::vector<MatrixXd> inputs;  // inputs[l] = activation entering layer l
    std::vector<MatrixXd> pre;     // pre[l] = W_l * inputs[l] + b_l
    MatrixXd output;
};

/// Gradients with the same shapes as the parameters they refer to.
struct MlpGrad {
    std::vector<MatrixXd> d_weights;
    std::vector<VectorXd> d_biases;
};

namespace detail {

inline void check_shapes(const Mlp& net) {
    if (net.layer_sizes.size() < 2 || net.weights.size() != net.layer_sizes.size() - 1 ||
        net.biases.size() != net.weights.size()) {
        throw ConfigError("mlp: layer bookkeeping inconsistent");
    }
    for (size_t l = 0; l < net.weights.size(); ++l) {
        if (net.weights[l].rows() != net.layer_sizes[l + 1] ||
            net.weights[l].cols() != net.layer_sizes[l] ||
            net.biases[l].size() != net.layer_sizes[l + 1]) {
            throw ConfigError("mlp: weight shape mismatch at layer " + std::to_string(l));
        }
    }
}

}  // namespace detail

inline Mlp make_mlp(std::vector<int> layer_sizes) {
    Mlp net;
    net.layer_sizes = std::move(layer_sizes);
    for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        if (net.layer_sizes[l] <= 0 || net.layer_sizes[l + 1] <= 0) {
            throw ConfigError("mlp: layer sizes must be positive");
        }
        net.weights.emplace_back(MatrixXd::Zero(net.layer_sizes[l + 1], net.layer_sizes[l]));
        net.biases.emplace_back(VectorXd::Zero(net.layer_sizes[l + 1]));
    }
    detail::check_shapes(net);
    return net;
}

/// Uniform fan-in init, bound 1/sqrt(fan_in) per layer. The final layer may
/// use a tighter bound (policies start near zero with final_layer_bound=3e-3).
/// Draw order is row-major then bias, so seeded inits are reproducible.
inline Mlp init_mlp(std::vector<int> layer_sizes, Rng& rng,
                    std::optional<double> final_layer_bound = std::nullopt) {
    Mlp net = make_mlp(std::move(layer_sizes));
    for (size_t l = 0; l < net.num_layers(); ++l) {
        double bound = 1.0 / std::sqrt(static_cast<double>(net.layer_sizes[l]));
        if (final_layer_bound && l + 1 == net.num_layers()) bound = *final_layer_bound;
        for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
                net.weights[l](r, c) = rng.uniform(-bound, bound);
            }
        }
        for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
            net.biases[l](r) = rng.uniform(-bound, bound);
        }
    }
    return net;
}

/// Batched forward pass. X is (input_dim x N); returns (output_dim x N).
/// Hidden layers apply ReLU; the head applies nothing (Linear) or
/// bound*tanh (TanhBounded). Pass a trace to enable a later backward pass.
inline MatrixXd mlp_forward(const Mlp& net, const MatrixXd& X, Head head, double bound = 1.0,
                            MlpTrace* trace = nullptr) {
    detail::check_shapes(net);
    if (X.rows() != net.input_dim()) {
        throw ConfigError("mlp_forward: input dim " + std::to_string(X.rows()) +
                          " != " + std::to_string(net.input_dim()));
    }
    if (trace) {
        trace->inputs.clear();
        trace->pre.clear();
    }
    MatrixXd a = X;
    for (size_t l = 0; l < net.num_layers(); ++l) {
        if (trace) trace->inputs.push_back(a);
        MatrixXd z = (net.weights[l] * a).colwise() + net.biases[l];
        if (trace) trace->pre.push_back(z);
        if (l + 1 < net.num_layers()) {
            a = z.cwiseMax(0.0);
        } else if (head == Head::TanhBounded) {
            a = bound * z.array().tanh();
        } else {
            a = std::move(z);
        }
    }
    if (trace) trace->output = a;
    return a;
}

inline VectorXd mlp_forward_one(const Mlp& net, const VectorXd& x, Head head, double bound = 1.0) {
    return mlp_forward(net, MatrixXd(x), head, bound).col(0);
}

/// Reverse-mode pass for the trace produced by mlp_forward. `upstream` is
/// dL/d(output) per sample, (output_dim x N); any 1/N batch scaling belongs in
/// it. Parameter gradients sum over the batch columns; d_input, when
/// requested, holds each sample's own dL/d(input) column.
inline MlpGrad mlp_backward(const Mlp& net, const MlpTrace& trace, const MatrixXd& upstream,
                            Head head, double bound = 1.0, MatrixXd* d_input = nullptr) {
    if (trace.inputs.size() != net.num_layers()) {
        throw ConfigError("mlp_backward: trace does not match network");
    }
    if (upstream.rows() != net.output_dim() || upstream.cols() != trace.output.cols()) {
        throw ConfigError("mlp_backward: upstream shape mismatch");
    }
    MlpGrad grad;
    grad.d_weights.resize(net.num_layers());
    grad.d_biases.resize(net.num_layers());

    MatrixXd dz;
    if (head == Head::TanhBounded) {
        // y = bound*tanh(z); dy/dz = bound - y^2/bound
        dz = upstream.array() * (bound - trace.output.array().square() / bound);
    } else {
        dz = upstream;
    }
    for (size_t li = net.num_layers(); li-- > 0;) {
        grad.d_weights[li] = dz * trace.inputs[li].transpose();
        grad.d_biases[li] = dz.rowwise().sum();
        if (li > 0) {
            MatrixXd da = net.weights[li].transpose() * dz;
            dz = da.array() * (trace.pre[li - 1].array() > 0.0).cast<double>();
        } else if (d_input) {
            *d_input = net.weights[0].transpose() * dz;
        }
    }
    return grad;
}

/// True when every parameter is finite. A finite sum cannot hide NaN/Inf
/// entries, so one reduction per tensor suffices.
inline bool all_finite(const Mlp& net) {
    for (size_t l = 0; l < net.num_layers(); ++l) {
        if (!std::isfinite(net.weights[l].sum()) || !std::isfinite(net.biases[l].sum())) {
            return false;
        }
    }
    return true;
}

inline bool all_finite(const MlpGrad& g) {
    for (const auto& w : g.d_weights) {
        if (!std::isfinite(w.sum())) return false;
    }
    for (const auto& b : g.d_biases) {
        if (!std::isfinite(b.sum())) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Checkpoint format PRDCNN01: magic, layer count, layer sizes, then per layer
// row-major 64-bit weights followed by biases.
// ---------------------------------------------------------------------------

inline constexpr char kMlpMagic[9] = "PRDCNN01";

inline void save_mlp(const Mlp& net, const std::string& path) {
    detail::check_shapes(net);
    BinaryWriter w(path);
    w.magic(kMlpMagic);
    w.u32(static_cast<uint32_t>(net.layer_sizes.size()));
    for (int s : net.layer_sizes) w.u32(static_cast<uint32_t>(s));
    for (size_t l = 0; l < net.num_layers(); ++l) {
        for (Eigen::Index r = 0; r < net.weights[l].rows(); ++r) {
            for (Eigen::Index c = 0; c < net.weights[l].cols(); ++c) {
                w.f64(net.weights[l](r, c));
            }
        }
        w.f64_array(net.biases[l].data(), static_cast<size_t>(net.biases[l].size()));
    }
    w.close();
}

inline Mlp load_mlp(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kMlpMagic);
    const uint32_t n_layers = r.u32();
    if (n_layers < 2 || n_layers > 64) {
        throw ParseError(path + ": implausible layer count " + std::to_string(n_layers) +
                         " at byte " + std::to_string(r.offset() - 4));
    }
    std::vector<int> sizes(n_layers);
    for (auto& s : sizes) {
        const uint32_t v = r.u32();
        if (v == 0 || v > (1u << 20)) {
            throw ParseError(path + ": implausible layer size at byte " +
                             std::to_string(r.offset() - 4));
        }
        s = static_cast<int>(v);
    }
    Mlp net = make_mlp(sizes);
    for (size_t l = 0; l < net.num_layers(); ++l) {
        for (Eigen::Index row = 0; row < net.weights[l].rows(); ++row) {
            for (Eigen::Index col = 0; col < net.weights[l].cols(); ++col) {
                net.weights[l](row, col) = r.f64();
            }
        }
        r.f64_array(net.biases[l].data(), static_cast<size_t>(net.biases[l].size()));
    }
    r.expect_eof();
    return net;
}

}  // namespace prdc
