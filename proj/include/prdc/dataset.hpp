#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "prdc/binio.hpp"
#include "prdc/common.hpp"

namespace prdc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One (s, a, r, s', d) sample.
struct Transition {
    VectorXd state;
    VectorXd action;
    double reward = 0.0;
    VectorXd next_state;
    bool done = false;
};

/// Immutable transition store. Columns of the matrices are samples; this
/// favors batched gathers over a literal list of structs, with transition(i)
/// materializing single samples when needed.
struct OfflineDataset {
    std::string env_id;
    int state_dim = 0;
    int action_dim = 0;
    bool normalized = false;
    VectorXd state_mean;  // stats used by the normalizing transform
    VectorXd state_std;   // the actual divisor, i.e. already floored

    MatrixXd states;       // (state_dim x n)
    MatrixXd actions;      // (action_dim x n)
    VectorXd rewards;      // (n)
    MatrixXd next_states;  // (state_dim x n)
    VectorXd dones;        // (n), 0.0 or 1.0

    size_t size() const { return static_cast<size_t>(rewards.size()); }

    Transition transition(size_t i) const {
        return Transition{states.col(i), actions.col(i), rewards(i), next_states.col(i),
                          dones(i) != 0.0};
    }

    VectorXd normalize_state(const VectorXd& raw) const {
        if (!normalized) return raw;
        return (raw - state_mean).cwiseQuotient(state_std);
    }

    VectorXd denormalize_state(const VectorXd& s) const {
        if (!normalized) return s;
        return s.cwiseProduct(state_std) + state_mean;
    }
};

/// Mini-batch of column-aligned transition arrays.
struct MiniBatch {
    MatrixXd states, actions, next_states;
    VectorXd rewards, dones;
    std::vector<size_t> indices;  // which dataset rows were drawn

    Eigen::Index size() const { return rewards.size(); }
};

inline constexpr double kStdFloor = 1e-3;

/// Returns a copy whose s and s' are (x - mean)/max(std, 1e-3). Mean and std
/// are computed per dimension over the union of the s and s' columns
/// (population std), so critic targets see the same statistics. Rewards and
/// actions are untouched. Normalizing twice is an error.
inline OfflineDataset normalize_states(const OfflineDataset& raw) {
    if (raw.size() == 0) throw ConfigError("normalize_states: empty dataset");
    if (raw.normalized) throw ConfigError("normalize_states: dataset already normalized");

    const auto n = static_cast<double>(raw.size());
    VectorXd mean = (raw.states.rowwise().sum() + raw.next_states.rowwise().sum()) / (2.0 * n);
    VectorXd var = VectorXd::Zero(raw.state_dim);
    for (Eigen::Index c = 0; c < raw.states.cols(); ++c) {
        var += (raw.states.col(c) - mean).cwiseAbs2();
        var += (raw.next_states.col(c) - mean).cwiseAbs2();
    }
    VectorXd std_dev = (var / (2.0 * n)).cwiseSqrt().cwiseMax(kStdFloor);

    OfflineDataset out = raw;
    out.normalized = true;
    out.state_mean = mean;
    out.state_std = std_dev;
    out.states = (raw.states.colwise() - mean).array().colwise() / std_dev.array();
    out.next_states = (raw.next_states.colwise() - mean).array().colwise() / std_dev.array();
    return out;
}

/// n transitions sampled uniformly with replacement.
inline MiniBatch sample_batch(const OfflineDataset& ds, int n, Rng& rng) {
    if (ds.size() == 0) throw ConfigError("sample_batch: empty dataset");
    if (n < 1) throw ConfigError("sample_batch: batch size must be >= 1");
    MiniBatch b;
    b.states.resize(ds.state_dim, n);
    b.actions.resize(ds.action_dim, n);
    b.next_states.resize(ds.state_dim, n);
    b.rewards.resize(n);
    b.dones.resize(n);
    b.indices.resize(n);
    for (int i = 0; i < n; ++i) {
        const size_t j = rng.uniform_index(ds.size());
        b.indices[i] = j;
        b.states.col(i) = ds.states.col(j);
        b.actions.col(i) = ds.actions.col(j);
        b.next_states.col(i) = ds.next_states.col(j);
        b.rewards(i) = ds.rewards(j);
        b.dones(i) = ds.dones(j);
    }
    return b;
}

// ---------------------------------------------------------------------------
// Dataset file format PRDCDS01: magic; header (env_id, dims, normalized flag,
// mean/std vectors, count); body of packed 64-bit transitions, done as one
// byte.
// ---------------------------------------------------------------------------

inline constexpr char kDatasetMagic[9] = "PRDCDS01";

inline void save_dataset(const OfflineDataset& ds, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kDatasetMagic);
    w.str(ds.env_id);
    w.u32(static_cast<uint32_t>(ds.state_dim));
    w.u32(static_cast<uint32_t>(ds.action_dim));
    w.u8(ds.normalized ? 1 : 0);
    if (ds.normalized) {
        w.f64_array(ds.state_mean.data(), ds.state_dim);
        w.f64_array(ds.state_std.data(), ds.state_dim);
    }
    w.u64(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        w.f64_array(ds.states.col(i).data(), ds.state_dim);
        w.f64_array(ds.actions.col(i).data(), ds.action_dim);
        w.f64(ds.rewards(i));
        w.f64_array(ds.next_states.col(i).data(), ds.state_dim);
        w.u8(ds.dones(i) != 0.0 ? 1 : 0);
    }
    w.close();
}

inline OfflineDataset load_dataset(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kDatasetMagic);
    OfflineDataset ds;
    ds.env_id = r.str(4096);
    ds.state_dim = static_cast<int>(r.u32());
    ds.action_dim = static_cast<int>(r.u32());
    if (ds.state_dim <= 0 || ds.action_dim <= 0 || ds.state_dim > (1 << 16) ||
        ds.action_dim > (1 << 16)) {
        throw ParseError(path + ": implausible dimensions at byte " +
                         std::to_string(r.offset() - 8));
    }
    ds.normalized = r.u8() != 0;
    if (ds.normalized) {
        ds.state_mean.resize(ds.state_dim);
        ds.state_std.resize(ds.state_dim);
        r.f64_array(ds.state_mean.data(), ds.state_dim);
        r.f64_array(ds.state_std.data(), ds.state_dim);
    }
    const uint64_t n = r.u64();
    if (n == 0 || n > (1ull << 32)) {
        throw ParseError(path + ": implausible transition count at byte " +
                         std::to_string(r.offset() - 8));
    }
    ds.states.resize(ds.state_dim, n);
    ds.actions.resize(ds.action_dim, n);
    ds.rewards.resize(n);
    ds.next_states.resize(ds.state_dim, n);
    ds.dones.resize(n);
    for (uint64_t i = 0; i < n; ++i) {
        r.f64_array(ds.states.col(i).data(), ds.state_dim);
        r.f64_array(ds.actions.col(i).data(), ds.action_dim);
        ds.rewards(i) = r.f64();
        r.f64_array(ds.next_states.col(i).data(), ds.state_dim);
        ds.dones(i) = r.u8() != 0 ? 1.0 : 0.0;
    }
    r.expect_eof();
    return ds;
}

}  // namespace prdc
