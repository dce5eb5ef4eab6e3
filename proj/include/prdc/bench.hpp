#pragma once

#include <chrono>
#include <vector>

#include "prdc/neighbor_index.hpp"

namespace prdc {

struct BenchRow {
    size_t size = 0;
    double kd_build_ms = 0.0;
    double kd_query_us = 0.0;     // mean per query
    double brute_query_us = 0.0;  // mean per query
    bool results_match = false;
};

/// Times KD-tree retrieval against the linear scan on random data of the
/// given total dimension (one action dimension, the rest state). Both
/// backends answer the same queries and their (distance, index) results are
/// compared while timing; a mismatch is a correctness failure, not a timing
/// artifact.
inline std::vector<BenchRow> bench_index(const std::vector<size_t>& sizes, int dim, int queries,
                                         double beta, size_t k, uint64_t seed) {
    if (sizes.size() < 2) throw ConfigError("bench_index: need at least two sizes");
    if (dim < 2) throw ConfigError("bench_index: dim must be >= 2");
    if (queries < 1) throw ConfigError("bench_index: queries must be >= 1");

    using clock = std::chrono::steady_clock;
    const int state_dim = dim - 1;
    std::vector<BenchRow> rows;
    for (size_t n : sizes) {
        Rng rng(mix_seed(seed, n));
        OfflineDataset ds;
        ds.env_id = "bench";
        ds.state_dim = state_dim;
        ds.action_dim = 1;
        ds.states.resize(state_dim, n);
        ds.actions.resize(1, n);
        ds.next_states = MatrixXd::Zero(state_dim, n);
        ds.rewards = VectorXd::Zero(n);
        ds.dones = VectorXd::Zero(n);
        for (size_t i = 0; i < n; ++i) {
            for (int d = 0; d < state_dim; ++d) ds.states(d, i) = rng.uniform(-1.0, 1.0);
            ds.actions(0, i) = rng.uniform(-1.0, 1.0);
        }

        std::vector<VectorXd> qs(queries), qa(queries);
        for (int q = 0; q < queries; ++q) {
            qs[q].resize(state_dim);
            for (int d = 0; d < state_dim; ++d) qs[q](d) = rng.uniform(-1.0, 1.0);
            qa[q].resize(1);
            qa[q](0) = rng.uniform(-1.0, 1.0);
        }

        BenchRow row;
        row.size = n;
        const size_t kk = std::min(k, n);

        const auto b0 = clock::now();
        NeighborIndex index(ds, beta);
        row.kd_build_ms = std::chrono::duration<double, std::milli>(clock::now() - b0).count();

        std::vector<std::vector<NeighborResult>> kd_hits(queries);
        const auto t0 = clock::now();
        for (int q = 0; q < queries; ++q) kd_hits[q] = index.k_nearest(qs[q], qa[q], kk);
        row.kd_query_us =
            std::chrono::duration<double, std::micro>(clock::now() - t0).count() / queries;

        std::vector<std::vector<NeighborResult>> bf_hits(queries);
        const auto t1 = clock::now();
        for (int q = 0; q < queries; ++q) {
            bf_hits[q] = brute_force_nearest(ds, beta, qs[q], qa[q], kk);
        }
        row.brute_query_us =
            std::chrono::duration<double, std::micro>(clock::now() - t1).count() / queries;

        row.results_match = true;
        for (int q = 0; q < queries && row.results_match; ++q) {
            for (size_t j = 0; j < kk; ++j) {
                if (kd_hits[q][j].source_index != bf_hits[q][j].source_index ||
                    kd_hits[q][j].distance != bf_hits[q][j].distance) {
                    row.results_match = false;
                    break;
                }
            }
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace prdc
