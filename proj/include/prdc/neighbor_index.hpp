#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cstdint>
#include <utility>
#include <vector>

#include "prdc/dataset.hpp"

namespace prdc {

/// One retrieval hit: the point-to-set distance in the beta-scaled space and
/// the unscaled originals of the minimizing sample.
struct NeighborResult {
    double distance = 0.0;
    VectorXd neighbor_state;
    VectorXd neighbor_action;
    size_t source_index = 0;
};

namespace detail {

/// Lays out one sample as (beta*s) followed by a, the concatenation the
/// point-to-set distance is defined over.
inline MatrixXd scale_points(const OfflineDataset& ds, double beta) {
    MatrixXd pts(ds.state_dim + ds.action_dim, ds.size());
    pts.topRows(ds.state_dim) = beta * ds.states;
    pts.bottomRows(ds.action_dim) = ds.actions;
    return pts;
}

inline VectorXd scale_query(const VectorXd& state, const VectorXd& action, double beta) {
    VectorXd q(state.size() + action.size());
    q.head(state.size()) = beta * state;
    q.tail(action.size()) = action;
    return q;
}

/// Bounded worst-first candidate set ordered by (squared distance, index).
/// Smaller index wins distance ties, both for membership and for the final
/// ordering, which keeps retrieval deterministic.
class KBest {
public:
    explicit KBest(size_t k) : k_(k) {}

    bool full() const { return heap_.size() == k_; }
    double worst_dist2() const { return heap_.front().first; }

    /// True when (d2, idx) would enter the set right now.
    bool admits(double d2, uint32_t idx) const {
        if (!full()) return true;
        const auto& w = heap_.front();
        return d2 < w.first || (d2 == w.first && idx < w.second);
    }

    void offer(double d2, uint32_t idx) {
        if (!admits(d2, idx)) return;
        if (full()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = {d2, idx};
        } else {
            heap_.push_back({d2, idx});
        }
        std::push_heap(heap_.begin(), heap_.end());
    }

    /// Extracts the hits sorted ascending by (distance, index).
    std::vector<std::pair<double, uint32_t>> sorted() && {
        std::sort(heap_.begin(), heap_.end());
        return std::move(heap_);
    }

private:
    size_t k_;
    std::vector<std::pair<double, uint32_t>> heap_;
};

#ifndef NDEBUG
/// Component bound of the scaled metric: each block's norm never exceeds the
/// full distance. Checked with block-first accumulation so the comparison is
/// exact in floating point.
inline void assert_component_bounds(const VectorXd& q, const VectorXd& p, int state_dim) {
    double ssq = 0.0, asq = 0.0;
    for (Eigen::Index r = 0; r < state_dim; ++r) ssq += (q(r) - p(r)) * (q(r) - p(r));
    for (Eigen::Index r = state_dim; r < q.size(); ++r) asq += (q(r) - p(r)) * (q(r) - p(r));
    double total_s_first = ssq;
    for (Eigen::Index r = state_dim; r < q.size(); ++r) {
        total_s_first += (q(r) - p(r)) * (q(r) - p(r));
    }
    double total_a_first = asq;
    for (Eigen::Index r = 0; r < state_dim; ++r) total_a_first += (q(r) - p(r)) * (q(r) - p(r));
    assert(ssq <= total_s_first);
    assert(asq <= total_a_first);
}
#endif

}  // namespace detail

/// Exact nearest-neighbor retrieval over beta-scaled state/action pairs.
/// Balanced KD-tree, splitting dimensions cycled by depth, split at the
/// median position, so depth stays logarithmic even with duplicate points.
/// Immutable after construction; concurrent queries are safe.
class NeighborIndex {
public:
    NeighborIndex(const OfflineDataset& ds, double beta)
        : beta_(beta),
          state_dim_(ds.state_dim),
          action_dim_(ds.action_dim),
          points_(detail::scale_points(ds, beta)),
          states_(ds.states),
          actions_(ds.actions) {
        if (beta <= 0.0) throw ConfigError("NeighborIndex: beta must be positive");
        if (ds.size() == 0) throw ConfigError("NeighborIndex: empty dataset");
        order_.resize(ds.size());
        for (size_t i = 0; i < ds.size(); ++i) order_[i] = static_cast<uint32_t>(i);
        build(0, order_.size(), 0);
    }

    size_t size() const { return order_.size(); }
    double beta() const { return beta_; }
    int state_dim() const { return state_dim_; }
    int action_dim() const { return action_dim_; }

    NeighborResult nearest(const VectorXd& state, const VectorXd& action) const {
        return k_nearest(state, action, 1).front();
    }

    /// The k exact smallest distances, ascending, ties broken by source index.
    std::vector<NeighborResult> k_nearest(const VectorXd& state, const VectorXd& action,
                                          size_t k) const {
        check_query(state, action, k);
        const VectorXd q = detail::scale_query(state, action, beta_);
        detail::KBest best(k);
        search(q, 0, order_.size(), 0, best);
        return finish(q, std::move(best).sorted());
    }

    /// Depth of the built tree; exposed for balance checks.
    int max_depth() const { return depth_of(0, order_.size()); }

private:
    void check_query(const VectorXd& state, const VectorXd& action, size_t k) const {
        if (state.size() != state_dim_ || action.size() != action_dim_) {
            throw ConfigError("NeighborIndex: query dimension mismatch");
        }
        if (k < 1 || k > order_.size()) {
            throw ConfigError("NeighborIndex: k=" + std::to_string(k) +
                              " out of range [1, " + std::to_string(order_.size()) + "]");
        }
    }

    void build(size_t lo, size_t hi, int depth) {
        if (hi - lo <= 1) return;
        const size_t mid = lo + (hi - lo) / 2;
        const int dim = depth % points_.rows();
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](uint32_t a, uint32_t b) { return points_(dim, a) < points_(dim, b); });
        build(lo, mid, depth + 1);
        build(mid + 1, hi, depth + 1);
    }

    void search(const VectorXd& q, size_t lo, size_t hi, int depth, detail::KBest& best) const {
        if (lo >= hi) return;
        const size_t mid = lo + (hi - lo) / 2;
        const uint32_t idx = order_[mid];
        best.offer((points_.col(idx) - q).squaredNorm(), idx);

        const int dim = depth % points_.rows();
        const double delta = q(dim) - points_(dim, idx);
        const bool go_left_first = delta < 0.0;
        const auto near_lo = go_left_first ? lo : mid + 1;
        const auto near_hi = go_left_first ? mid : hi;
        const auto far_lo = go_left_first ? mid + 1 : lo;
        const auto far_hi = go_left_first ? hi : mid;

        search(q, near_lo, near_hi, depth + 1, best);
        // The far half can still hold a winner when the splitting plane is
        // within the current worst distance (equality included: an
        // equidistant point with a smaller index still wins the tie).
        if (!best.full() || delta * delta <= best.worst_dist2()) {
            search(q, far_lo, far_hi, depth + 1, best);
        }
    }

    std::vector<NeighborResult> finish(const VectorXd& q,
                                       std::vector<std::pair<double, uint32_t>> hits) const {
        std::vector<NeighborResult> out;
        out.reserve(hits.size());
        for (const auto& [d2, idx] : hits) {
#ifndef NDEBUG
            detail::assert_component_bounds(q, points_.col(idx), state_dim_);
#endif
            out.push_back(NeighborResult{std::sqrt(d2), states_.col(idx), actions_.col(idx),
                                         static_cast<size_t>(idx)});
        }
        return out;
    }

    int depth_of(size_t lo, size_t hi) const {
        if (lo >= hi) return 0;
        const size_t mid = lo + (hi - lo) / 2;
        return 1 + std::max(depth_of(lo, mid), depth_of(mid + 1, hi));
    }

    double beta_;
    int state_dim_, action_dim_;
    MatrixXd points_;
    MatrixXd states_, actions_;
    std::vector<uint32_t> order_;
};

/// Linear-scan retrieval with the identical metric and tie rule. Test oracle
/// for the KD-tree.
inline std::vector<NeighborResult> brute_force_nearest(const OfflineDataset& ds, double beta,
                                                       const VectorXd& state,
                                                       const VectorXd& action, size_t k) {
    if (beta <= 0.0) throw ConfigError("brute_force_nearest: beta must be positive");
    if (ds.size() == 0) throw ConfigError("brute_force_nearest: empty dataset");
    if (state.size() != ds.state_dim || action.size() != ds.action_dim) {
        throw ConfigError("brute_force_nearest: query dimension mismatch");
    }
    if (k < 1 || k > ds.size()) {
        throw ConfigError("brute_force_nearest: k out of range");
    }
    const MatrixXd pts = detail::scale_points(ds, beta);
    const VectorXd q = detail::scale_query(state, action, beta);
    std::vector<std::pair<double, uint32_t>> all(ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        all[i] = {(pts.col(i) - q).squaredNorm(), static_cast<uint32_t>(i)};
    }
    std::partial_sort(all.begin(), all.begin() + k, all.end());
    all.resize(k);
    std::vector<NeighborResult> out;
    out.reserve(k);
    for (const auto& [d2, idx] : all) {
        out.push_back(NeighborResult{std::sqrt(d2), ds.states.col(idx), ds.actions.col(idx),
                                     static_cast<size_t>(idx)});
    }
    return out;
}

/// Average nearest-neighbor distance of the visited (state, action) pairs.
inline double mean_point_to_set_distance(const NeighborIndex& idx,
                                         const std::vector<std::pair<VectorXd, VectorXd>>& visited) {
    if (visited.empty()) throw ConfigError("mean_point_to_set_distance: no visited pairs");
    double sum = 0.0;
    for (const auto& [s, a] : visited) sum += idx.nearest(s, a).distance;
    return sum / static_cast<double>(visited.size());
}

inline double mean_point_to_set_distance(const OfflineDataset& ds,
                                         const std::vector<std::pair<VectorXd, VectorXd>>& visited,
                                         double beta) {
    return mean_point_to_set_distance(NeighborIndex(ds, beta), visited);
}

}  // namespace prdc
