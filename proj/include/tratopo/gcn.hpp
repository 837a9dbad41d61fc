#pragma once

// Two-layer graph convolution classifier trained full-batch with Adam on
// noisy labels: softmax(A_hat * relu(A_hat * X * W1) * W2) with
// A_hat = D~^{-1/2} (A + I) D~^{-1/2}.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tratopo/errors.hpp"
#include "tratopo/graph.hpp"
#include "tratopo/labels.hpp"
#include "tratopo/matrix.hpp"
#include "tratopo/rng.hpp"

namespace tratopo {

/// N x K matrix whose rows are per-node class distributions.
using DistributionMatrix = DenseMatrix;

struct NormalizedAdjacency {
    CsrMatrix mat;  // symmetric, entry (i,j) = 1/sqrt(d~_i d~_j)
};

inline NormalizedAdjacency normalize_adjacency(const Graph& g) {
    const NodeId n = g.node_count();
    std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i)
        inv_sqrt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(1.0 + g.degree(i));
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(n + 2 * g.edge_count()));
    for (NodeId i = 0; i < n; ++i) {
        const double si = inv_sqrt[static_cast<std::size_t>(i)];
        bool diag_done = false;
        for (NodeId j : g.neighbors(i)) {
            if (!diag_done && j > i) {
                trips.push_back({i, i, si * si});
                diag_done = true;
            }
            trips.push_back({i, j, si * inv_sqrt[static_cast<std::size_t>(j)]});
        }
        if (!diag_done) trips.push_back({i, i, si * si});
    }
    return {CsrMatrix::from_triplets(n, n, std::move(trips))};
}

struct TrainConfig {
    double learning_rate = 1e-3;
    std::int32_t epochs = 200;
    Index hidden_units = 200;
    std::uint64_t seed = 0;
};

struct GcnParams {
    DenseMatrix w1;  // d x h
    DenseMatrix w2;  // h x K
    // Adam moment accumulators, one pair per weight matrix
    DenseMatrix m_w1, v_w1, m_w2, v_w2;
    std::int64_t adam_step = 0;
};

namespace detail {

inline DenseMatrix glorot_uniform(Index rows, Index cols, Rng& rng) {
    DenseMatrix w(rows, cols);
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& x : w.data()) x = (2.0 * rng.next_double() - 1.0) * limit;
    return w;
}

inline void relu_inplace(DenseMatrix& m) {
    for (double& x : m.data())
        if (x < 0.0) x = 0.0;
}

inline void softmax_rows_inplace(DenseMatrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        double mx = r[0];
        for (double x : r) mx = std::max(mx, x);
        double sum = 0.0;
        for (double& x : r) {
            x = std::exp(x - mx);
            sum += x;
        }
        for (double& x : r) x /= sum;
    }
}

struct ForwardCache {
    DenseMatrix h1;      // pre-activation, N x h
    DenseMatrix a1;      // relu(h1)
    DenseMatrix m1;      // A_hat * a1
    DenseMatrix logits;  // m1 * w2
    DenseMatrix probs;   // softmax rows
};

/// xw1_input is either A_hat*X precomputed (CSR) for repeated evaluation, or
/// must be consistent with the caller's layout.
inline ForwardCache forward_cached(const CsrMatrix& ax, const CsrMatrix& a_hat,
                                   const GcnParams& p) {
    ForwardCache c;
    c.h1 = spmm(ax, p.w1);
    c.a1 = c.h1;
    relu_inplace(c.a1);
    c.m1 = spmm(a_hat, c.a1);
    c.logits = matmul(c.m1, p.w2);
    c.probs = c.logits;
    softmax_rows_inplace(c.probs);
    if (!c.probs.all_finite()) throw NumericError("gcn forward produced non-finite values");
    return c;
}

}  // namespace detail

inline GcnParams init_params(Index input_dim, Index hidden, Index classes, std::uint64_t seed) {
    GcnParams p;
    Rng r1 = Rng::substream(seed, "gcn-w1");
    Rng r2 = Rng::substream(seed, "gcn-w2");
    p.w1 = detail::glorot_uniform(input_dim, hidden, r1);
    p.w2 = detail::glorot_uniform(hidden, classes, r2);
    p.m_w1 = DenseMatrix(input_dim, hidden);
    p.v_w1 = DenseMatrix(input_dim, hidden);
    p.m_w2 = DenseMatrix(hidden, classes);
    p.v_w2 = DenseMatrix(hidden, classes);
    return p;
}

inline DistributionMatrix forward(const NormalizedAdjacency& adj, const FeatureMatrix& x,
                                  const GcnParams& p) {
    if (x.rows() != adj.mat.rows()) throw InvalidArgument("forward: feature row count mismatch");
    const CsrMatrix ax = spgemm(adj.mat, x);
    return detail::forward_cached(ax, adj.mat, p).probs;
}

/// Mean over `mask` of -log p(true class), with probability floor 1e-12.
inline double cross_entropy(const DistributionMatrix& dist, std::span<const std::int32_t> labels,
                            std::span<const NodeId> mask) {
    if (mask.empty()) throw InvalidArgument("cross_entropy: empty mask");
    double loss = 0.0;
    for (NodeId i : mask) {
        const double p = dist(i, labels[static_cast<std::size_t>(i)]);
        loss -= std::log(std::max(p, 1e-12));
    }
    return loss / static_cast<double>(mask.size());
}

struct Gradients {
    DenseMatrix w1;
    DenseMatrix w2;
};

namespace detail {

inline Gradients gradients_cached(const CsrMatrix& ax, const CsrMatrix& a_hat,
                                  const ForwardCache& c, const GcnParams& p,
                                  std::span<const std::int32_t> labels,
                                  std::span<const NodeId> mask) {
    const Index n = c.probs.rows();
    const Index k = c.probs.cols();
    DenseMatrix dz(n, k);
    const double inv = 1.0 / static_cast<double>(mask.size());
    for (NodeId i : mask) {
        const auto pr = c.probs.row(i);
        auto dr = dz.row(i);
        for (Index j = 0; j < k; ++j) dr[j] = pr[j] * inv;
        dr[labels[static_cast<std::size_t>(i)]] -= inv;
    }
    Gradients g;
    g.w2 = matmul_at_b(c.m1, dz);
    DenseMatrix dm1 = matmul_a_bt(dz, p.w2);
    DenseMatrix da1 = spmm(a_hat, dm1);  // A_hat symmetric, so A_hat^T = A_hat
    for (std::size_t i = 0; i < da1.data().size(); ++i)
        if (c.h1.data()[i] <= 0.0) da1.data()[i] = 0.0;
    g.w1 = spmm_transposed(ax, da1);
    return g;
}

inline void adam_update(DenseMatrix& w, DenseMatrix& m, DenseMatrix& v, const DenseMatrix& grad,
                        double lr, std::int64_t step) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < w.data().size(); ++i) {
        const double gi = grad.data()[i];
        m.data()[i] = beta1 * m.data()[i] + (1.0 - beta1) * gi;
        v.data()[i] = beta2 * v.data()[i] + (1.0 - beta2) * gi * gi;
        const double mhat = m.data()[i] / bc1;
        const double vhat = v.data()[i] / bc2;
        w.data()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace detail

/// Analytic gradients of masked mean cross-entropy w.r.t. W1 and W2.
inline Gradients gradients(const NormalizedAdjacency& adj, const FeatureMatrix& x,
                           const GcnParams& p, std::span<const std::int32_t> labels,
                           std::span<const NodeId> mask) {
    if (mask.empty()) throw InvalidArgument("gradients: empty mask");
    const CsrMatrix ax = spgemm(adj.mat, x);
    const auto cache = detail::forward_cached(ax, adj.mat, p);
    return detail::gradients_cached(ax, adj.mat, cache, p, labels, mask);
}

struct TrainResult {
    GcnParams params;
    DistributionMatrix dist;         // P(Z|V) over the whole graph
    LabelVec auto_labels;            // Y_a = per-row argmax
    std::vector<double> loss_history;
};

inline LabelVec argmax_rows(const DistributionMatrix& dist) {
    LabelVec out(static_cast<std::size_t>(dist.rows()));
    for (Index i = 0; i < dist.rows(); ++i) {
        auto r = dist.row(i);
        std::int32_t best = 0;
        for (Index j = 1; j < dist.cols(); ++j)
            if (r[static_cast<std::size_t>(j)] > r[static_cast<std::size_t>(best)])
                best = static_cast<std::int32_t>(j);
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

/// Full-batch Adam on the cross-entropy of `labels` over `mask`.
/// Deterministic per cfg.seed (Glorot init from a seeded substream).
inline TrainResult train_masked(const Graph& g, const FeatureMatrix& x,
                                std::span<const std::int32_t> labels,
                                std::span<const NodeId> mask, std::int32_t class_count,
                                const TrainConfig& cfg) {
    if (mask.empty()) throw InvalidArgument("train: empty mask");
    const NormalizedAdjacency adj = normalize_adjacency(g);
    const CsrMatrix ax = spgemm(adj.mat, x);
    GcnParams p = init_params(x.cols(), cfg.hidden_units, class_count, cfg.seed);

    TrainResult out;
    out.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
    detail::ForwardCache cache = detail::forward_cached(ax, adj.mat, p);
    for (std::int32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double loss = cross_entropy(cache.probs, labels, mask);
        if (!std::isfinite(loss))
            throw NumericError("training diverged at epoch " + std::to_string(epoch));
        out.loss_history.push_back(loss);
        Gradients grad = detail::gradients_cached(ax, adj.mat, cache, p, labels, mask);
        ++p.adam_step;
        detail::adam_update(p.w1, p.m_w1, p.v_w1, grad.w1, cfg.learning_rate, p.adam_step);
        detail::adam_update(p.w2, p.m_w2, p.v_w2, grad.w2, cfg.learning_rate, p.adam_step);
        cache = detail::forward_cached(ax, adj.mat, p);
    }
    out.dist = cache.probs;
    out.auto_labels = argmax_rows(out.dist);
    out.params = std::move(p);
    return out;
}

/// Spec-shaped entry point: trains on the train-role nodes of `split` with
/// manual labels.
inline TrainResult train(const Graph& g, const FeatureMatrix& x, const NodeLabelStore& labels,
                         const SplitAssignment& split, const TrainConfig& cfg) {
    const auto mask = split.nodes_with(Role::train);
    return train_masked(g, x, labels.manual_labels, mask, labels.class_count, cfg);
}

inline double accuracy(std::span<const std::int32_t> predicted,
                       std::span<const std::int32_t> truth, std::span<const NodeId> mask) {
    if (mask.empty()) throw InvalidArgument("accuracy: empty mask");
    std::int64_t correct = 0;
    for (NodeId i : mask)
        correct += predicted[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(i)];
    return static_cast<double>(correct) / static_cast<double>(mask.size());
}

/// Mean over mask of H(row)/ln K, entropy in nats; lies in [0,1].
inline double avg_normalized_entropy(const DistributionMatrix& dist,
                                     std::span<const NodeId> mask) {
    if (mask.empty()) throw InvalidArgument("avg_normalized_entropy: empty mask");
    const double log_k = std::log(static_cast<double>(dist.cols()));
    double total = 0.0;
    for (NodeId i : mask) {
        double h = 0.0;
        for (double p : dist.row(i))
            if (p > 0.0) h -= p * std::log(p);
        total += h / log_k;
    }
    return total / static_cast<double>(mask.size());
}

/// Row-stochasticity check used by the always-on inference validators.
inline void check_distribution_rows(const DistributionMatrix& dist, double tol = 1e-9) {
    for (Index i = 0; i < dist.rows(); ++i) {
        double sum = 0.0;
        for (double p : dist.row(i)) {
            if (p < 0.0) throw NumericError("distribution row has negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > tol)
            throw NumericError("distribution row does not sum to 1 (row " + std::to_string(i) +
                               ", sum " + std::to_string(sum) + ")");
    }
}

}  // namespace tratopo
