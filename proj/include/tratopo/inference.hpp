#pragma once

// Bayesian label-transition engine. Per transition: Gibbs-style draw of
// every node's label from its posterior under the current K x K transition
// matrix, uncertainty flagging, link prediction for uncertain low-degree
// nodes, topology-sampler resampling over the augmented neighborhood,
// Dirichlet-concentration and transition-matrix updates, and periodic
// classifier retraining.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tratopo/errors.hpp"
#include "tratopo/gcn.hpp"
#include "tratopo/graph.hpp"
#include "tratopo/labels.hpp"
#include "tratopo/linkpred.hpp"
#include "tratopo/paths.hpp"
#include "tratopo/rng.hpp"

namespace tratopo {

/// Row k of `phi` is the distribution of noisy labels emitted by latent
/// class k; `alpha` holds the per-row symmetric Dirichlet concentrations.
struct TransitionState {
    DenseMatrix phi;
    std::vector<double> alpha;
    std::int32_t transition_index = 0;

    void validate(double tol = 1e-9) const {
        check_distribution_rows(phi, tol);
        for (double a : alpha)
            if (!(a > 0.0)) throw NumericError("alpha must stay strictly positive");
    }
};

enum class TopologySampler : std::uint8_t { uniform = 0, majority = 1, degree_weighted = 2 };
enum class Variant : std::uint8_t { lindt = 0, rwr = 1, pgr = 2, combine = 3 };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::lindt: return "lindt";
        case Variant::rwr: return "rwr";
        case Variant::pgr: return "pgr";
        case Variant::combine: return "combine";
    }
    return "?";
}

inline const char* to_string(TopologySampler s) {
    switch (s) {
        case TopologySampler::uniform: return "uniform";
        case TopologySampler::majority: return "majority";
        case TopologySampler::degree_weighted: return "degree_weighted";
    }
    return "?";
}

struct InferenceConfig {
    std::int32_t transitions = 100;      // T
    std::int32_t warmup_steps = 40;      // WS
    std::int32_t retrain_interval = 60;
    TopologySampler sampler = TopologySampler::uniform;
    LinkPredConfig linkpred;
    Variant variant = Variant::combine;
    std::uint64_t seed = 0;
    std::int32_t retrain_epochs = 0;     // 0 = use the classifier's epoch count

    void validate() const {
        if (transitions < 1) throw InvalidArgument("transitions must be >= 1");
        if (warmup_steps >= transitions && transitions > 1)
            throw InvalidArgument("warmup_steps must be < transitions");
        if (retrain_interval < 1) throw InvalidArgument("retrain_interval must be >= 1");
        linkpred.validate();
    }
};

// ---------------------------------------------------------------------------
// Elementary operations
// ---------------------------------------------------------------------------

/// Warm-up transition matrix from the train side: counts of (predicted class,
/// manual label) pairs, Laplace-smoothed by +1, rows normalized.
inline DenseMatrix warmup_matrix(const DistributionMatrix& train_dist,
                                 std::span<const std::int32_t> manual_labels) {
    if (train_dist.rows() != static_cast<Index>(manual_labels.size()))
        throw InvalidArgument("warmup_matrix: row/label count mismatch");
    const Index k = train_dist.cols();
    const LabelVec predicted = argmax_rows(train_dist);
    DenseMatrix phi(k, k, 1.0);  // +1 smoothing
    for (std::size_t i = 0; i < manual_labels.size(); ++i)
        phi(predicted[i], manual_labels[i]) += 1.0;
    for (Index r = 0; r < k; ++r) {
        double sum = 0.0;
        for (double v : phi.row(r)) sum += v;
        for (double& v : phi.row(r)) v /= sum;
    }
    return phi;
}

struct TransitResult {
    std::int32_t label = 0;
    std::vector<double> posterior;
    bool degenerate = false;  // all-zero product; fell back to argmax of p_row
};

/// posterior_k = p_row[k] * phi[k][y_a], normalized; label = argmax with
/// smallest-id tie-break.
inline TransitResult transit_label(std::span<const double> p_row, const DenseMatrix& phi,
                                   std::int32_t auto_label) {
    const Index k = phi.rows();
    TransitResult out;
    out.posterior.resize(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (Index c = 0; c < k; ++c) {
        const double v = p_row[static_cast<std::size_t>(c)] * phi(c, auto_label);
        out.posterior[static_cast<std::size_t>(c)] = v;
        sum += v;
    }
    if (sum <= 0.0) {
        out.degenerate = true;
        out.posterior.assign(p_row.begin(), p_row.end());
        sum = 0.0;
        for (double v : out.posterior) sum += v;
    }
    for (double& v : out.posterior) v /= sum;
    std::int32_t best = 0;
    for (Index c = 1; c < k; ++c)
        if (out.posterior[static_cast<std::size_t>(c)] >
            out.posterior[static_cast<std::size_t>(best)])
            best = static_cast<std::int32_t>(c);
    out.label = best;
    return out;
}

/// alpha_k <- alpha_k * counts_t[k] / counts_prev[k], unchanged where either
/// count is zero, clamped to [1e-3, 1e3].
inline std::vector<double> update_alpha(std::span<const double> alpha_prev,
                                        std::span<const std::int64_t> counts_t,
                                        std::span<const std::int64_t> counts_prev) {
    if (alpha_prev.size() != counts_t.size() || counts_t.size() != counts_prev.size())
        throw InvalidArgument("update_alpha: length mismatch");
    std::vector<double> out(alpha_prev.begin(), alpha_prev.end());
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (counts_prev[k] != 0 && counts_t[k] != 0)
            out[k] *= static_cast<double>(counts_t[k]) / static_cast<double>(counts_prev[k]);
        out[k] = std::clamp(out[k], 1e-3, 1e3);
    }
    return out;
}

/// Posterior-mean transition matrix under per-row symmetric Dirichlet(alpha_k):
/// phi[k][j] = (C[k][j] + alpha_k) / (sum_j C[k][j] + K * alpha_k).
inline DenseMatrix update_phi(const std::vector<std::vector<std::int64_t>>& counts,
                              std::span<const double> alpha) {
    const auto k = static_cast<Index>(counts.size());
    DenseMatrix phi(k, k);
    for (Index r = 0; r < k; ++r) {
        std::int64_t row_sum = 0;
        for (std::int64_t c : counts[static_cast<std::size_t>(r)]) row_sum += c;
        const double a = alpha[static_cast<std::size_t>(r)];
        const double denom = static_cast<double>(row_sum) + static_cast<double>(k) * a;
        for (Index j = 0; j < k; ++j)
            phi(r, j) =
                (static_cast<double>(counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)]) + a) /
                denom;
    }
    return phi;
}

inline std::vector<std::vector<std::int64_t>> count_transitions(std::span<const std::int32_t> z,
                                                                std::span<const std::int32_t> y,
                                                                std::int32_t class_count) {
    std::vector<std::vector<std::int64_t>> c(
        static_cast<std::size_t>(class_count),
        std::vector<std::int64_t>(static_cast<std::size_t>(class_count), 0));
    for (std::size_t i = 0; i < z.size(); ++i)
        ++c[static_cast<std::size_t>(z[i])][static_cast<std::size_t>(y[i])];
    return c;
}

inline std::vector<std::int64_t> class_counts(std::span<const std::int32_t> z,
                                              std::int32_t class_count) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(class_count), 0);
    for (std::int32_t v : z) ++c[static_cast<std::size_t>(v)];
    return c;
}

// ---------------------------------------------------------------------------
// Topology samplers
// ---------------------------------------------------------------------------

/// Draws a class with probability proportional to its count among neighbor
/// labels (a uniform pick of one labeled neighbor).
inline std::int32_t sample_uniform(std::span<const std::int32_t> neighbor_labels, Rng& rng) {
    if (neighbor_labels.empty()) throw InvalidArgument("sample_uniform: no neighbors");
    return neighbor_labels[rng.uniform_int(neighbor_labels.size())];
}

/// Most frequent neighbor label; ties go to the smallest class id.
inline std::int32_t sample_majority(std::span<const std::int32_t> neighbor_labels,
                                    std::int32_t class_count) {
    if (neighbor_labels.empty()) throw InvalidArgument("sample_majority: no neighbors");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(class_count), 0);
    for (std::int32_t l : neighbor_labels) ++counts[static_cast<std::size_t>(l)];
    std::int32_t best = 0;
    for (std::int32_t k = 1; k < class_count; ++k)
        if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(best)]) best = k;
    return best;
}

/// Class whose neighbors' total degree is largest; ties go to the smallest
/// class id.
inline std::int32_t sample_degree_weighted(const Graph& g, NodeId node,
                                           std::span<const std::int32_t> labels,
                                           std::int32_t class_count) {
    const auto nb = g.neighbors(node);
    if (nb.empty()) throw InvalidArgument("sample_degree_weighted: no neighbors");
    std::vector<std::int64_t> weight(static_cast<std::size_t>(class_count), 0);
    for (NodeId v : nb)
        weight[static_cast<std::size_t>(labels[static_cast<std::size_t>(v)])] += g.degree(v);
    std::int32_t best = 0;
    for (std::int32_t k = 1; k < class_count; ++k)
        if (weight[static_cast<std::size_t>(k)] > weight[static_cast<std::size_t>(best)]) best = k;
    return best;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

struct TransitionRecord {
    std::int32_t t = 0;
    std::int64_t uncertain_count = 0;
    std::vector<NodeId> uncertain_nodes;
    std::vector<NodeId> linkpred_nodes;  // gate: uncertain && degree < min_degree
    std::vector<Edge> edges_added;
    std::vector<double> alpha;
    std::uint64_t phi_checksum = 0;
    double accuracy_so_far = -1.0;  // -1 when no ground truth was supplied
    bool retrained = false;
    // diagnostics, filled only when ground truth is supplied
    std::int64_t resampled_count = 0;
    std::int64_t resampled_correct_before = -1;  // after transit, before resample
    std::int64_t resampled_correct_after = -1;
    double transit_accuracy = -1.0;              // over all nodes, after step (b)

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["t"] = t;
        j["uncertain"] = uncertain_count;
        j["uncertain_nodes"] = uncertain_nodes;
        j["linkpred_nodes"] = linkpred_nodes;
        nlohmann::json added = nlohmann::json::array();
        for (const Edge& e : edges_added) added.push_back({e.u, e.v});
        j["edges_added"] = std::move(added);
        j["alpha"] = alpha;
        j["phi_checksum"] = phi_checksum;
        if (accuracy_so_far >= 0.0) j["accuracy"] = accuracy_so_far;
        j["retrained"] = retrained;
        return j;
    }
};

struct InferenceTrace {
    std::vector<TransitionRecord> transitions;
    std::span<const std::int32_t> truth;  // optional; enables accuracy-so-far
    std::ostream* sink = nullptr;         // optional; JSON lines as they happen
};

struct InferenceResult {
    LabelVec inferred;
    TransitionState state;
    DistributionMatrix dist;
    std::int64_t total_edges_added = 0;
    std::int64_t total_retrains = 0;
    bool uncertain_nonincreasing_tail = true;  // convergence smoke signal
};

namespace detail {

inline std::uint64_t matrix_checksum(const DenseMatrix& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : m.data()) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        std::memcpy(&bits, &x, sizeof(bits));
        for (int b = 0; b < 64; b += 8) {
            h ^= (bits >> b) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

inline ScoreMode score_mode(Variant v) {
    switch (v) {
        case Variant::rwr: return ScoreMode::rwr_only;
        case Variant::pgr: return ScoreMode::pagerank_only;
        default: return ScoreMode::combine;
    }
}

}  // namespace detail

/// Runs T label transitions on the (perturbed) test graph. `warmup_phi`
/// comes from warmup_matrix on the training side; `initial_dist` and
/// `auto_labels` come from the trained classifier evaluated on this graph.
/// The input graph is never modified; link-predicted edges live in a working
/// copy only.
inline InferenceResult tratopo_infer(const Graph& test_graph, const FeatureMatrix& features,
                                     const TrainConfig& classifier, const DenseMatrix& warmup_phi,
                                     DistributionMatrix initial_dist, LabelVec auto_labels,
                                     const InferenceConfig& cfg, InferenceTrace* trace = nullptr) {
    cfg.validate();
    const NodeId n = test_graph.node_count();
    const Index k = initial_dist.cols();
    if (initial_dist.rows() != n || static_cast<NodeId>(auto_labels.size()) != n)
        throw InvalidArgument("tratopo_infer: distribution/label shape mismatch");
    if (features.rows() != n) throw InvalidArgument("tratopo_infer: feature shape mismatch");
    if (warmup_phi.rows() != k || warmup_phi.cols() != k)
        throw InvalidArgument("tratopo_infer: warm-up matrix shape mismatch");
    check_distribution_rows(initial_dist);
    check_distribution_rows(warmup_phi);

    Graph working = test_graph;
    DistributionMatrix dist = std::move(initial_dist);
    LabelVec y_a = std::move(auto_labels);
    LabelVec z_prev = y_a;
    DenseMatrix phi = warmup_phi;
    std::vector<double> alpha(static_cast<std::size_t>(k), 1.0);
    CandidateCache cache;

    InferenceResult result;
    std::vector<std::int64_t> uncertain_history;

    std::vector<std::vector<double>> posterior(static_cast<std::size_t>(n));
    LabelVec z_t(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> uncertain(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> resampled(static_cast<std::size_t>(n));

    // per-node tallies of post-warm-up samples; the returned estimate is the
    // chain mode, which integrates out single-draw noise
    const std::int32_t tally_from = std::min(cfg.warmup_steps, cfg.transitions);
    std::vector<std::int32_t> tally(static_cast<std::size_t>(n) * static_cast<std::size_t>(k), 0);

    for (std::int32_t t = 1; t <= cfg.transitions; ++t) {
        const DenseMatrix& phi_t = (t < cfg.warmup_steps) ? warmup_phi : phi;
        const std::vector<std::int64_t> counts_prev = class_counts(z_prev, static_cast<std::int32_t>(k));
        TransitionRecord rec;
        rec.t = t;

        // (b) transit every node through the active matrix. The label is a
        //     Gibbs draw from the posterior, not its argmax: confident rows
        //     almost never flip, diffuse rows flip often and flow into the
        //     uncertainty machinery below. Per-node substreams keep the draw
        //     independent of evaluation order.
        for (NodeId i = 0; i < n; ++i) {
            TransitResult tr = transit_label(dist.row(i), phi_t, y_a[static_cast<std::size_t>(i)]);
            Rng rng = Rng::substream(cfg.seed, "transit", static_cast<std::uint64_t>(t),
                                     static_cast<std::uint64_t>(i));
            const double u = rng.next_double();
            double cum = 0.0;
            std::int32_t drawn = static_cast<std::int32_t>(k) - 1;
            for (Index c = 0; c < k; ++c) {
                cum += tr.posterior[static_cast<std::size_t>(c)];
                if (u < cum) {
                    drawn = static_cast<std::int32_t>(c);
                    break;
                }
            }
            z_t[static_cast<std::size_t>(i)] = drawn;
            posterior[static_cast<std::size_t>(i)] = std::move(tr.posterior);
        }

        // (c) uncertainty: changed since t-1 or disagreeing with y_a
        for (NodeId i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            uncertain[idx] = z_t[idx] != z_prev[idx] || z_t[idx] != y_a[idx];
            if (uncertain[idx]) {
                ++rec.uncertain_count;
                rec.uncertain_nodes.push_back(i);
            }
        }

        // (d) link prediction for uncertain nodes under the degree gate,
        //     against the immutable pre-transition snapshot
        if (cfg.variant != Variant::lindt) {
            std::vector<Edge> to_add;
            for (NodeId i : rec.uncertain_nodes) {
                if (working.degree(i) >= cfg.linkpred.min_degree) continue;
                rec.linkpred_nodes.push_back(i);
                auto cand = cache.get_or_build(working, i, cfg.linkpred.l_max);
                for (NodeId v :
                     predict_links(working, i, *cand, cfg.linkpred, detail::score_mode(cfg.variant)))
                    to_add.push_back(canonical(i, v));
            }
            std::sort(to_add.begin(), to_add.end());
            to_add.erase(std::unique(to_add.begin(), to_add.end()), to_add.end());
            if (!to_add.empty()) {
                working = working.with_edges_added(to_add);
                cache.clear();  // revision changed; old entries are dead weight
                rec.edges_added = std::move(to_add);
                result.total_edges_added += static_cast<std::int64_t>(rec.edges_added.size());
            }
        }

        const bool diag = trace && !trace->truth.empty();
        if (diag) {
            std::int64_t ok = 0;
            for (NodeId i = 0; i < n; ++i)
                ok += z_t[static_cast<std::size_t>(i)] == trace->truth[static_cast<std::size_t>(i)];
            rec.transit_accuracy = static_cast<double>(ok) / static_cast<double>(n);
            rec.resampled_correct_before = 0;
            for (NodeId i : rec.uncertain_nodes)
                rec.resampled_correct_before +=
                    z_t[static_cast<std::size_t>(i)] == trace->truth[static_cast<std::size_t>(i)];
        }

        // (e) resample uncertain nodes over the augmented neighborhood using
        //     the post-transit label snapshot; isolated nodes keep the transit
        //     label. The draw becomes evidence: the node's posterior is
        //     recomputed with the sampled label in place of y_a, so the
        //     neighborhood consensus persists in P-bar instead of being
        //     washed out by the next transit.
        std::fill(resampled.begin(), resampled.end(), 0);
        const LabelVec z_snapshot = z_t;
        std::vector<std::int32_t> nb_labels;
        for (NodeId i : rec.uncertain_nodes) {
            const auto nb = working.neighbors(i);
            if (nb.empty()) continue;
            const auto idx = static_cast<std::size_t>(i);
            switch (cfg.sampler) {
                case TopologySampler::uniform: {
                    Rng rng = Rng::substream(cfg.seed, "topo-sampler",
                                             static_cast<std::uint64_t>(t),
                                             static_cast<std::uint64_t>(i));
                    nb_labels.clear();
                    for (NodeId v : nb) nb_labels.push_back(z_snapshot[static_cast<std::size_t>(v)]);
                    z_t[idx] = sample_uniform(nb_labels, rng);
                    break;
                }
                case TopologySampler::majority: {
                    nb_labels.clear();
                    for (NodeId v : nb) nb_labels.push_back(z_snapshot[static_cast<std::size_t>(v)]);
                    z_t[idx] = sample_majority(nb_labels, static_cast<std::int32_t>(k));
                    break;
                }
                case TopologySampler::degree_weighted:
                    z_t[idx] = sample_degree_weighted(working, i, z_snapshot,
                                                      static_cast<std::int32_t>(k));
                    break;
            }
            resampled[idx] = 1;
#if !defined(TRATOPO_RESAMPLE_KEEPS_TRANSIT_POSTERIOR)
            posterior[idx] = transit_label(dist.row(i), phi_t, z_t[idx]).posterior;
#endif
        }
        if (diag) {
            rec.resampled_correct_after = 0;
            for (NodeId i : rec.uncertain_nodes) {
                rec.resampled_count += resampled[static_cast<std::size_t>(i)];
                rec.resampled_correct_after +=
                    z_t[static_cast<std::size_t>(i)] == trace->truth[static_cast<std::size_t>(i)];
            }
        }

        // (f) concentration update from label counts, then the transition matrix
        const std::vector<std::int64_t> counts_t = class_counts(z_t, static_cast<std::int32_t>(k));
        alpha = update_alpha(alpha, counts_t, counts_prev);
        phi = update_phi(count_transitions(z_t, y_a, static_cast<std::int32_t>(k)), alpha);

        // (g) posterior rows for resampled nodes
        for (NodeId i = 0; i < n; ++i) {
            if (!resampled[static_cast<std::size_t>(i)]) continue;
            auto row = dist.row(i);
            const auto& p = posterior[static_cast<std::size_t>(i)];
            for (Index j = 0; j < k; ++j) row[static_cast<std::size_t>(j)] = p[static_cast<std::size_t>(j)];
        }

        // stochastic-object invariants, checked every transition
        check_distribution_rows(phi);
        check_distribution_rows(dist);
        for (double a : alpha)
            if (a < 1e-3 - 1e-15 || a > 1e3 + 1e-15)
                throw NumericError("alpha left its clamp range");

        // (h) periodic retrain on the working graph with current labels
        if (cfg.retrain_interval > 0 && t % cfg.retrain_interval == 0 && t < cfg.transitions) {
            TrainConfig rt = classifier;
            if (cfg.retrain_epochs > 0) rt.epochs = cfg.retrain_epochs;
            std::uint64_t s = cfg.seed;
            rt.seed = splitmix64(s) ^ hash_tag("retrain") ^ static_cast<std::uint64_t>(t);
            std::vector<NodeId> all(static_cast<std::size_t>(n));
            std::iota(all.begin(), all.end(), 0);
            TrainResult rr = train_masked(working, features, z_t, all,
                                          static_cast<std::int32_t>(k), rt);
            dist = std::move(rr.dist);
            y_a = std::move(rr.auto_labels);
            check_distribution_rows(dist);
            rec.retrained = true;
            ++result.total_retrains;
        }

        if (t >= tally_from)
            for (NodeId i = 0; i < n; ++i)
                ++tally[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) +
                        static_cast<std::size_t>(z_t[static_cast<std::size_t>(i)])];

        z_prev = z_t;
        uncertain_history.push_back(rec.uncertain_count);

        if (trace) {
            rec.alpha = alpha;
            rec.phi_checksum = detail::matrix_checksum(phi);
            if (!trace->truth.empty()) {
                std::vector<NodeId> all(static_cast<std::size_t>(n));
                std::iota(all.begin(), all.end(), 0);
                rec.accuracy_so_far = accuracy(z_t, trace->truth, all);
            }
            if (trace->sink) (*trace->sink) << rec.to_json().dump() << "\n";
            trace->transitions.push_back(std::move(rec));
        }
    }

    // convergence smoke signal: uncertain count nonincreasing over the tail
    const std::size_t tail = std::min<std::size_t>(10, uncertain_history.size());
    for (std::size_t i = uncertain_history.size() - tail + 1; i < uncertain_history.size(); ++i)
        if (uncertain_history[i] > uncertain_history[i - 1]) {
            result.uncertain_nonincreasing_tail = false;
            break;
        }

    result.inferred.resize(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) {
        const std::int32_t* row = tally.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(k);
        std::int32_t best = 0;
        for (Index c = 1; c < k; ++c)
            if (row[c] > row[best]) best = static_cast<std::int32_t>(c);
        result.inferred[static_cast<std::size_t>(i)] = best;
    }
    result.state = TransitionState{std::move(phi), std::move(alpha), cfg.transitions};
    result.dist = std::move(dist);
    return result;
}

}  // namespace tratopo
