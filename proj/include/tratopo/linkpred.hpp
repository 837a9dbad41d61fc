#pragma once

// Link prediction around a seed node: induced subgraph over the candidate
// neighborhood, scored by random walk with restart and PageRank, combined,
// ranked, filtered to the candidate set, truncated to the top k.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "tratopo/errors.hpp"
#include "tratopo/graph.hpp"
#include "tratopo/paths.hpp"

namespace tratopo {

using ScoreMap = std::map<NodeId, double>;

enum class CombineRule : std::uint8_t { sum = 0, product = 1, max = 2 };
enum class ScoreMode : std::uint8_t { rwr_only, pagerank_only, combine };

struct LinkPredConfig {
    double restart_prob = 0.15;     // RWR alpha
    double teleport_prob = 0.15;    // PageRank teleport; continuation = 0.85
    double tolerance = 1e-6;        // L1 stopping threshold
    std::int32_t max_iterations = 100;
    std::int32_t top_k = 10;
    std::int32_t min_degree = 3;    // gate threshold, applied by the caller
    std::int32_t l_max = 3;
    CombineRule combine_rule = CombineRule::sum;

    void validate() const {
        if (restart_prob <= 0.0 || restart_prob >= 1.0)
            throw InvalidArgument("restart_prob must be in (0,1)");
        if (teleport_prob <= 0.0 || teleport_prob >= 1.0)
            throw InvalidArgument("teleport_prob must be in (0,1)");
        if (top_k < 1) throw InvalidArgument("top_k must be at least 1");
        if (tolerance <= 0.0 || max_iterations < 1)
            throw InvalidArgument("bad convergence settings");
    }
};

namespace detail {

struct WalkResult {
    std::vector<double> scores;  // indexed by subgraph-local id, sums to 1
    std::int32_t iterations = 0;
};

/// One push step of mass along degree-normalized transitions:
/// out[v] = sum_{u in Neib(v)} r[u]/deg(u); returns the dangling mass.
inline double push_step(const Graph& g, const std::vector<double>& r, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    double dangling = 0.0;
    for (NodeId u = 0; u < g.node_count(); ++u) {
        const auto nb = g.neighbors(u);
        if (nb.empty()) {
            dangling += r[static_cast<std::size_t>(u)];
            continue;
        }
        const double share = r[static_cast<std::size_t>(u)] / static_cast<double>(nb.size());
        for (NodeId v : nb) out[static_cast<std::size_t>(v)] += share;
    }
    return dangling;
}

}  // namespace detail

/// Probability-form PageRank with uniform teleport; dangling mass is
/// redistributed uniformly. Scores sum to 1.
inline detail::WalkResult pagerank_walk(const Graph& g, const LinkPredConfig& cfg) {
    const auto n = static_cast<std::size_t>(g.node_count());
    if (n == 0) throw InvalidArgument("pagerank: empty graph");
    const double c = cfg.teleport_prob;
    std::vector<double> r(n, 1.0 / static_cast<double>(n)), next(n, 0.0);
    detail::WalkResult out;
    for (std::int32_t it = 1; it <= cfg.max_iterations; ++it) {
        const double dangling = detail::push_step(g, r, next);
        const double base = c / static_cast<double>(n) +
                            (1.0 - c) * dangling / static_cast<double>(n);
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = base + (1.0 - c) * next[i];
            delta += std::abs(v - r[i]);
            r[i] = v;
        }
        out.iterations = it;
        if (delta < cfg.tolerance) break;
    }
    out.scores = std::move(r);
    return out;
}

/// Random walk with restart from `seed_local`; a walker stuck at a dangling
/// node restarts. Scores sum to 1.
inline detail::WalkResult rwr_walk(const Graph& g, NodeId seed_local, const LinkPredConfig& cfg) {
    g.check_node(seed_local);
    const auto n = static_cast<std::size_t>(g.node_count());
    const double a = cfg.restart_prob;
    std::vector<double> r(n, 0.0), next(n, 0.0);
    r[static_cast<std::size_t>(seed_local)] = 1.0;
    detail::WalkResult out;
    for (std::int32_t it = 1; it <= cfg.max_iterations; ++it) {
        const double dangling = detail::push_step(g, r, next);
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = (1.0 - a) * next[i];
            if (static_cast<NodeId>(i) == seed_local) v += a + (1.0 - a) * dangling;
            delta += std::abs(v - r[i]);
            r[i] = v;
        }
        out.iterations = it;
        if (delta < cfg.tolerance) break;
    }
    out.scores = std::move(r);
    return out;
}

namespace detail {

inline ScoreMap to_score_map(const std::vector<double>& scores,
                             const std::vector<NodeId>& to_original) {
    ScoreMap m;
    for (std::size_t i = 0; i < scores.size(); ++i) m.emplace(to_original[i], scores[i]);
    return m;
}

inline void check_score_map(const ScoreMap& m, double tol = 1e-6) {
    double sum = 0.0;
    for (const auto& [node, s] : m) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw NumericError("walk score invalid");
        sum += s;
    }
    if (std::abs(sum - 1.0) > tol)
        throw NumericError("walk scores do not sum to 1 (sum " + std::to_string(sum) + ")");
}

}  // namespace detail

inline ScoreMap pagerank(const Graph& sub, const LinkPredConfig& cfg) {
    std::vector<NodeId> ids(static_cast<std::size_t>(sub.node_count()));
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<NodeId>(i);
    auto m = detail::to_score_map(pagerank_walk(sub, cfg).scores, ids);
    detail::check_score_map(m);
    return m;
}

inline ScoreMap rwr(const Graph& sub, NodeId seed_node, const LinkPredConfig& cfg) {
    std::vector<NodeId> ids(static_cast<std::size_t>(sub.node_count()));
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<NodeId>(i);
    auto m = detail::to_score_map(rwr_walk(sub, seed_node, cfg).scores, ids);
    detail::check_score_map(m);
    return m;
}

/// Elementwise combination of two score maps over the same key set.
inline ScoreMap combine_scores(const ScoreMap& a, const ScoreMap& b,
                               CombineRule rule = CombineRule::sum) {
    if (a.size() != b.size()) throw InvalidArgument("combine_scores: key sets differ");
    ScoreMap out;
    auto ib = b.begin();
    for (auto ia = a.begin(); ia != a.end(); ++ia, ++ib) {
        if (ia->first != ib->first) throw InvalidArgument("combine_scores: key sets differ");
        double v = 0.0;
        switch (rule) {
            case CombineRule::sum: v = ia->second + ib->second; break;
            case CombineRule::product: v = ia->second * ib->second; break;
            case CombineRule::max: v = std::max(ia->second, ib->second); break;
        }
        out.emplace_hint(out.end(), ia->first, v);
    }
    return out;
}

struct LinkPredTrace {
    NodeId seed = 0;
    std::int32_t subgraph_size = 0;
    std::int32_t rwr_iterations = 0;
    std::int32_t pagerank_iterations = 0;
    ScoreMap final_scores;
    std::vector<NodeId> returned;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["seed"] = seed;
        j["subgraph_size"] = subgraph_size;
        j["rwr_iterations"] = rwr_iterations;
        j["pagerank_iterations"] = pagerank_iterations;
        nlohmann::json s = nlohmann::json::object();
        for (const auto& [node, score] : final_scores) s[std::to_string(node)] = score;
        j["scores"] = std::move(s);
        j["returned"] = returned;
        return j;
    }
};

/// Ranked standby-link candidates for `seed_node`. The scoring subgraph is
/// induced over {seed} u N_i u S_i u Neib(seed); existing neighbors take part
/// in scoring but are filtered from the output. Descending score with node id
/// ascending as the tie-break; truncated to cfg.top_k.
inline std::vector<NodeId> predict_links(const Graph& g, NodeId seed_node,
                                         const CandidateSets& candidates,
                                         const LinkPredConfig& cfg,
                                         ScoreMode mode = ScoreMode::combine,
                                         LinkPredTrace* trace = nullptr) {
    cfg.validate();
    g.check_node(seed_node);
    if (candidates.candidates.empty()) return {};

    std::vector<NodeId> scope;
    scope.push_back(seed_node);
    scope.insert(scope.end(), candidates.negative_pool.begin(), candidates.negative_pool.end());
    scope.insert(scope.end(), candidates.candidates.begin(), candidates.candidates.end());
    {
        auto nb = g.neighbors(seed_node);
        scope.insert(scope.end(), nb.begin(), nb.end());
    }
    const SubgraphResult sub = induced_subgraph(g, scope);
    const NodeId seed_local = sub.to_local.at(seed_node);

    ScoreMap scores;
    std::int32_t rwr_iters = 0, pgr_iters = 0;
    if (mode == ScoreMode::rwr_only || mode == ScoreMode::combine) {
        auto w = rwr_walk(sub.graph, seed_local, cfg);
        rwr_iters = w.iterations;
        scores = detail::to_score_map(w.scores, sub.to_original);
        detail::check_score_map(scores);
    }
    if (mode == ScoreMode::pagerank_only || mode == ScoreMode::combine) {
        auto w = pagerank_walk(sub.graph, cfg);
        pgr_iters = w.iterations;
        auto pg = detail::to_score_map(w.scores, sub.to_original);
        detail::check_score_map(pg);
        scores = (mode == ScoreMode::combine) ? combine_scores(scores, pg, cfg.combine_rule)
                                              : std::move(pg);
    }

    std::vector<std::pair<NodeId, double>> ranked(scores.begin(), scores.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });

    std::vector<NodeId> out;
    for (const auto& [node, score] : ranked) {
        if (static_cast<std::int32_t>(out.size()) >= cfg.top_k) break;
        if (!std::binary_search(candidates.candidates.begin(), candidates.candidates.end(), node))
            continue;
        out.push_back(node);
    }
    if (trace) {
        trace->seed = seed_node;
        trace->subgraph_size = sub.graph.node_count();
        trace->rwr_iterations = rwr_iters;
        trace->pagerank_iterations = pgr_iters;
        trace->final_scores = scores;
        trace->returned = out;
    }
    return out;
}

}  // namespace tratopo
