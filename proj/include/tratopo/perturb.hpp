#pragma once

// Topological perturbation scenarios applied to the test graph: random edge
// insertion, random sparsification, and targeted heterophilous injection.
// Every result carries a replayable manifest and the impacted node set used
// as the metric population.

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include <json.hpp>

#include "tratopo/errors.hpp"
#include "tratopo/graph.hpp"
#include "tratopo/labels.hpp"
#include "tratopo/rng.hpp"

namespace tratopo {

struct PerturbationResult {
    Graph graph;
    std::vector<Edge> added_edges;    // canonical, sorted
    std::vector<Edge> removed_edges;  // canonical, sorted
    std::vector<NodeId> impacted_nodes;  // sorted unique
};

namespace detail {

inline std::vector<NodeId> endpoints_of(const std::vector<Edge>& a, const std::vector<Edge>& b,
                                        const std::vector<NodeId>& extra = {}) {
    std::vector<NodeId> out = extra;
    for (const Edge& e : a) {
        out.push_back(e.u);
        out.push_back(e.v);
    }
    for (const Edge& e : b) {
        out.push_back(e.u);
        out.push_back(e.v);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace detail

/// Inserts floor(rate * E) uniformly random non-existing edges.
inline PerturbationResult random_perturbation(const Graph& g, double rate, std::uint64_t seed) {
    if (rate <= 0.0) throw InvalidArgument("random_perturbation: rate must be positive");
    const auto n = static_cast<std::int64_t>(g.node_count());
    const auto budget = static_cast<std::int64_t>(rate * static_cast<double>(g.edge_count()));
    const std::int64_t capacity = n * (n - 1) / 2 - g.edge_count();
    if (budget > 0 && capacity == 0)
        throw InvalidArgument("random_perturbation: graph is complete");
    if (budget > capacity)
        throw InvalidArgument("random_perturbation: not enough absent edges for requested rate");

    Rng rng = Rng::substream(seed, "perturb-random");
    std::set<Edge> chosen;
    while (static_cast<std::int64_t>(chosen.size()) < budget) {
        const auto u = static_cast<NodeId>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        const auto v = static_cast<NodeId>(rng.uniform_int(static_cast<std::uint64_t>(n)));
        if (u == v) continue;
        const Edge e = canonical(u, v);
        if (g.has_edge(e.u, e.v)) continue;
        chosen.insert(e);
    }
    PerturbationResult r;
    r.added_edges.assign(chosen.begin(), chosen.end());
    r.graph = g.with_edges_added(r.added_edges);
    r.impacted_nodes = detail::endpoints_of(r.added_edges, {});
    return r;
}

/// Removes floor(drop_rate * E) uniformly random existing edges. May isolate
/// nodes; that sparse regime is exactly what link prediction is for.
inline PerturbationResult sparsify(const Graph& g, double drop_rate, std::uint64_t seed) {
    if (drop_rate < 0.0 || drop_rate > 1.0)
        throw InvalidArgument("sparsify: drop_rate must be in [0,1]");
    const auto budget =
        static_cast<std::int64_t>(drop_rate * static_cast<double>(g.edge_count()));
    std::vector<Edge> all = g.edges();
    Rng rng = Rng::substream(seed, "perturb-sparsify");
    PerturbationResult r;
    for (std::int64_t i : rng.sample_without_replacement(
             static_cast<std::int64_t>(all.size()), budget))
        r.removed_edges.push_back(all[static_cast<std::size_t>(i)]);
    std::sort(r.removed_edges.begin(), r.removed_edges.end());
    r.graph = g.with_edges_removed(r.removed_edges);
    r.impacted_nodes = detail::endpoints_of({}, r.removed_edges);
    return r;
}

/// Adversarial scenario: for each target, inject `budget_per_target` edges to
/// seeded-random nodes whose true label differs (heterophilous injection).
/// Impacted set is the target set itself.
inline PerturbationResult targeted_attack(const Graph& g, const NodeLabelStore& labels,
                                          std::span<const NodeId> targets,
                                          std::int32_t budget_per_target, std::uint64_t seed) {
    if (budget_per_target < 0) throw InvalidArgument("targeted_attack: negative budget");
    const auto n = static_cast<std::int64_t>(g.node_count());
    Rng rng = Rng::substream(seed, "perturb-attack");

    std::vector<NodeId> sorted_targets(targets.begin(), targets.end());
    std::sort(sorted_targets.begin(), sorted_targets.end());
    sorted_targets.erase(std::unique(sorted_targets.begin(), sorted_targets.end()),
                         sorted_targets.end());

    std::set<Edge> chosen;
    for (NodeId t : sorted_targets) {
        g.check_node(t);
        const std::int32_t own = labels.true_labels[static_cast<std::size_t>(t)];
        // feasibility: count heterophilous non-neighbors
        std::int64_t pool = 0;
        for (NodeId v = 0; v < n; ++v)
            if (v != t && labels.true_labels[static_cast<std::size_t>(v)] != own &&
                !g.has_edge(t, v) && !chosen.count(canonical(t, v)))
                ++pool;
        if (pool < budget_per_target)
            throw InvalidArgument("targeted_attack: no differently-labeled partner available "
                                  "for node " + std::to_string(t));
        std::int32_t placed = 0;
        while (placed < budget_per_target) {
            const auto v = static_cast<NodeId>(rng.uniform_int(static_cast<std::uint64_t>(n)));
            if (v == t || labels.true_labels[static_cast<std::size_t>(v)] == own) continue;
            if (g.has_edge(t, v)) continue;
            const Edge e = canonical(t, v);
            if (!chosen.insert(e).second) continue;
            ++placed;
        }
    }
    PerturbationResult r;
    r.added_edges.assign(chosen.begin(), chosen.end());
    r.graph = g.with_edges_added(r.added_edges);
    r.impacted_nodes = sorted_targets;
    return r;
}

// ---------------------------------------------------------------------------
// Replayable manifest
// ---------------------------------------------------------------------------

inline nlohmann::json perturbation_manifest(const std::string& scenario, std::uint64_t seed,
                                            const nlohmann::json& params,
                                            const PerturbationResult& r) {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["params"] = params;
    auto edge_array = [](const std::vector<Edge>& es) {
        nlohmann::json a = nlohmann::json::array();
        for (const Edge& e : es) a.push_back({e.u, e.v});
        return a;
    };
    j["added"] = edge_array(r.added_edges);
    j["removed"] = edge_array(r.removed_edges);
    j["impacted"] = r.impacted_nodes;
    return j;
}

/// Re-applies a manifest to the original graph, bit-exactly.
inline PerturbationResult apply_manifest(const Graph& g, const nlohmann::json& manifest) {
    PerturbationResult r;
    for (const auto& e : manifest.at("added"))
        r.added_edges.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
    for (const auto& e : manifest.at("removed"))
        r.removed_edges.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
    r.impacted_nodes = manifest.at("impacted").get<std::vector<NodeId>>();
    r.graph = g.with_edges_added(r.added_edges).with_edges_removed(r.removed_edges);
    return r;
}

}  // namespace tratopo
