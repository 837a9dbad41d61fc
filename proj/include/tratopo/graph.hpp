#pragma once

// Undirected attributed-graph core: sorted neighbor lists, symmetric by
// construction, immutable after build (mutating operations return copies).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tratopo/errors.hpp"

namespace tratopo {

using NodeId = std::int32_t;

struct Edge {
    NodeId u;
    NodeId v;
    bool operator==(const Edge&) const = default;
    bool operator<(const Edge& o) const { return u != o.u ? u < o.u : v < o.v; }
};

/// u < v canonical form for an undirected edge.
inline Edge canonical(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

namespace detail {
inline std::uint64_t next_graph_revision() {
    static std::atomic<std::uint64_t> counter{1};
    return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

class Graph {
public:
    Graph() = default;

    /// Build from an undirected edge list. Self-loops and duplicates are
    /// dropped (not an error: raw inputs contain both); counts are kept so
    /// loaders can report them.
    static Graph from_edges(NodeId node_count, std::span<const Edge> edges) {
        Graph g;
        g.adj_.resize(static_cast<std::size_t>(node_count));
        for (const Edge& e : edges) {
            if (e.u < 0 || e.u >= node_count || e.v < 0 || e.v >= node_count)
                throw InvalidArgument("edge endpoint out of range");
            if (e.u == e.v) {
                ++g.dropped_self_loops_;
                continue;
            }
            g.adj_[static_cast<std::size_t>(e.u)].push_back(e.v);
            g.adj_[static_cast<std::size_t>(e.v)].push_back(e.u);
        }
        for (auto& nb : g.adj_) {
            std::sort(nb.begin(), nb.end());
            const auto last = std::unique(nb.begin(), nb.end());
            g.dropped_duplicates_ += static_cast<std::int64_t>(nb.end() - last);
            nb.erase(last, nb.end());
        }
        g.dropped_duplicates_ /= 2;  // each duplicate undirected edge was counted at both ends
        std::int64_t deg_sum = 0;
        for (const auto& nb : g.adj_) deg_sum += static_cast<std::int64_t>(nb.size());
        g.edge_count_ = deg_sum / 2;
        g.revision_ = detail::next_graph_revision();
        return g;
    }

    NodeId node_count() const noexcept { return static_cast<NodeId>(adj_.size()); }
    std::int64_t edge_count() const noexcept { return edge_count_; }
    std::uint64_t revision() const noexcept { return revision_; }

    std::int64_t dropped_self_loops() const noexcept { return dropped_self_loops_; }
    std::int64_t dropped_duplicates() const noexcept { return dropped_duplicates_; }

    std::span<const NodeId> neighbors(NodeId v) const {
        check_node(v);
        return adj_[static_cast<std::size_t>(v)];
    }

    NodeId degree(NodeId v) const {
        check_node(v);
        return static_cast<NodeId>(adj_[static_cast<std::size_t>(v)].size());
    }

    bool has_edge(NodeId u, NodeId v) const {
        check_node(u);
        check_node(v);
        const auto& nb = adj_[static_cast<std::size_t>(u)];
        return std::binary_search(nb.begin(), nb.end(), v);
    }

    /// All undirected edges in canonical (u < v), lexicographic order.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(static_cast<std::size_t>(edge_count_));
        for (NodeId u = 0; u < node_count(); ++u)
            for (NodeId v : adj_[static_cast<std::size_t>(u)])
                if (u < v) out.push_back({u, v});
        return out;
    }

    /// Symmetric insert; existing edges are a no-op. Returns a new graph.
    Graph with_edges_added(std::span<const Edge> add) const {
        Graph g = *this;
        for (const Edge& e : add) {
            g.check_node(e.u);
            g.check_node(e.v);
            if (e.u == e.v) throw InvalidArgument("self-loop insertion");
            auto& nu = g.adj_[static_cast<std::size_t>(e.u)];
            auto it = std::lower_bound(nu.begin(), nu.end(), e.v);
            if (it != nu.end() && *it == e.v) continue;
            nu.insert(it, e.v);
            auto& nv = g.adj_[static_cast<std::size_t>(e.v)];
            nv.insert(std::lower_bound(nv.begin(), nv.end(), e.u), e.u);
            ++g.edge_count_;
        }
        g.revision_ = detail::next_graph_revision();
        return g;
    }

    /// Symmetric removal; absent edges are a no-op. Returns a new graph.
    Graph with_edges_removed(std::span<const Edge> remove) const {
        Graph g = *this;
        for (const Edge& e : remove) {
            g.check_node(e.u);
            g.check_node(e.v);
            if (e.u == e.v) throw InvalidArgument("self-loop removal");
            auto& nu = g.adj_[static_cast<std::size_t>(e.u)];
            auto it = std::lower_bound(nu.begin(), nu.end(), e.v);
            if (it == nu.end() || *it != e.v) continue;
            nu.erase(it);
            auto& nv = g.adj_[static_cast<std::size_t>(e.v)];
            nv.erase(std::lower_bound(nv.begin(), nv.end(), e.u));
            --g.edge_count_;
        }
        g.revision_ = detail::next_graph_revision();
        return g;
    }

    bool same_topology(const Graph& o) const { return adj_ == o.adj_; }

    void check_node(NodeId v) const {
        if (v < 0 || v >= node_count()) throw InvalidArgument("node id out of range");
    }

private:
    std::vector<std::vector<NodeId>> adj_;
    std::int64_t edge_count_ = 0;
    std::uint64_t revision_ = 0;
    std::int64_t dropped_self_loops_ = 0;
    std::int64_t dropped_duplicates_ = 0;
};

struct SubgraphResult {
    Graph graph;
    std::vector<NodeId> to_original;                 // local id -> original id, ascending
    std::unordered_map<NodeId, NodeId> to_local;     // original id -> local id
};

/// Subgraph induced by `nodes` (deduplicated, sorted). Keeps exactly the
/// edges with both endpoints inside, with a bidirectional index map.
inline SubgraphResult induced_subgraph(const Graph& g, std::span<const NodeId> nodes) {
    if (nodes.empty()) throw InvalidArgument("induced_subgraph: empty node set");
    SubgraphResult r;
    r.to_original.assign(nodes.begin(), nodes.end());
    std::sort(r.to_original.begin(), r.to_original.end());
    r.to_original.erase(std::unique(r.to_original.begin(), r.to_original.end()),
                        r.to_original.end());
    r.to_local.reserve(r.to_original.size());
    for (std::size_t i = 0; i < r.to_original.size(); ++i) {
        g.check_node(r.to_original[i]);
        r.to_local.emplace(r.to_original[i], static_cast<NodeId>(i));
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < r.to_original.size(); ++i) {
        const NodeId u = r.to_original[i];
        for (NodeId v : g.neighbors(u)) {
            if (u < v) {
                auto it = r.to_local.find(v);
                if (it != r.to_local.end())
                    edges.push_back({static_cast<NodeId>(i), it->second});
            }
        }
    }
    r.graph = Graph::from_edges(static_cast<NodeId>(r.to_original.size()), edges);
    return r;
}

/// Fraction of undirected edges whose endpoints share a label.
inline double edge_homophily_ratio(const Graph& g, std::span<const std::int32_t> labels) {
    if (static_cast<NodeId>(labels.size()) != g.node_count())
        throw InvalidArgument("edge_homophily_ratio: label vector length mismatch");
    if (g.edge_count() == 0)
        throw InvalidArgument("edge_homophily_ratio: undefined on edgeless graph");
    std::int64_t same = 0;
    for (NodeId u = 0; u < g.node_count(); ++u)
        for (NodeId v : g.neighbors(u))
            if (u < v && labels[static_cast<std::size_t>(u)] == labels[static_cast<std::size_t>(v)])
                ++same;
    return static_cast<double>(same) / static_cast<double>(g.edge_count());
}

}  // namespace tratopo
