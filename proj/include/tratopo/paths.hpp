#pragma once

// BFS distance shells around a node and the link-prediction candidate set
// built from them: nodes at the two outermost tracked distances plus their
// first-order neighbors, minus the center and its own neighborhood.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "tratopo/errors.hpp"
#include "tratopo/graph.hpp"

namespace tratopo {

struct DistanceShells {
    NodeId center = 0;
    std::int32_t l_max = 3;
    // shells[l-1] = sorted nodes at BFS distance exactly l, l in [1, l_max]
    std::vector<std::vector<NodeId>> shells;

    const std::vector<NodeId>& at(std::int32_t l) const {
        if (l < 1 || l > l_max) throw InvalidArgument("shell distance out of range");
        return shells[static_cast<std::size_t>(l - 1)];
    }
};

inline DistanceShells bfs_shells(const Graph& g, NodeId center, std::int32_t l_max = 3) {
    if (l_max < 2) throw InvalidArgument("bfs_shells: l_max must be at least 2");
    g.check_node(center);
    DistanceShells out;
    out.center = center;
    out.l_max = l_max;
    out.shells.assign(static_cast<std::size_t>(l_max), {});

    std::vector<std::int32_t> dist(static_cast<std::size_t>(g.node_count()), -1);
    dist[static_cast<std::size_t>(center)] = 0;
    std::vector<NodeId> frontier{center};
    for (std::int32_t level = 1; level <= l_max && !frontier.empty(); ++level) {
        std::vector<NodeId> next;
        for (NodeId u : frontier) {
            for (NodeId v : g.neighbors(u)) {
                auto& d = dist[static_cast<std::size_t>(v)];
                if (d < 0) {
                    d = level;
                    next.push_back(v);
                }
            }
        }
        std::sort(next.begin(), next.end());
        out.shells[static_cast<std::size_t>(level - 1)] = next;
        frontier = std::move(next);
    }
    return out;
}

struct CandidateSets {
    NodeId center = 0;
    std::vector<NodeId> negative_pool;  // N_i: distances 2..l_max, sorted
    std::vector<NodeId> candidates;     // S_i: sorted, excludes center and N_1
};

/// S_i = (N_{l_max-1} u N_{l_max}) u their first-order neighbors,
/// minus {center} u N_1. N_i = union of shells 2..l_max.
inline CandidateSets build_candidates(const Graph& g, NodeId center, std::int32_t l_max = 3) {
    const DistanceShells shells = bfs_shells(g, center, l_max);
    CandidateSets out;
    out.center = center;

    for (std::int32_t l = 2; l <= l_max; ++l) {
        const auto& shell = shells.at(l);
        out.negative_pool.insert(out.negative_pool.end(), shell.begin(), shell.end());
    }
    std::sort(out.negative_pool.begin(), out.negative_pool.end());

    std::vector<NodeId> pool;
    for (std::int32_t l = l_max - 1; l <= l_max; ++l) {
        if (l < 1) continue;
        const auto& shell = shells.at(l);
        pool.insert(pool.end(), shell.begin(), shell.end());
        for (NodeId u : shell) {
            auto nb = g.neighbors(u);
            pool.insert(pool.end(), nb.begin(), nb.end());
        }
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    const auto& first_order = shells.at(1);
    out.candidates.reserve(pool.size());
    for (NodeId v : pool) {
        if (v == center) continue;
        if (std::binary_search(first_order.begin(), first_order.end(), v)) continue;
        out.candidates.push_back(v);
    }
    return out;
}

/// Memo for per-node candidate sets, keyed by (graph revision, node, l_max).
/// Safe for concurrent insert-or-get; a revision change means a different
/// topology, so stale entries can never be returned for the current graph.
class CandidateCache {
public:
    std::shared_ptr<const CandidateSets> get_or_build(const Graph& g, NodeId center,
                                                      std::int32_t l_max) {
        const Key key{g.revision(), center, l_max};
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = map_.find(key);
            if (it != map_.end()) return it->second;
        }
        auto built = std::make_shared<const CandidateSets>(build_candidates(g, center, l_max));
        std::lock_guard<std::mutex> lock(mu_);
        auto [it, inserted] = map_.emplace(key, built);
        return it->second;
    }

    void clear() {
        std::lock_guard<std::mutex> lock(mu_);
        map_.clear();
    }

    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return map_.size();
    }

private:
    struct Key {
        std::uint64_t revision;
        NodeId node;
        std::int32_t l_max;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::uint64_t h = k.revision * 0x9e3779b97f4a7c15ULL;
            h ^= static_cast<std::uint64_t>(k.node) + 0xd1b54a32d192ed03ULL * (h >> 32);
            h ^= static_cast<std::uint64_t>(k.l_max) << 17;
            return static_cast<std::size_t>(h ^ (h >> 29));
        }
    };
    mutable std::mutex mu_;
    std::unordered_map<Key, std::shared_ptr<const CandidateSets>, KeyHash> map_;
};

/// Debug dump used by golden tests.
inline nlohmann::json candidates_to_json(const Graph& g, NodeId center, std::int32_t l_max) {
    const DistanceShells shells = bfs_shells(g, center, l_max);
    const CandidateSets cand = build_candidates(g, center, l_max);
    nlohmann::json j;
    j["center"] = center;
    j["l_max"] = l_max;
    nlohmann::json sh = nlohmann::json::array();
    for (std::int32_t l = 1; l <= l_max; ++l) sh.push_back(shells.at(l));
    j["shells"] = std::move(sh);
    j["negative_pool"] = cand.negative_pool;
    j["candidates"] = cand.candidates;
    return j;
}

}  // namespace tratopo
