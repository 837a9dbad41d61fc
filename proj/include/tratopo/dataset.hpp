#pragma once

// Dataset ingestion: tab-separated citation files (.content/.cites), generic
// CSV triples, canonical JSON snapshots, and a seeded synthetic citation
// benchmark for environments without the real files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "tratopo/errors.hpp"
#include "tratopo/graph.hpp"
#include "tratopo/labels.hpp"
#include "tratopo/matrix.hpp"
#include "tratopo/rng.hpp"

namespace tratopo {

using FeatureMatrix = CsrMatrix;

struct DatasetBundle {
    Graph graph;
    FeatureMatrix features;
    NodeLabelStore labels;
    std::vector<std::string> original_ids;  // dense id -> id string from the source file
    std::vector<std::string> class_names;   // class index -> label string, first-seen order
};

struct LoadReport {
    NodeId nodes = 0;
    std::int64_t undirected_edges = 0;
    Index feature_dim = 0;
    std::int32_t classes = 0;
    std::int64_t dropped_unknown_edges = 0;
    std::int64_t dropped_self_loops = 0;
    std::int64_t dropped_duplicate_edges = 0;
};

struct LoadedDataset {
    DatasetBundle bundle;
    LoadReport report;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ParseError("trailing characters in numeric field", line);
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError("expected a numeric field, got '" + s + "'", line);
    }
}

inline std::ifstream open_or_throw(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw InvalidArgument("cannot open file: " + p.string());
    return f;
}

}  // namespace detail

/// Cora-style loader. Content rows: `id <tab> f_1 ... f_d <tab> label`;
/// cites rows: `cited <tab> citing`. Node ids are densified in first-seen
/// content order, class indices in first-seen label order. Edges that
/// reference unknown ids are dropped and counted.
inline LoadedDataset load_citation_dataset(const std::filesystem::path& content_path,
                                           const std::filesystem::path& cites_path) {
    LoadedDataset out;
    auto& b = out.bundle;

    std::unordered_map<std::string, NodeId> id_of;
    std::unordered_map<std::string, std::int32_t> class_of;
    std::vector<Triplet> feats;
    Index feature_dim = -1;

    {
        std::ifstream f = detail::open_or_throw(content_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            auto fields = detail::split_fields(line, '\t');
            if (fields.size() < 3)
                throw ParseError("content row needs id, features, label", lineno);
            const Index width = static_cast<Index>(fields.size()) - 2;
            if (feature_dim < 0)
                feature_dim = width;
            else if (width != feature_dim)
                throw SchemaError("inconsistent feature width at line " + std::to_string(lineno) +
                                  ": expected " + std::to_string(feature_dim) + ", got " +
                                  std::to_string(width));
            if (id_of.count(fields.front()))
                throw SchemaError("duplicate node id '" + fields.front() + "' at line " +
                                  std::to_string(lineno));
            const auto node = static_cast<NodeId>(b.original_ids.size());
            id_of.emplace(fields.front(), node);
            b.original_ids.push_back(fields.front());
            for (Index j = 0; j < feature_dim; ++j) {
                const double v = detail::parse_double(fields[static_cast<std::size_t>(j) + 1], lineno);
                if (v != 0.0) feats.push_back({node, j, v});
            }
            const std::string& cls = fields.back();
            auto [it, inserted] = class_of.emplace(
                cls, static_cast<std::int32_t>(b.class_names.size()));
            if (inserted) b.class_names.push_back(cls);
            b.labels.true_labels.push_back(it->second);
        }
    }
    const auto n = static_cast<NodeId>(b.original_ids.size());
    if (n == 0) throw SchemaError("content file has no rows");

    std::vector<Edge> edges;
    {
        std::ifstream f = detail::open_or_throw(cites_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            auto fields = detail::split_fields(line, '\t');
            if (fields.size() != 2) throw ParseError("cites row needs exactly two ids", lineno);
            auto a = id_of.find(fields[0]);
            auto c = id_of.find(fields[1]);
            if (a == id_of.end() || c == id_of.end()) {
                ++out.report.dropped_unknown_edges;
                continue;
            }
            edges.push_back({a->second, c->second});
        }
    }

    b.graph = Graph::from_edges(n, edges);
    b.features = CsrMatrix::from_triplets(n, feature_dim, std::move(feats));
    b.labels.class_count = static_cast<std::int32_t>(b.class_names.size());
    b.labels.manual_labels = b.labels.true_labels;
    b.labels.validate();

    out.report.nodes = n;
    out.report.undirected_edges = b.graph.edge_count();
    out.report.feature_dim = feature_dim;
    out.report.classes = b.labels.class_count;
    out.report.dropped_self_loops = b.graph.dropped_self_loops();
    out.report.dropped_duplicate_edges = b.graph.dropped_duplicates();
    return out;
}

/// Generic loader: edge CSV (`src,dst`, 0-based row indices), feature CSV
/// (one row of reals per node), label CSV (one label string per row).
inline LoadedDataset load_generic_dataset(const std::filesystem::path& edges_csv,
                                          const std::filesystem::path& features_csv,
                                          const std::filesystem::path& labels_csv) {
    LoadedDataset out;
    auto& b = out.bundle;

    std::vector<Triplet> feats;
    Index feature_dim = -1;
    NodeId n = 0;
    {
        std::ifstream f = detail::open_or_throw(features_csv);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            auto fields = detail::split_fields(line, ',');
            const auto width = static_cast<Index>(fields.size());
            if (feature_dim < 0)
                feature_dim = width;
            else if (width != feature_dim)
                throw SchemaError("inconsistent feature width at line " + std::to_string(lineno));
            for (Index j = 0; j < feature_dim; ++j) {
                const double v = detail::parse_double(fields[static_cast<std::size_t>(j)], lineno);
                if (v != 0.0) feats.push_back({n, j, v});
            }
            b.original_ids.push_back(std::to_string(n));
            ++n;
        }
    }
    if (n == 0) throw SchemaError("feature file has no rows");

    {
        std::ifstream f = detail::open_or_throw(labels_csv);
        std::string line;
        std::size_t lineno = 0;
        std::unordered_map<std::string, std::int32_t> class_of;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            auto fields = detail::split_fields(line, ',');
            if (fields.size() != 1) throw ParseError("label row needs exactly one value", lineno);
            auto [it, inserted] = class_of.emplace(
                fields[0], static_cast<std::int32_t>(b.class_names.size()));
            if (inserted) b.class_names.push_back(fields[0]);
            b.labels.true_labels.push_back(it->second);
        }
        if (static_cast<NodeId>(b.labels.true_labels.size()) != n)
            throw SchemaError("label row count does not match feature row count");
    }

    std::vector<Edge> edges;
    {
        std::ifstream f = detail::open_or_throw(edges_csv);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty() || line == "\r") continue;
            auto fields = detail::split_fields(line, ',');
            if (fields.size() != 2) throw ParseError("edge row needs exactly two ids", lineno);
            long u, v;
            try {
                u = std::stol(fields[0]);
                v = std::stol(fields[1]);
            } catch (const std::exception&) {
                throw ParseError("edge endpoints must be integers", lineno);
            }
            if (u < 0 || u >= n || v < 0 || v >= n) {
                ++out.report.dropped_unknown_edges;
                continue;
            }
            edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
        }
    }

    b.graph = Graph::from_edges(n, edges);
    b.features = CsrMatrix::from_triplets(n, feature_dim, std::move(feats));
    b.labels.class_count = static_cast<std::int32_t>(b.class_names.size());
    b.labels.manual_labels = b.labels.true_labels;
    b.labels.validate();

    out.report.nodes = n;
    out.report.undirected_edges = b.graph.edge_count();
    out.report.feature_dim = feature_dim;
    out.report.classes = b.labels.class_count;
    out.report.dropped_self_loops = b.graph.dropped_self_loops();
    out.report.dropped_duplicate_edges = b.graph.dropped_duplicates();
    return out;
}

// ---------------------------------------------------------------------------
// Canonical JSON snapshots
// ---------------------------------------------------------------------------

inline nlohmann::json graph_to_json(const Graph& g) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["node_count"] = g.node_count();
    j["edge_count"] = g.edge_count();
    auto& nb = j["neighbors"] = nlohmann::json::array();
    for (NodeId u = 0; u < g.node_count(); ++u) {
        auto span = g.neighbors(u);
        nb.push_back(std::vector<NodeId>(span.begin(), span.end()));
    }
    return j;
}

inline Graph graph_from_json(const nlohmann::json& j) {
    const auto n = j.at("node_count").get<NodeId>();
    std::vector<Edge> edges;
    const auto& nb = j.at("neighbors");
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v : nb.at(static_cast<std::size_t>(u)))
            if (u < v) edges.push_back({u, v});
    return Graph::from_edges(n, edges);
}

/// Canonical text form used by golden-file tests: keys sorted, 2-space
/// indent, trailing newline. Same graph -> byte-identical string.
inline std::string graph_snapshot(const Graph& g) { return graph_to_json(g).dump(2) + "\n"; }

inline nlohmann::json bundle_to_json(const DatasetBundle& b) {
    nlohmann::json j;
    j["graph"] = graph_to_json(b.graph);
    nlohmann::json f;
    f["rows"] = b.features.rows();
    f["cols"] = b.features.cols();
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < b.features.rows(); ++i) {
        auto idx = b.features.row_indices(i);
        auto val = b.features.row_values(i);
        nlohmann::json r;
        r["i"] = std::vector<Index>(idx.begin(), idx.end());
        r["v"] = std::vector<double>(val.begin(), val.end());
        rows.push_back(std::move(r));
    }
    f["data"] = std::move(rows);
    j["features"] = std::move(f);
    j["labels"] = {{"class_count", b.labels.class_count},
                   {"true", b.labels.true_labels},
                   {"manual", b.labels.manual_labels}};
    if (!b.labels.auto_labels.empty()) j["labels"]["auto"] = b.labels.auto_labels;
    if (!b.labels.inferred_labels.empty()) j["labels"]["inferred"] = b.labels.inferred_labels;
    j["original_ids"] = b.original_ids;
    j["class_names"] = b.class_names;
    return j;
}

inline DatasetBundle bundle_from_json(const nlohmann::json& j) {
    DatasetBundle b;
    b.graph = graph_from_json(j.at("graph"));
    const auto& f = j.at("features");
    std::vector<Triplet> trips;
    const auto rows = f.at("rows").get<Index>();
    for (Index i = 0; i < rows; ++i) {
        const auto& r = f.at("data").at(static_cast<std::size_t>(i));
        const auto idx = r.at("i").get<std::vector<Index>>();
        const auto val = r.at("v").get<std::vector<double>>();
        for (std::size_t k = 0; k < idx.size(); ++k) trips.push_back({i, idx[k], val[k]});
    }
    b.features = CsrMatrix::from_triplets(rows, f.at("cols").get<Index>(), std::move(trips));
    const auto& l = j.at("labels");
    b.labels.class_count = l.at("class_count").get<std::int32_t>();
    b.labels.true_labels = l.at("true").get<LabelVec>();
    b.labels.manual_labels = l.at("manual").get<LabelVec>();
    if (l.contains("auto")) b.labels.auto_labels = l.at("auto").get<LabelVec>();
    if (l.contains("inferred")) b.labels.inferred_labels = l.at("inferred").get<LabelVec>();
    b.original_ids = j.at("original_ids").get<std::vector<std::string>>();
    b.class_names = j.at("class_names").get<std::vector<std::string>>();
    b.labels.validate();
    return b;
}

inline void save_bundle(const DatasetBundle& b, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw InvalidArgument("cannot write file: " + path.string());
    f << bundle_to_json(b).dump(2) << "\n";
}

inline DatasetBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream f = detail::open_or_throw(path);
    nlohmann::json j;
    f >> j;
    return bundle_from_json(j);
}

// ---------------------------------------------------------------------------
// Synthetic citation benchmark
// ---------------------------------------------------------------------------

/// Planted-partition citation graph with class-conditional bag-of-words
/// features. Presets mirror the published size/sparsity/homophily statistics
/// of the standard citation benchmarks so desk-scale experiments behave
/// comparably when the real files are not on disk.
struct SyntheticSpec {
    NodeId nodes = 2708;
    std::int32_t classes = 7;
    Index feature_dim = 1433;
    std::int64_t undirected_edges = 5278;
    double homophily = 0.81;       // fraction of same-class edges
    double topic_affinity = 0.62;  // P(feature drawn from own-class vocabulary)
    std::int32_t min_words = 12;
    std::int32_t max_words = 26;
    std::vector<std::int64_t> class_sizes;  // optional; near-even when empty
    std::uint64_t seed = 1;

    static SyntheticSpec cora_like() {
        SyntheticSpec s;
        s.class_sizes = {818, 426, 418, 351, 298, 217, 180};
        return s;
    }

    static SyntheticSpec citeseer_like() {
        SyntheticSpec s;
        s.nodes = 3327;
        s.classes = 6;
        s.feature_dim = 3703;
        s.undirected_edges = 4614;
        s.homophily = 0.7355;
        return s;
    }
};

inline DatasetBundle synthetic_citation(const SyntheticSpec& spec) {
    if (spec.classes < 2) throw InvalidArgument("synthetic_citation: need at least 2 classes");
    Rng rng = Rng::substream(spec.seed, "synthetic");
    DatasetBundle b;
    const NodeId n = spec.nodes;
    const std::int32_t k = spec.classes;

    std::vector<std::int64_t> sizes = spec.class_sizes;
    if (sizes.empty()) {
        sizes.assign(static_cast<std::size_t>(k), n / k);
        for (NodeId i = 0; i < n % k; ++i) ++sizes[static_cast<std::size_t>(i)];
    }
    if (std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0}) != n)
        throw InvalidArgument("synthetic_citation: class sizes must sum to node count");

    b.labels.class_count = k;
    b.labels.true_labels.reserve(static_cast<std::size_t>(n));
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(k));
    {
        std::vector<std::int32_t> pool;
        pool.reserve(static_cast<std::size_t>(n));
        for (std::int32_t c = 0; c < k; ++c)
            pool.insert(pool.end(), static_cast<std::size_t>(sizes[static_cast<std::size_t>(c)]), c);
        rng.shuffle(pool);
        for (NodeId i = 0; i < n; ++i) {
            b.labels.true_labels.push_back(pool[static_cast<std::size_t>(i)]);
            members[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])].push_back(i);
        }
    }
    b.labels.manual_labels = b.labels.true_labels;

    // edges: Bernoulli mix of within-class and cross-class uniform pairs;
    // retries stay inside the chosen branch so the same-class fraction
    // matches spec.homophily in expectation
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(spec.undirected_edges));
    std::unordered_map<std::int64_t, bool> present;
    auto key = [n](NodeId a, NodeId c) {
        const Edge e = canonical(a, c);
        return static_cast<std::int64_t>(e.u) * n + e.v;
    };
    for (std::int64_t made = 0; made < spec.undirected_edges; ++made) {
        const bool same_class = rng.next_double() < spec.homophily;
        for (;;) {
            NodeId u, v;
            if (same_class) {
                const auto c = static_cast<std::size_t>(
                    b.labels.true_labels[static_cast<std::size_t>(rng.uniform_int(
                        static_cast<std::uint64_t>(n)))]);
                const auto& m = members[c];
                if (m.size() < 2) continue;
                u = m[rng.uniform_int(m.size())];
                v = m[rng.uniform_int(m.size())];
            } else {
                u = static_cast<NodeId>(rng.uniform_int(static_cast<std::uint64_t>(n)));
                v = static_cast<NodeId>(rng.uniform_int(static_cast<std::uint64_t>(n)));
                if (b.labels.true_labels[static_cast<std::size_t>(u)] ==
                    b.labels.true_labels[static_cast<std::size_t>(v)])
                    continue;
            }
            if (u == v) continue;
            if (!present.emplace(key(u, v), true).second) continue;
            edges.push_back(canonical(u, v));
            break;
        }
    }
    b.graph = Graph::from_edges(n, edges);

    // features: per-class vocabulary blocks plus uniform background draws
    const Index block = spec.feature_dim / (k + 1);
    std::vector<Triplet> feats;
    for (NodeId i = 0; i < n; ++i) {
        const auto c = b.labels.true_labels[static_cast<std::size_t>(i)];
        const auto words = static_cast<std::int32_t>(
            spec.min_words +
            rng.uniform_int(static_cast<std::uint64_t>(spec.max_words - spec.min_words + 1)));
        std::vector<bool> used(static_cast<std::size_t>(spec.feature_dim), false);
        std::int32_t placed = 0;
        while (placed < words) {
            Index f;
            if (rng.next_double() < spec.topic_affinity)
                f = static_cast<Index>(c) * block +
                    static_cast<Index>(rng.uniform_int(static_cast<std::uint64_t>(block)));
            else
                f = static_cast<Index>(
                    rng.uniform_int(static_cast<std::uint64_t>(spec.feature_dim)));
            if (used[static_cast<std::size_t>(f)]) continue;
            used[static_cast<std::size_t>(f)] = true;
            feats.push_back({i, f, 1.0});
            ++placed;
        }
    }
    // from_triplets keeps insertion order per row; sort columns within rows
    std::sort(feats.begin(), feats.end(), [](const Triplet& a, const Triplet& z) {
        return a.row != z.row ? a.row < z.row : a.col < z.col;
    });
    b.features = CsrMatrix::from_triplets(n, spec.feature_dim, std::move(feats));

    b.original_ids.reserve(static_cast<std::size_t>(n));
    for (NodeId i = 0; i < n; ++i) b.original_ids.push_back("syn" + std::to_string(100000 + i));
    for (std::int32_t c = 0; c < k; ++c) b.class_names.push_back("class_" + std::to_string(c));
    b.labels.validate();
    return b;
}

/// Write a bundle in .content/.cites text form (round-trips through
/// load_citation_dataset). Rows are emitted in a seeded shuffled order so
/// loading exercises the id-densification path.
inline void write_citation_files(const DatasetBundle& b, const std::filesystem::path& content_path,
                                 const std::filesystem::path& cites_path,
                                 std::uint64_t shuffle_seed = 0) {
    std::vector<NodeId> order(static_cast<std::size_t>(b.graph.node_count()));
    std::iota(order.begin(), order.end(), 0);
    if (shuffle_seed) {
        Rng rng = Rng::substream(shuffle_seed, "write-citation");
        rng.shuffle(order);
    }
    {
        std::ofstream f(content_path);
        if (!f) throw InvalidArgument("cannot write file: " + content_path.string());
        std::vector<double> dense(static_cast<std::size_t>(b.features.cols()));
        for (NodeId i : order) {
            std::fill(dense.begin(), dense.end(), 0.0);
            auto idx = b.features.row_indices(i);
            auto val = b.features.row_values(i);
            for (std::size_t p = 0; p < idx.size(); ++p)
                dense[static_cast<std::size_t>(idx[p])] = val[p];
            f << b.original_ids[static_cast<std::size_t>(i)];
            for (double x : dense) {
                if (x == static_cast<double>(static_cast<long long>(x)))
                    f << '\t' << static_cast<long long>(x);
                else
                    f << '\t' << x;
            }
            f << '\t'
              << b.class_names[static_cast<std::size_t>(
                     b.labels.true_labels[static_cast<std::size_t>(i)])]
              << '\n';
        }
    }
    {
        std::ofstream f(cites_path);
        if (!f) throw InvalidArgument("cannot write file: " + cites_path.string());
        for (const Edge& e : b.graph.edges())
            f << b.original_ids[static_cast<std::size_t>(e.u)] << '\t'
              << b.original_ids[static_cast<std::size_t>(e.v)] << '\n';
    }
}

}  // namespace tratopo
