#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "tratopo/errors.hpp"
#include "tratopo/graph.hpp"
#include "tratopo/rng.hpp"

namespace tratopo {

using LabelVec = std::vector<std::int32_t>;

/// Parallel label vectors. `true_labels` and `manual_labels` are always
/// present after loading/noising; `auto_labels` appears once a classifier
/// has run, `inferred_labels` once inference has.
struct NodeLabelStore {
    std::int32_t class_count = 0;
    LabelVec true_labels;      // Z
    LabelVec manual_labels;    // Y_m
    LabelVec auto_labels;      // Y_a (empty until classifier runs)
    LabelVec inferred_labels;  // Z-bar (empty until inference runs)

    std::size_t size() const noexcept { return true_labels.size(); }

    void validate() const {
        auto check = [&](const LabelVec& v, const char* name) {
            if (v.empty()) return;
            if (v.size() != true_labels.size())
                throw SchemaError(std::string(name) + ": length mismatch");
            for (std::int32_t y : v)
                if (y < 0 || y >= class_count)
                    throw SchemaError(std::string(name) + ": label out of range");
        };
        check(true_labels, "true_labels");
        check(manual_labels, "manual_labels");
        check(auto_labels, "auto_labels");
        check(inferred_labels, "inferred_labels");
    }

    NodeLabelStore subset(std::span<const NodeId> nodes) const {
        NodeLabelStore out;
        out.class_count = class_count;
        auto pick = [&](const LabelVec& src, LabelVec& dst) {
            if (src.empty()) return;
            dst.reserve(nodes.size());
            for (NodeId n : nodes) dst.push_back(src[static_cast<std::size_t>(n)]);
        };
        pick(true_labels, out.true_labels);
        pick(manual_labels, out.manual_labels);
        pick(auto_labels, out.auto_labels);
        pick(inferred_labels, out.inferred_labels);
        return out;
    }
};

enum class Role : std::uint8_t { train = 0, validation = 1, test = 2 };

struct SplitAssignment {
    std::vector<Role> roles;

    std::vector<NodeId> nodes_with(Role r) const {
        std::vector<NodeId> out;
        for (std::size_t i = 0; i < roles.size(); ++i)
            if (roles[i] == r) out.push_back(static_cast<NodeId>(i));
        return out;
    }

    std::size_t count(Role r) const {
        std::size_t n = 0;
        for (Role x : roles) n += (x == r);
        return n;
    }
};

struct SplitRatios {
    double train = 0.1;
    double validation = 0.2;
    double test = 0.7;
};

/// Seeded uniform partition into train/validation/test. Sizes follow the
/// largest-remainder rule so they sum to N and match the ratios within
/// rounding.
inline SplitAssignment split_nodes(const Graph& g, SplitRatios ratios, std::uint64_t seed) {
    const double sum = ratios.train + ratios.validation + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("split ratios must sum to 1");
    const auto n = static_cast<std::int64_t>(g.node_count());

    const double exact[3] = {ratios.train * n, ratios.validation * n, ratios.test * n};
    std::int64_t sizes[3];
    double frac[3];
    std::int64_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        sizes[k] = static_cast<std::int64_t>(std::floor(exact[k]));
        frac[k] = exact[k] - static_cast<double>(sizes[k]);
        assigned += sizes[k];
    }
    while (assigned < n) {
        int best = 0;
        for (int k = 1; k < 3; ++k)
            if (frac[k] > frac[best]) best = k;
        ++sizes[best];
        frac[best] = -1.0;
        ++assigned;
    }

    std::vector<NodeId> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::substream(seed, "split");
    rng.shuffle(order);

    SplitAssignment split;
    split.roles.resize(static_cast<std::size_t>(n));
    std::int64_t pos = 0;
    for (int k = 0; k < 3; ++k)
        for (std::int64_t i = 0; i < sizes[k]; ++i)
            split.roles[static_cast<std::size_t>(order[static_cast<std::size_t>(pos++)])] =
                static_cast<Role>(k);
    return split;
}

/// Y_m := Z except on a seeded uniform floor(rate*N) subset, where the label
/// is redrawn uniformly from the other K-1 classes. Z itself is untouched.
inline NodeLabelStore inject_label_noise(const NodeLabelStore& labels, double rate,
                                         std::uint64_t seed) {
    if (rate < 0.0 || rate > 1.0) throw InvalidArgument("noise rate must be in [0,1]");
    const auto n = static_cast<std::int64_t>(labels.size());
    const auto flips = static_cast<std::int64_t>(std::floor(rate * static_cast<double>(n)));
    if (labels.class_count < 2 && flips > 0)
        throw InvalidArgument("cannot flip labels with a single class");

    NodeLabelStore out = labels;
    out.manual_labels = labels.true_labels;
    Rng rng = Rng::substream(seed, "label-noise");
    for (std::int64_t idx : rng.sample_without_replacement(n, flips)) {
        const auto i = static_cast<std::size_t>(idx);
        const std::int32_t z = labels.true_labels[i];
        auto r = static_cast<std::int32_t>(
            rng.uniform_int(static_cast<std::uint64_t>(labels.class_count - 1)));
        out.manual_labels[i] = r >= z ? r + 1 : r;
    }
    return out;
}

}  // namespace tratopo
