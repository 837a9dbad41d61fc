#pragma once

// Experiment orchestration: dataset -> split/noise -> train -> perturb ->
// infer -> evaluate, per (variant, seed) cell, with aggregate reporting in
// CSV / JSON / markdown. Cells are independent and may run in parallel
// (TRATOPO_THREADS); results land in preassigned slots so the report is
// identical for any thread count.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tratopo/dataset.hpp"
#include "tratopo/errors.hpp"
#include "tratopo/gcn.hpp"
#include "tratopo/inference.hpp"
#include "tratopo/labels.hpp"
#include "tratopo/perturb.hpp"

namespace tratopo {

enum class Scenario : std::uint8_t { clean = 0, random = 1, sparse = 2, attack = 3 };

inline const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::clean: return "clean";
        case Scenario::random: return "random";
        case Scenario::sparse: return "sparse";
        case Scenario::attack: return "attack";
    }
    return "?";
}

inline Scenario scenario_from_string(const std::string& s) {
    if (s == "clean") return Scenario::clean;
    if (s == "random") return Scenario::random;
    if (s == "sparse") return Scenario::sparse;
    if (s == "attack") return Scenario::attack;
    throw InvalidArgument("unknown scenario: " + s);
}

struct ScenarioParams {
    double random_rate = 0.5;
    double drop_rate = 0.5;
    std::int32_t attack_budget = 5;
    double attack_target_fraction = 0.10;
};

struct DatasetSpec {
    // kind: "citation" | "generic" | "bundle" | "synthetic-cora" |
    //       "synthetic-citeseer" | "synthetic"
    std::string kind = "synthetic-cora";
    std::filesystem::path content, cites;
    std::filesystem::path edges, features, labels;
    std::filesystem::path bundle;
    SyntheticSpec synthetic = SyntheticSpec::cora_like();
};

inline DatasetBundle load_dataset(const DatasetSpec& spec) {
    if (spec.kind == "citation") return load_citation_dataset(spec.content, spec.cites).bundle;
    if (spec.kind == "generic")
        return load_generic_dataset(spec.edges, spec.features, spec.labels).bundle;
    if (spec.kind == "bundle") return load_bundle(spec.bundle);
    if (spec.kind == "synthetic-cora") return synthetic_citation(SyntheticSpec::cora_like());
    if (spec.kind == "synthetic-citeseer")
        return synthetic_citation(SyntheticSpec::citeseer_like());
    if (spec.kind == "synthetic") return synthetic_citation(spec.synthetic);
    throw InvalidArgument("unknown dataset kind: " + spec.kind);
}

struct ExperimentConfig {
    DatasetSpec dataset;
    SplitRatios split;
    double noise_rate = 0.1;
    Scenario scenario = Scenario::random;
    ScenarioParams scenario_params;
    std::vector<std::string> variants = {"original", "combine"};
    TrainConfig training;
    InferenceConfig inference;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    bool include_timing = true;

    void validate() const {
        if (variants.empty()) throw InvalidArgument("experiment: empty variant list");
        if (seeds.empty()) throw InvalidArgument("experiment: empty seed list");
        for (const auto& v : variants)
            if (v != "original" && v != "lindt" && v != "rwr" && v != "pgr" && v != "combine")
                throw InvalidArgument("unknown variant: " + v);
    }
};

struct CellResult {
    std::string variant;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double acc_impacted = 0.0;
    double ent_impacted = 0.0;
    double acc_test = 0.0;
    double ent_test = 0.0;
    std::int64_t impacted_count = 0;
    std::int64_t edges_added = 0;
    std::int64_t retrains = 0;
    double seconds = 0.0;
};

struct VariantAggregate {
    std::string variant;
    std::int32_t cells_ok = 0;
    std::int32_t cells_failed = 0;
    double acc_mean = 0.0, acc_std = 0.0;
    double ent_mean = 0.0, ent_std = 0.0;
    double acc_all_mean = 0.0, acc_all_std = 0.0;
    double ent_all_mean = 0.0, ent_all_std = 0.0;
    double seconds_mean = 0.0;
};

struct MetricsReport {
    std::string scenario;
    std::vector<CellResult> cells;           // variant-major, then seed order
    std::vector<VariantAggregate> aggregates;
    nlohmann::json config_echo;
    nlohmann::json manifests;  // per-seed perturbation manifests, replayable
};

namespace detail {

struct MeanStd {
    double mean = 0.0;
    double stdev = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stdev = std::sqrt(ss / static_cast<double>(xs.size()));
    return out;
}

/// Everything derived from one seed that is shared across variants.
struct SeedContext {
    SplitAssignment split;
    NodeLabelStore noised;          // full-graph labels with Y_m
    SubgraphResult train_side;      // induced on train+validation
    SubgraphResult test_side;       // induced on test
    FeatureMatrix x_train, x_test;
    NodeLabelStore labels_train, labels_test;
    std::vector<NodeId> train_mask_local;  // train-role nodes, train-side ids
    TrainResult classifier;
    DenseMatrix warmup_phi;
    PerturbationResult perturbation;       // on the test-side graph
    nlohmann::json manifest;
    DistributionMatrix dist_perturbed;     // classifier on the perturbed test graph
    LabelVec y_a_perturbed;
    std::vector<NodeId> metric_population; // impacted, or all test nodes for clean
    std::vector<NodeId> all_test_local;
};

inline SeedContext build_seed_context(const ExperimentConfig& cfg, const DatasetBundle& data,
                                      std::uint64_t seed) {
    SeedContext ctx;
    ctx.split = split_nodes(data.graph, cfg.split, seed);
    ctx.noised = inject_label_noise(data.labels, cfg.noise_rate, seed);

    std::vector<NodeId> train_side_nodes = ctx.split.nodes_with(Role::train);
    {
        const auto val = ctx.split.nodes_with(Role::validation);
        train_side_nodes.insert(train_side_nodes.end(), val.begin(), val.end());
        std::sort(train_side_nodes.begin(), train_side_nodes.end());
    }
    const auto test_nodes = ctx.split.nodes_with(Role::test);

    ctx.train_side = induced_subgraph(data.graph, train_side_nodes);
    ctx.test_side = induced_subgraph(data.graph, test_nodes);
    ctx.x_train = data.features.select_rows(ctx.train_side.to_original);
    ctx.x_test = data.features.select_rows(ctx.test_side.to_original);
    ctx.labels_train = ctx.noised.subset(ctx.train_side.to_original);
    ctx.labels_test = ctx.noised.subset(ctx.test_side.to_original);

    for (std::size_t i = 0; i < ctx.train_side.to_original.size(); ++i)
        if (ctx.split.roles[static_cast<std::size_t>(ctx.train_side.to_original[i])] == Role::train)
            ctx.train_mask_local.push_back(static_cast<NodeId>(i));

    TrainConfig tc = cfg.training;
    {
        std::uint64_t s = seed;
        tc.seed = splitmix64(s) ^ hash_tag("train");
    }
    ctx.classifier = train_masked(ctx.train_side.graph, ctx.x_train,
                                  ctx.labels_train.manual_labels, ctx.train_mask_local,
                                  ctx.labels_train.class_count, tc);

    // warm-up matrix from the train-role rows of the training-side distribution
    {
        DenseMatrix rows(static_cast<Index>(ctx.train_mask_local.size()),
                         ctx.classifier.dist.cols());
        LabelVec manual(ctx.train_mask_local.size());
        for (std::size_t i = 0; i < ctx.train_mask_local.size(); ++i) {
            const NodeId li = ctx.train_mask_local[i];
            const auto src = ctx.classifier.dist.row(li);
            auto dst = rows.row(static_cast<Index>(i));
            std::copy(src.begin(), src.end(), dst.begin());
            manual[i] = ctx.labels_train.manual_labels[static_cast<std::size_t>(li)];
        }
        ctx.warmup_phi = warmup_matrix(rows, manual);
    }

    // perturb the test-side graph
    const Graph& gt = ctx.test_side.graph;
    switch (cfg.scenario) {
        case Scenario::clean: {
            ctx.perturbation.graph = gt;
            ctx.manifest = perturbation_manifest("clean", seed, nlohmann::json::object(),
                                                 ctx.perturbation);
            break;
        }
        case Scenario::random: {
            ctx.perturbation = random_perturbation(gt, cfg.scenario_params.random_rate, seed);
            ctx.manifest = perturbation_manifest(
                "random", seed, {{"rate", cfg.scenario_params.random_rate}}, ctx.perturbation);
            break;
        }
        case Scenario::sparse: {
            ctx.perturbation = sparsify(gt, cfg.scenario_params.drop_rate, seed);
            ctx.manifest = perturbation_manifest(
                "sparse", seed, {{"drop_rate", cfg.scenario_params.drop_rate}}, ctx.perturbation);
            break;
        }
        case Scenario::attack: {
            Rng rng = Rng::substream(seed, "attack-targets");
            const auto n_test = static_cast<std::int64_t>(gt.node_count());
            const auto n_targets = static_cast<std::int64_t>(
                cfg.scenario_params.attack_target_fraction * static_cast<double>(n_test));
            std::vector<NodeId> targets;
            for (std::int64_t ix : rng.sample_without_replacement(n_test, n_targets))
                targets.push_back(static_cast<NodeId>(ix));
            ctx.perturbation = targeted_attack(gt, ctx.labels_test, targets,
                                               cfg.scenario_params.attack_budget, seed);
            ctx.manifest = perturbation_manifest(
                "attack", seed,
                {{"budget", cfg.scenario_params.attack_budget},
                 {"target_fraction", cfg.scenario_params.attack_target_fraction}},
                ctx.perturbation);
            break;
        }
    }

    // auto labels and distribution on the perturbed test graph
    const NormalizedAdjacency adj = normalize_adjacency(ctx.perturbation.graph);
    ctx.dist_perturbed = forward(adj, ctx.x_test, ctx.classifier.params);
    ctx.y_a_perturbed = argmax_rows(ctx.dist_perturbed);

    ctx.all_test_local.resize(static_cast<std::size_t>(gt.node_count()));
    std::iota(ctx.all_test_local.begin(), ctx.all_test_local.end(), 0);
    ctx.metric_population = ctx.perturbation.impacted_nodes.empty()
                                ? ctx.all_test_local
                                : ctx.perturbation.impacted_nodes;
    return ctx;
}

inline CellResult run_cell(const ExperimentConfig& cfg, const SeedContext& ctx,
                           const std::string& variant, std::uint64_t seed) {
    CellResult cell;
    cell.variant = variant;
    cell.seed = seed;
    cell.impacted_count = static_cast<std::int64_t>(ctx.metric_population.size());
    const auto t0 = std::chrono::steady_clock::now();

    const auto& truth = ctx.labels_test.true_labels;
    if (variant == "original") {
        cell.acc_impacted = accuracy(ctx.y_a_perturbed, truth, ctx.metric_population);
        cell.ent_impacted = avg_normalized_entropy(ctx.dist_perturbed, ctx.metric_population);
        cell.acc_test = accuracy(ctx.y_a_perturbed, truth, ctx.all_test_local);
        cell.ent_test = avg_normalized_entropy(ctx.dist_perturbed, ctx.all_test_local);
    } else {
        InferenceConfig icfg = cfg.inference;
        icfg.variant = variant == "lindt"  ? Variant::lindt
                       : variant == "rwr" ? Variant::rwr
                       : variant == "pgr" ? Variant::pgr
                                          : Variant::combine;
        {
            std::uint64_t s = seed;
            icfg.seed = splitmix64(s) ^ hash_tag("infer");
        }
        TrainConfig tc = cfg.training;
        InferenceResult res =
            tratopo_infer(ctx.perturbation.graph, ctx.x_test, tc, ctx.warmup_phi,
                          ctx.dist_perturbed, ctx.y_a_perturbed, icfg);
        cell.acc_impacted = accuracy(res.inferred, truth, ctx.metric_population);
        cell.ent_impacted = avg_normalized_entropy(res.dist, ctx.metric_population);
        cell.acc_test = accuracy(res.inferred, truth, ctx.all_test_local);
        cell.ent_test = avg_normalized_entropy(res.dist, ctx.all_test_local);
        cell.edges_added = res.total_edges_added;
        cell.retrains = res.total_retrains;
    }

    const auto t1 = std::chrono::steady_clock::now();
    cell.seconds =
        cfg.include_timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
    cell.ok = true;
    return cell;
}

inline std::size_t thread_count_from_env() {
    if (const char* env = std::getenv("TRATOPO_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    return 1;
}

}  // namespace detail

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

/// Runs every (variant, seed) cell. A failing cell is recorded with its
/// error and the run continues.
inline MetricsReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const DatasetBundle data = load_dataset(cfg.dataset);
    MetricsReport report;
    report.scenario = to_string(cfg.scenario);
    report.config_echo = experiment_config_to_json(cfg);

    // per-seed contexts (training shared across variants)
    std::vector<detail::SeedContext> contexts(cfg.seeds.size());
    std::vector<std::string> context_errors(cfg.seeds.size());
    {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cfg.seeds.size()) return;
                try {
                    contexts[i] = detail::build_seed_context(cfg, data, cfg.seeds[i]);
                } catch (const std::exception& e) {
                    context_errors[i] = e.what();
                }
            }
        };
        const std::size_t threads =
            std::min(detail::thread_count_from_env(), cfg.seeds.size());
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
    }

    report.manifests = nlohmann::json::object();
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
        if (context_errors[i].empty())
            report.manifests[std::to_string(cfg.seeds[i])] = contexts[i].manifest;

    // cells, variant-major
    report.cells.resize(cfg.variants.size() * cfg.seeds.size());
    {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t j = next.fetch_add(1);
                if (j >= report.cells.size()) return;
                const std::size_t vi = j / cfg.seeds.size();
                const std::size_t si = j % cfg.seeds.size();
                CellResult& cell = report.cells[j];
                cell.variant = cfg.variants[vi];
                cell.seed = cfg.seeds[si];
                if (!context_errors[si].empty()) {
                    cell.error = context_errors[si];
                    continue;
                }
                try {
                    cell = detail::run_cell(cfg, contexts[si], cfg.variants[vi], cfg.seeds[si]);
                } catch (const std::exception& e) {
                    cell.ok = false;
                    cell.error = e.what();
                }
            }
        };
        const std::size_t threads =
            std::min(detail::thread_count_from_env(), report.cells.size());
        if (threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }
    }

    for (const auto& variant : cfg.variants) {
        VariantAggregate agg;
        agg.variant = variant;
        std::vector<double> acc, ent, acc_all, ent_all, secs;
        for (const CellResult& c : report.cells) {
            if (c.variant != variant) continue;
            if (!c.ok) {
                ++agg.cells_failed;
                continue;
            }
            ++agg.cells_ok;
            acc.push_back(c.acc_impacted);
            ent.push_back(c.ent_impacted);
            acc_all.push_back(c.acc_test);
            ent_all.push_back(c.ent_test);
            secs.push_back(c.seconds);
        }
        const auto a = detail::mean_std(acc);
        const auto e = detail::mean_std(ent);
        const auto aa = detail::mean_std(acc_all);
        const auto ea = detail::mean_std(ent_all);
        agg.acc_mean = a.mean;
        agg.acc_std = a.stdev;
        agg.ent_mean = e.mean;
        agg.ent_std = e.stdev;
        agg.acc_all_mean = aa.mean;
        agg.acc_all_std = aa.stdev;
        agg.ent_all_mean = ea.mean;
        agg.ent_all_std = ea.stdev;
        agg.seconds_mean = detail::mean_std(secs).mean;
        report.aggregates.push_back(std::move(agg));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Config (de)serialization
// ---------------------------------------------------------------------------

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    nlohmann::json d;
    d["kind"] = cfg.dataset.kind;
    if (!cfg.dataset.content.empty()) d["content"] = cfg.dataset.content.string();
    if (!cfg.dataset.cites.empty()) d["cites"] = cfg.dataset.cites.string();
    if (!cfg.dataset.edges.empty()) d["edges"] = cfg.dataset.edges.string();
    if (!cfg.dataset.features.empty()) d["features"] = cfg.dataset.features.string();
    if (!cfg.dataset.labels.empty()) d["labels"] = cfg.dataset.labels.string();
    if (!cfg.dataset.bundle.empty()) d["bundle"] = cfg.dataset.bundle.string();
    if (cfg.dataset.kind == "synthetic") {
        const auto& s = cfg.dataset.synthetic;
        d["synthetic"] = {{"nodes", s.nodes},
                          {"classes", s.classes},
                          {"feature_dim", s.feature_dim},
                          {"undirected_edges", s.undirected_edges},
                          {"homophily", s.homophily},
                          {"topic_affinity", s.topic_affinity},
                          {"seed", s.seed}};
    }
    j["dataset"] = std::move(d);
    j["split"] = {cfg.split.train, cfg.split.validation, cfg.split.test};
    j["noise_rate"] = cfg.noise_rate;
    j["scenario"] = to_string(cfg.scenario);
    j["scenario_params"] = {{"random_rate", cfg.scenario_params.random_rate},
                            {"drop_rate", cfg.scenario_params.drop_rate},
                            {"attack_budget", cfg.scenario_params.attack_budget},
                            {"attack_target_fraction", cfg.scenario_params.attack_target_fraction}};
    j["variants"] = cfg.variants;
    j["training"] = {{"learning_rate", cfg.training.learning_rate},
                     {"epochs", cfg.training.epochs},
                     {"hidden_units", cfg.training.hidden_units}};
    j["inference"] = {{"transitions", cfg.inference.transitions},
                      {"warmup_steps", cfg.inference.warmup_steps},
                      {"retrain_interval", cfg.inference.retrain_interval},
                      {"retrain_epochs", cfg.inference.retrain_epochs},
                      {"sampler", to_string(cfg.inference.sampler)},
                      {"linkpred",
                       {{"restart_prob", cfg.inference.linkpred.restart_prob},
                        {"teleport_prob", cfg.inference.linkpred.teleport_prob},
                        {"tolerance", cfg.inference.linkpred.tolerance},
                        {"max_iterations", cfg.inference.linkpred.max_iterations},
                        {"top_k", cfg.inference.linkpred.top_k},
                        {"min_degree", cfg.inference.linkpred.min_degree},
                        {"l_max", cfg.inference.linkpred.l_max},
                        {"combine_rule",
                         cfg.inference.linkpred.combine_rule == CombineRule::sum       ? "sum"
                         : cfg.inference.linkpred.combine_rule == CombineRule::product ? "product"
                                                                                       : "max"}}}};
    j["seeds"] = cfg.seeds;
    j["include_timing"] = cfg.include_timing;
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        cfg.dataset.kind = d.value("kind", cfg.dataset.kind);
        if (d.contains("content")) cfg.dataset.content = d.at("content").get<std::string>();
        if (d.contains("cites")) cfg.dataset.cites = d.at("cites").get<std::string>();
        if (d.contains("edges")) cfg.dataset.edges = d.at("edges").get<std::string>();
        if (d.contains("features")) cfg.dataset.features = d.at("features").get<std::string>();
        if (d.contains("labels")) cfg.dataset.labels = d.at("labels").get<std::string>();
        if (d.contains("bundle")) cfg.dataset.bundle = d.at("bundle").get<std::string>();
        if (d.contains("synthetic")) {
            const auto& s = d.at("synthetic");
            cfg.dataset.synthetic.nodes = s.value("nodes", cfg.dataset.synthetic.nodes);
            cfg.dataset.synthetic.classes = s.value("classes", cfg.dataset.synthetic.classes);
            cfg.dataset.synthetic.feature_dim =
                s.value("feature_dim", cfg.dataset.synthetic.feature_dim);
            cfg.dataset.synthetic.undirected_edges =
                s.value("undirected_edges", cfg.dataset.synthetic.undirected_edges);
            cfg.dataset.synthetic.homophily =
                s.value("homophily", cfg.dataset.synthetic.homophily);
            cfg.dataset.synthetic.topic_affinity =
                s.value("topic_affinity", cfg.dataset.synthetic.topic_affinity);
            cfg.dataset.synthetic.seed = s.value("seed", cfg.dataset.synthetic.seed);
        }
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        cfg.split = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>()};
    }
    cfg.noise_rate = j.value("noise_rate", cfg.noise_rate);
    if (j.contains("scenario")) cfg.scenario = scenario_from_string(j.at("scenario"));
    if (j.contains("scenario_params")) {
        const auto& p = j.at("scenario_params");
        cfg.scenario_params.random_rate = p.value("random_rate", cfg.scenario_params.random_rate);
        cfg.scenario_params.drop_rate = p.value("drop_rate", cfg.scenario_params.drop_rate);
        cfg.scenario_params.attack_budget =
            p.value("attack_budget", cfg.scenario_params.attack_budget);
        cfg.scenario_params.attack_target_fraction =
            p.value("attack_target_fraction", cfg.scenario_params.attack_target_fraction);
    }
    if (j.contains("variants")) cfg.variants = j.at("variants").get<std::vector<std::string>>();
    if (j.contains("training")) {
        const auto& t = j.at("training");
        cfg.training.learning_rate = t.value("learning_rate", cfg.training.learning_rate);
        cfg.training.epochs = t.value("epochs", cfg.training.epochs);
        cfg.training.hidden_units = t.value("hidden_units", cfg.training.hidden_units);
    }
    if (j.contains("inference")) {
        const auto& f = j.at("inference");
        cfg.inference.transitions = f.value("transitions", cfg.inference.transitions);
        cfg.inference.warmup_steps = f.value("warmup_steps", cfg.inference.warmup_steps);
        cfg.inference.retrain_interval =
            f.value("retrain_interval", cfg.inference.retrain_interval);
        cfg.inference.retrain_epochs = f.value("retrain_epochs", cfg.inference.retrain_epochs);
        if (f.contains("sampler")) {
            const std::string s = f.at("sampler");
            cfg.inference.sampler = s == "uniform"    ? TopologySampler::uniform
                                    : s == "majority" ? TopologySampler::majority
                                                      : TopologySampler::degree_weighted;
            if (s != "uniform" && s != "majority" && s != "degree_weighted")
                throw InvalidArgument("unknown sampler: " + s);
        }
        if (f.contains("linkpred")) {
            const auto& l = f.at("linkpred");
            auto& lp = cfg.inference.linkpred;
            lp.restart_prob = l.value("restart_prob", lp.restart_prob);
            lp.teleport_prob = l.value("teleport_prob", lp.teleport_prob);
            lp.tolerance = l.value("tolerance", lp.tolerance);
            lp.max_iterations = l.value("max_iterations", lp.max_iterations);
            lp.top_k = l.value("top_k", lp.top_k);
            lp.min_degree = l.value("min_degree", lp.min_degree);
            lp.l_max = l.value("l_max", lp.l_max);
            if (l.contains("combine_rule")) {
                const std::string r = l.at("combine_rule");
                lp.combine_rule = r == "sum"       ? CombineRule::sum
                                  : r == "product" ? CombineRule::product
                                                   : CombineRule::max;
                if (r != "sum" && r != "product" && r != "max")
                    throw InvalidArgument("unknown combine rule: " + r);
            }
        }
    }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.include_timing = j.value("include_timing", cfg.include_timing);
    return cfg;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

enum class ReportFormat : std::uint8_t { csv, json, markdown };

namespace detail {

inline std::string fmt_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string fmt_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", x);
    return buf;
}

}  // namespace detail

inline nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["scenario"] = r.scenario;
    j["config"] = r.config_echo;
    j["manifests"] = r.manifests;
    nlohmann::json cells = nlohmann::json::array();
    for (const CellResult& c : r.cells) {
        nlohmann::json jc;
        jc["variant"] = c.variant;
        jc["seed"] = c.seed;
        jc["ok"] = c.ok;
        if (!c.ok) jc["error"] = c.error;
        jc["acc_impacted"] = c.acc_impacted;
        jc["ent_impacted"] = c.ent_impacted;
        jc["acc_test"] = c.acc_test;
        jc["ent_test"] = c.ent_test;
        jc["impacted_count"] = c.impacted_count;
        jc["edges_added"] = c.edges_added;
        jc["retrains"] = c.retrains;
        jc["seconds"] = c.seconds;
        cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);
    nlohmann::json aggs = nlohmann::json::array();
    for (const VariantAggregate& a : r.aggregates) {
        nlohmann::json ja;
        ja["variant"] = a.variant;
        ja["scenario"] = r.scenario;
        ja["acc_mean"] = a.acc_mean;
        ja["acc_std"] = a.acc_std;
        ja["ent_mean"] = a.ent_mean;
        ja["ent_std"] = a.ent_std;
        ja["seconds"] = a.seconds_mean;
        ja["acc_all_mean"] = a.acc_all_mean;
        ja["acc_all_std"] = a.acc_all_std;
        ja["ent_all_mean"] = a.ent_all_mean;
        ja["ent_all_std"] = a.ent_all_std;
        ja["cells_ok"] = a.cells_ok;
        ja["cells_failed"] = a.cells_failed;
        aggs.push_back(std::move(ja));
    }
    j["aggregates"] = std::move(aggs);
    return j;
}

inline std::string emit_report(const MetricsReport& r, ReportFormat format) {
    if (format == ReportFormat::json) return report_to_json(r).dump(2) + "\n";
    std::string out;
    const char* header =
        "variant,scenario,acc_mean,acc_std,ent_mean,ent_std,seconds,"
        "acc_all_mean,acc_all_std,ent_all_mean,ent_all_std,cells_ok,cells_failed";
    if (format == ReportFormat::csv) {
        out += header;
        out += "\n";
        for (const VariantAggregate& a : r.aggregates) {
            out += a.variant + "," + r.scenario + "," + detail::fmt_full(a.acc_mean) + "," +
                   detail::fmt_full(a.acc_std) + "," + detail::fmt_full(a.ent_mean) + "," +
                   detail::fmt_full(a.ent_std) + "," + detail::fmt_full(a.seconds_mean) + "," +
                   detail::fmt_full(a.acc_all_mean) + "," + detail::fmt_full(a.acc_all_std) + "," +
                   detail::fmt_full(a.ent_all_mean) + "," + detail::fmt_full(a.ent_all_std) + "," +
                   std::to_string(a.cells_ok) + "," + std::to_string(a.cells_failed) + "\n";
        }
        return out;
    }
    // markdown
    out += "| variant | scenario | acc_mean | acc_std | ent_mean | ent_std | seconds |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (const VariantAggregate& a : r.aggregates) {
        out += "| " + a.variant + " | " + r.scenario + " | " + detail::fmt_short(a.acc_mean) +
               " | " + detail::fmt_short(a.acc_std) + " | " + detail::fmt_short(a.ent_mean) +
               " | " + detail::fmt_short(a.ent_std) + " | " + detail::fmt_short(a.seconds_mean) +
               " |\n";
    }
    return out;
}

inline void write_report(const MetricsReport& r, const std::filesystem::path& path,
                         ReportFormat format) {
    std::ofstream f(path);
    if (!f) throw InvalidArgument("cannot write report: " + path.string());
    f << emit_report(r, format);
}

}  // namespace tratopo
