// dbc — dispersion-based clustering CLI.
//
// Subcommands: synth, cluster, alternate, ablate, sweep-lambda,
// bench-scaling. Every command validates its configuration before touching
// compute and exits 1 on config errors, 2 on data errors, 3 on runtime
// failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dbc/distance.hpp"
#include "dbc/embed.hpp"
#include "dbc/engine.hpp"
#include "dbc/error.hpp"
#include "dbc/eval.hpp"
#include "dbc/io.hpp"
#include "dbc/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonOpts {
    std::string input;
    std::string format = "csv";
    std::string labels_path;
    std::string criterion = "dispersion";
    double lambda = 0.5;
    double merge_percent = 0.05;
    std::string intra_mode = "paper";
    long long target_clusters = -1;  // absent -> paper loop
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct TrainOpts {
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    double lr = 0.1;
    double lr_decayed = 0.01;
    std::size_t decay_epoch = 15;
    double tau = 0.1;
    double momentum = 0.5;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_input) {
    if (needs_input) {
        cmd->add_option("--input", o.input, "feature file")->required();
        cmd->add_option("--format", o.format, "input format")
            ->check(CLI::IsMember({"csv", "dbcf"}));
        cmd->add_option("--labels", o.labels_path, "ground-truth sidecar TSV");
    }
    cmd->add_option("--criterion", o.criterion, "merge criterion")
        ->check(CLI::IsMember({"dispersion", "dispersion-noreg", "single", "single-sizereg"}));
    cmd->add_option("--lambda", o.lambda, "trade-off parameter");
    cmd->add_option("--merge-percent", o.merge_percent, "merge batch percent m");
    cmd->add_option("--intra-mode", o.intra_mode, "intra dispersion update rule")
        ->check(CLI::IsMember({"paper", "exact"}));
    cmd->add_option("--target-clusters", o.target_clusters, "stop at this cluster count");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--out", o.out_dir, "output directory")->required();
}

void add_train(CLI::App* cmd, TrainOpts& t) {
    cmd->add_option("--epochs", t.epochs, "training epochs per stage");
    cmd->add_option("--batch-size", t.batch_size, "mini-batch size");
    cmd->add_option("--lr", t.lr, "initial learning rate");
    cmd->add_option("--lr-decayed", t.lr_decayed, "learning rate after decay");
    cmd->add_option("--decay-epoch", t.decay_epoch, "epoch at which the rate decays");
    cmd->add_option("--tau", t.tau, "softmax temperature");
    cmd->add_option("--momentum", t.momentum, "LUT EMA momentum");
}

dbc::Criterion parse_criterion(const CommonOpts& o) {
    dbc::Criterion crit;
    crit.lambda = o.lambda;
    if (o.criterion == "dispersion") crit.kind = dbc::CriterionKind::kDispersion;
    else if (o.criterion == "dispersion-noreg") crit.kind = dbc::CriterionKind::kDispersionNoReg;
    else if (o.criterion == "single") crit.kind = dbc::CriterionKind::kSingleLinkage;
    else if (o.criterion == "single-sizereg") crit.kind = dbc::CriterionKind::kSingleLinkageSizeReg;
    else throw dbc::ConfigError("unknown criterion '" + o.criterion + "'");
    if (crit.lambda < 0.0) throw dbc::ConfigError("lambda must be >= 0");
    return crit;
}

dbc::EngineConfig engine_config(const CommonOpts& o) {
    dbc::EngineConfig config;
    config.merge_percent = o.merge_percent;
    config.criterion = parse_criterion(o);
    config.intra_mode =
        o.intra_mode == "exact" ? dbc::IntraMode::kExact : dbc::IntraMode::kPaperEq7;
    if (o.target_clusters >= 0) {
        config.stop = dbc::StopRule::kMinClusters;
        config.target_clusters = static_cast<std::size_t>(o.target_clusters);
    } else {
        config.stop = dbc::StopRule::kPaperLoop;
    }
    return config;
}

dbc::TrainConfig train_config(const TrainOpts& t, std::uint64_t seed) {
    dbc::TrainConfig config;
    config.epochs = t.epochs;
    config.batch_size = t.batch_size;
    config.learning_rate = t.lr;
    config.decayed_rate = t.lr_decayed;
    config.decay_epoch = t.decay_epoch;
    config.tau = t.tau;
    config.momentum = t.momentum;
    config.seed = seed;
    config.validate();
    return config;
}

dbc::FeatureStore load_input(const CommonOpts& o) {
    dbc::FeatureStore store =
        o.format == "dbcf" ? dbc::read_dbcf(o.input) : dbc::read_csv(o.input);
    if (!o.labels_path.empty()) dbc::read_labels_tsv(o.labels_path, store);
    store.validate();
    return store;
}

void ensure_out_dir(const CommonOpts& o) {
    if (o.out_dir.empty()) throw dbc::ConfigError("--out is required");
    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec) throw dbc::ConfigError("cannot create output directory '" + o.out_dir + "'");
}

std::string out_path(const CommonOpts& o, const std::string& name) {
    return (fs::path(o.out_dir) / name).string();
}

dbc::MetricReport report_for(const dbc::FeatureStore& store, const dbc::Matrix& features,
                             const std::vector<int>& predicted) {
    auto protocol = dbc::RetrievalProtocol::single_query_split(store.ground_truth);
    return dbc::evaluate(protocol, features, predicted, store.ground_truth);
}

int cmd_synth(const CommonOpts& o, const dbc::SyntheticSpec& spec, const std::string& format) {
    ensure_out_dir(o);
    dbc::FeatureStore store = dbc::generate_synthetic(spec);
    if (format == "dbcf")
        dbc::write_dbcf(out_path(o, "features.dbcf"), store);
    else
        dbc::write_csv(out_path(o, "features.csv"), store);
    dbc::write_labels_tsv(out_path(o, "labels.tsv"), store.sample_ids, store.ground_truth);
    std::cout << "wrote " << store.size() << " samples, " << spec.num_identities
              << " identities to " << o.out_dir << "\n";
    return 0;
}

int cmd_cluster(const CommonOpts& o) {
    dbc::EngineConfig config = engine_config(o);
    ensure_out_dir(o);
    dbc::FeatureStore store = load_input(o);
    config.validate(store.size());

    dbc::DistanceMatrix dist = dbc::pairwise_distances(store);
    auto result =
        dbc::run_clustering(dist, dbc::ClusterState::singletons(store.size()), config);

    dbc::write_labels_tsv(out_path(o, "labels.tsv"), store.sample_ids, result.state.labels);
    dbc::write_merge_log(out_path(o, "merges.jsonl"), result.events);
    if (store.has_ground_truth()) {
        dbc::write_metric_report(out_path(o, "metrics.json"),
                                 report_for(store, store.features, result.state.labels));
    }
    std::cout << "clustered " << store.size() << " samples into "
              << result.state.cluster_count() << " clusters over " << result.stages
              << " stages\n";
    return 0;
}

int cmd_alternate(const CommonOpts& o, const TrainOpts& t) {
    dbc::EngineConfig config = engine_config(o);
    dbc::TrainConfig train = train_config(t, o.seed);
    ensure_out_dir(o);
    dbc::FeatureStore store = load_input(o);
    config.validate(store.size());

    auto result = dbc::alternate(store, config, train, dbc::default_eval_hook(store));

    dbc::write_labels_tsv(out_path(o, "labels.tsv"), store.sample_ids,
                          result.best_state.labels);
    dbc::write_dbcf(out_path(o, "features.dbcf"), result.best_store);
    dbc::write_merge_log(out_path(o, "merges.jsonl"), result.events);
    dbc::write_history(out_path(o, "history.json"), result.history);
    if (store.has_ground_truth()) {
        dbc::write_metric_report(
            out_path(o, "metrics.json"),
            report_for(store, result.best_store.features, result.best_state.labels));
    }
    std::cout << "best stage " << result.best_stage << " ("
              << result.best_state.cluster_count() << " clusters, perf " << result.best_perf
              << "), " << result.history.size() << " stages total\n";
    return 0;
}

int cmd_ablate(const CommonOpts& o) {
    dbc::EngineConfig base = engine_config(o);
    ensure_out_dir(o);
    dbc::FeatureStore store = load_input(o);
    if (!store.has_ground_truth())
        throw dbc::ConfigError("ablate requires ground truth (inline label column or --labels)");
    base.validate(store.size());
    if (o.target_clusters < 0) {
        // matched final cluster count across criteria
        base.stop = dbc::StopRule::kMinClusters;
        base.target_clusters = static_cast<std::size_t>(
            1 + *std::max_element(store.ground_truth.begin(), store.ground_truth.end()));
    }

    const dbc::CriterionKind rows[] = {
        dbc::CriterionKind::kSingleLinkage,
        dbc::CriterionKind::kSingleLinkageSizeReg,
        dbc::CriterionKind::kDispersionNoReg,
        dbc::CriterionKind::kDispersion,
    };

    dbc::DistanceMatrix dist = dbc::pairwise_distances(store);
    ordered_json table = ordered_json::array();
    std::string text;
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s %7s %7s %7s %7s %7s %7s\n", "criterion", "rank1",
                  "rank5", "rank10", "mAP", "f1", "purity");
    text += line;
    for (dbc::CriterionKind kind : rows) {
        dbc::EngineConfig config = base;
        config.criterion.kind = kind;
        auto result =
            dbc::run_clustering(dist, dbc::ClusterState::singletons(store.size()), config);
        dbc::MetricReport rep = report_for(store, store.features, result.state.labels);

        ordered_json row;
        row["criterion"] = dbc::criterion_name(kind);
        row["lambda"] = config.criterion.lambda;
        row["final_clusters"] = result.state.cluster_count();
        row["rank1"] = rep.rank1;
        row["rank5"] = rep.rank5;
        row["rank10"] = rep.rank10;
        row["mAP"] = rep.mAP;
        row["pairwise_f1"] = rep.pairwise_f1;
        row["purity"] = rep.purity;
        table.push_back(row);

        std::snprintf(line, sizeof(line), "%-18s %7.4f %7.4f %7.4f %7.4f %7.4f %7.4f\n",
                      dbc::criterion_name(kind), rep.rank1, rep.rank5, rep.rank10, rep.mAP,
                      rep.pairwise_f1, rep.purity);
        text += line;
    }

    std::ofstream json_out(out_path(o, "ablation.json"));
    json_out << table.dump(2) << "\n";
    std::ofstream text_out(out_path(o, "ablation.txt"));
    text_out << text;
    std::cout << text;
    return 0;
}

int cmd_sweep_lambda(const CommonOpts& o, std::vector<double> lambdas) {
    dbc::EngineConfig base = engine_config(o);
    if (lambdas.empty()) throw dbc::ConfigError("sweep-lambda needs at least one --lambdas value");
    ensure_out_dir(o);

    std::vector<double> unique;
    for (double l : lambdas) {
        if (std::find(unique.begin(), unique.end(), l) != unique.end()) {
            std::cerr << "warning: duplicate lambda " << l << " ignored\n";
            continue;
        }
        if (l < 0.0) throw dbc::ConfigError("lambda must be >= 0");
        unique.push_back(l);
    }

    dbc::FeatureStore store = load_input(o);
    if (!store.has_ground_truth()) throw dbc::ConfigError("sweep-lambda requires ground truth");
    base.validate(store.size());
    base.criterion.kind = dbc::CriterionKind::kDispersion;
    if (o.target_clusters < 0) {
        base.stop = dbc::StopRule::kMinClusters;
        base.target_clusters = static_cast<std::size_t>(
            1 + *std::max_element(store.ground_truth.begin(), store.ground_truth.end()));
    }

    dbc::DistanceMatrix dist = dbc::pairwise_distances(store);
    std::ofstream csv(out_path(o, "sweep.csv"));
    csv << "lambda,rank1,mAP,f1,purity\n";
    for (double l : unique) {
        dbc::EngineConfig config = base;
        config.criterion.lambda = l;
        auto result =
            dbc::run_clustering(dist, dbc::ClusterState::singletons(store.size()), config);
        dbc::MetricReport rep = report_for(store, store.features, result.state.labels);
        char row[160];
        std::snprintf(row, sizeof(row), "%.17g,%.6f,%.6f,%.6f,%.6f\n", l, rep.rank1, rep.mAP,
                      rep.pairwise_f1, rep.purity);
        csv << row;
    }
    std::cout << "swept " << unique.size() << " lambda values\n";
    return 0;
}

int cmd_bench_scaling(const CommonOpts& o, const std::vector<std::size_t>& sizes) {
    if (sizes.empty()) throw dbc::ConfigError("bench-scaling needs --sizes");
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1]) throw dbc::ConfigError("--sizes must be ascending");
    dbc::EngineConfig base = engine_config(o);
    ensure_out_dir(o);

    std::vector<std::pair<std::size_t, double>> measurements;
    for (std::size_t target_n : sizes) {
        dbc::SyntheticSpec spec;
        spec.num_identities = std::max<std::size_t>(2, target_n / spec.avg_samples_per_id);
        spec.size_law = dbc::SizeLaw::kUniform;
        spec.seed = o.seed;
        dbc::FeatureStore store = dbc::generate_synthetic(spec);
        const std::size_t n = store.size();

        dbc::EngineConfig config = base;
        config.validate(n);

        const auto t0 = std::chrono::steady_clock::now();
        dbc::DistanceMatrix dist = dbc::pairwise_distances(store);
        dbc::Engine engine(dist, dbc::ClusterState::singletons(n), config);
        engine.run_stage(0);
        const auto t1 = std::chrono::steady_clock::now();
        const double wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        measurements.emplace_back(n, wall_ms);
        std::cout << "N=" << n << " stage wall " << wall_ms << " ms\n";
    }

    // least-squares slope in log-log space
    double slope = 0.0;
    if (measurements.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (auto [n, ms] : measurements) {
            double x = std::log(static_cast<double>(n));
            double y = std::log(std::max(ms, 1e-9));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double m = static_cast<double>(measurements.size());
        slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }

    std::ofstream csv(out_path(o, "bench.csv"));
    csv << "n,wall_ms\n";
    for (auto [n, ms] : measurements) csv << n << ',' << ms << "\n";
    ordered_json j;
    j["slope"] = slope;
    std::ofstream jout(out_path(o, "bench.json"));
    jout << j.dump(2) << "\n";
    std::cout << "log-log slope " << slope << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dispersion-based clustering engine"};
    app.require_subcommand(1);

    CommonOpts synth_opts, cluster_opts, alt_opts, ablate_opts, sweep_opts, bench_opts;
    TrainOpts train_opts;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
    dbc::SyntheticSpec spec;
    std::string synth_law = "longtail", synth_format = "csv";
    synth->add_option("--ids", spec.num_identities, "number of identities");
    synth->add_option("--dim", spec.dimension, "feature dimension");
    synth->add_option("--law", synth_law, "size law")
        ->check(CLI::IsMember({"uniform", "longtail"}));
    synth->add_option("--exponent", spec.power_exponent, "long-tail power exponent");
    synth->add_option("--avg-count", spec.avg_samples_per_id, "average samples per identity");
    synth->add_option("--spread", spec.cluster_spread, "per-identity standard deviation");
    synth->add_option("--scale", spec.ambient_scale, "centroid box side");
    synth->add_option("--format", synth_format, "output format")
        ->check(CLI::IsMember({"csv", "dbcf"}));
    synth->add_option("--seed", synth_opts.seed, "RNG seed");
    synth->add_option("--out", synth_opts.out_dir, "output directory")->required();

    auto* cluster = app.add_subcommand("cluster", "agglomerate to the stop rule");
    add_common(cluster, cluster_opts, true);

    auto* alternate = app.add_subcommand("alternate", "alternating train/cluster loop");
    add_common(alternate, alt_opts, true);
    add_train(alternate, train_opts);

    auto* ablate = app.add_subcommand("ablate", "compare all four criteria");
    add_common(ablate, ablate_opts, true);

    auto* sweep = app.add_subcommand("sweep-lambda", "dispersion runs across lambda values");
    std::vector<double> lambdas;
    add_common(sweep, sweep_opts, true);
    sweep->add_option("--lambdas", lambdas, "lambda values")->delimiter(',');

    auto* bench = app.add_subcommand("bench-scaling", "time one stage per dataset size");
    std::vector<std::size_t> sizes;
    add_common(bench, bench_opts, false);
    bench->add_option("--sizes", sizes, "ascending sample counts")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            spec.size_law =
                synth_law == "uniform" ? dbc::SizeLaw::kUniform : dbc::SizeLaw::kLongTail;
            spec.seed = synth_opts.seed;
            spec.validate();
            return cmd_synth(synth_opts, spec, synth_format);
        }
        if (cluster->parsed()) return cmd_cluster(cluster_opts);
        if (alternate->parsed()) return cmd_alternate(alt_opts, train_opts);
        if (ablate->parsed()) return cmd_ablate(ablate_opts);
        if (sweep->parsed()) return cmd_sweep_lambda(sweep_opts, lambdas);
        if (bench->parsed()) return cmd_bench_scaling(bench_opts, sizes);
    } catch (const dbc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const dbc::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
