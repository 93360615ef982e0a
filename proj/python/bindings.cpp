#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "dbc/distance.hpp"
#include "dbc/embed.hpp"
#include "dbc/engine.hpp"
#include "dbc/error.hpp"
#include "dbc/eval.hpp"
#include "dbc/synthetic.hpp"

namespace py = pybind11;

namespace {

dbc::FeatureStore store_from_array(const py::array_t<double, py::array::c_style>& arr,
                                   const std::vector<int>& ground_truth = {}) {
    if (arr.ndim() != 2) throw dbc::DataError("features must be a 2-D array");
    dbc::FeatureStore store;
    store.features = dbc::Matrix(static_cast<std::size_t>(arr.shape(0)),
                                 static_cast<std::size_t>(arr.shape(1)));
    std::copy(arr.data(), arr.data() + arr.size(), store.features.data.begin());
    store.sample_ids.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) store.sample_ids.push_back(std::to_string(i));
    store.ground_truth = ground_truth;
    store.validate();
    return store;
}

py::array_t<double> matrix_to_array(const dbc::Matrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

py::array_t<int> labels_to_array(const std::vector<int>& labels) {
    py::array_t<int> out(static_cast<py::ssize_t>(labels.size()));
    std::copy(labels.begin(), labels.end(), out.mutable_data());
    return out;
}

dbc::Criterion make_criterion(const std::string& name, double lambda) {
    dbc::Criterion crit;
    crit.lambda = lambda;
    if (name == "dispersion") crit.kind = dbc::CriterionKind::kDispersion;
    else if (name == "dispersion-noreg") crit.kind = dbc::CriterionKind::kDispersionNoReg;
    else if (name == "single") crit.kind = dbc::CriterionKind::kSingleLinkage;
    else if (name == "single-sizereg") crit.kind = dbc::CriterionKind::kSingleLinkageSizeReg;
    else throw dbc::ConfigError("unknown criterion '" + name + "'");
    return crit;
}

dbc::EngineConfig make_engine_config(const std::string& criterion, double lambda,
                                     double merge_percent, const std::string& intra_mode,
                                     long long target_clusters) {
    dbc::EngineConfig config;
    config.criterion = make_criterion(criterion, lambda);
    config.merge_percent = merge_percent;
    config.intra_mode =
        intra_mode == "exact" ? dbc::IntraMode::kExact : dbc::IntraMode::kPaperEq7;
    if (target_clusters >= 0) {
        config.stop = dbc::StopRule::kMinClusters;
        config.target_clusters = static_cast<std::size_t>(target_clusters);
    }
    return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "dispersion-based agglomerative clustering core";

    py::register_exception<dbc::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<dbc::DataError>(m, "DataError", PyExc_ValueError);

    m.def(
        "pairwise_distances",
        [](const py::array_t<double, py::array::c_style>& features) {
            dbc::DistanceMatrix dist = dbc::pairwise_distances(store_from_array(features));
            py::array_t<double> out({dist.n, dist.n});
            std::copy(dist.values.begin(), dist.values.end(), out.mutable_data());
            return out;
        },
        py::arg("features"), "Full Euclidean distance matrix (symmetric, zero diagonal).");

    m.def(
        "normalize_rows",
        [](const py::array_t<double, py::array::c_style>& features) {
            return matrix_to_array(dbc::normalize_rows(store_from_array(features)).features);
        },
        py::arg("features"), "Copy with every row scaled to unit Euclidean norm.");

    m.def(
        "generate_synthetic",
        [](std::size_t num_identities, const std::string& law, double exponent,
           std::size_t avg_count, std::size_t dimension, double spread, double scale,
           std::uint64_t seed) {
            dbc::SyntheticSpec spec;
            spec.num_identities = num_identities;
            spec.size_law = law == "uniform" ? dbc::SizeLaw::kUniform : dbc::SizeLaw::kLongTail;
            spec.power_exponent = exponent;
            spec.avg_samples_per_id = avg_count;
            spec.dimension = dimension;
            spec.cluster_spread = spread;
            spec.ambient_scale = scale;
            spec.seed = seed;
            dbc::FeatureStore store = dbc::generate_synthetic(spec);
            return py::make_tuple(matrix_to_array(store.features),
                                  labels_to_array(store.ground_truth));
        },
        py::arg("num_identities") = 100, py::arg("law") = "longtail",
        py::arg("exponent") = 1.5, py::arg("avg_count") = 16, py::arg("dimension") = 16,
        py::arg("spread") = 1.0, py::arg("scale") = 40.0, py::arg("seed") = 0,
        "Gaussian-blob benchmark; returns (features, identity_labels).");

    m.def(
        "cluster",
        [](const py::array_t<double, py::array::c_style>& features,
           const std::string& criterion, double lambda, double merge_percent,
           const std::string& intra_mode, long long target_clusters) {
            dbc::FeatureStore store = store_from_array(features);
            dbc::EngineConfig config = make_engine_config(criterion, lambda, merge_percent,
                                                          intra_mode, target_clusters);
            config.validate(store.size());
            dbc::DistanceMatrix dist = dbc::pairwise_distances(store);
            auto result = dbc::run_clustering(
                dist, dbc::ClusterState::singletons(store.size()), config);
            return labels_to_array(result.state.labels);
        },
        py::arg("features"), py::arg("criterion") = "dispersion", py::arg("lambda_") = 0.5,
        py::arg("merge_percent") = 0.05, py::arg("intra_mode") = "paper",
        py::arg("target_clusters") = -1,
        "Agglomerate to the stop rule; returns cluster labels.");

    m.def(
        "alternate",
        [](const py::array_t<double, py::array::c_style>& features,
           const std::vector<int>& ground_truth, const std::string& criterion, double lambda,
           double merge_percent, const std::string& intra_mode, long long target_clusters,
           std::size_t epochs, std::size_t batch_size, double learning_rate, double tau,
           double momentum, std::uint64_t seed) {
            dbc::FeatureStore store = store_from_array(features, ground_truth);
            dbc::EngineConfig config = make_engine_config(criterion, lambda, merge_percent,
                                                          intra_mode, target_clusters);
            config.validate(store.size());
            dbc::TrainConfig train;
            train.epochs = epochs;
            train.batch_size = batch_size;
            train.learning_rate = learning_rate;
            train.decay_epoch = std::min<std::size_t>(train.decay_epoch, epochs);
            train.tau = tau;
            train.momentum = momentum;
            train.seed = seed;
            auto result = dbc::alternate(store, config, train, dbc::default_eval_hook(store));

            py::dict history;
            py::list records;
            for (const auto& r : result.history) {
                py::dict rec;
                rec["stage"] = r.stage;
                rec["cluster_count"] = r.cluster_count;
                rec["loss_final"] = r.loss_final;
                rec["perf"] = r.perf;
                records.append(rec);
            }
            py::dict out;
            out["labels"] = labels_to_array(result.best_state.labels);
            out["features"] = matrix_to_array(result.best_store.features);
            out["best_stage"] = result.best_stage;
            out["best_perf"] = result.best_perf;
            out["history"] = records;
            return out;
        },
        py::arg("features"), py::arg("ground_truth") = std::vector<int>{},
        py::arg("criterion") = "dispersion", py::arg("lambda_") = 0.5,
        py::arg("merge_percent") = 0.05, py::arg("intra_mode") = "paper",
        py::arg("target_clusters") = -1, py::arg("epochs") = 20, py::arg("batch_size") = 16,
        py::arg("learning_rate") = 0.1, py::arg("tau") = 0.1, py::arg("momentum") = 0.5,
        py::arg("seed") = 0,
        "Alternating train/cluster loop; returns the best-stage snapshot.");

    m.def(
        "partition_scores",
        [](const std::vector<int>& predicted, const std::vector<int>& truth) {
            auto [f1, purity] = dbc::partition_scores(predicted, truth);
            return py::make_tuple(f1, purity);
        },
        py::arg("predicted"), py::arg("truth"),
        "(pairwise F1, purity) between two label arrays.");

    m.def(
        "retrieval_metrics",
        [](const py::array_t<double, py::array::c_style>& features,
           const std::vector<int>& identities) {
            dbc::FeatureStore store = store_from_array(features, identities);
            auto protocol = dbc::RetrievalProtocol::single_query_split(identities);
            auto cmc = dbc::cmc_rank_k(protocol, store.features, {1, 5, 10});
            py::dict out;
            out["rank1"] = cmc[0];
            out["rank5"] = cmc[1];
            out["rank10"] = cmc[2];
            out["mAP"] = dbc::mean_average_precision(protocol, store.features);
            return out;
        },
        py::arg("features"), py::arg("identities"),
        "CMC rank-1/5/10 and mAP on a one-query-per-identity split.");
}
