#include "dbc/embed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "dbc/distance.hpp"
#include "dbc/error.hpp"
#include "dbc/eval.hpp"
#include "dbc/proximity.hpp"
#include "dbc/rng.hpp"

namespace dbc {

namespace {

void normalize_row_inplace(double* row, std::size_t d) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += row[j] * row[j];
    const double norm = std::sqrt(sq);
    if (norm == 0.0) throw DataError("zero-norm row during renormalization");
    for (std::size_t j = 0; j < d; ++j) row[j] /= norm;
}

int num_classes_of(const std::vector<int>& labels) {
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) throw DataError("negative class label");
        max_label = std::max(max_label, l);
    }
    return max_label + 1;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (learning_rate < 0.0 || decayed_rate < 0.0)
        throw ConfigError("learning rates must be nonnegative");
    if (decay_epoch > epochs) throw ConfigError("decay_epoch must not exceed epochs");
    if (tau <= 0.0) throw ConfigError("temperature tau must be positive");
    if (momentum <= 0.0 || momentum > 1.0) throw ConfigError("momentum must lie in (0, 1]");
}

LookupTable LookupTable::from_centroids(const Matrix& features, const std::vector<int>& labels,
                                        std::size_t num_classes, double momentum, double tau) {
    LookupTable lut;
    lut.momentum = momentum;
    lut.tau = tau;
    lut.table = Matrix(num_classes, features.cols);
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t i = 0; i < features.rows; ++i) {
        const int y = labels[i];
        double* row = lut.table.row(static_cast<std::size_t>(y));
        const double* v = features.row(i);
        for (std::size_t j = 0; j < features.cols; ++j) row[j] += v[j];
        ++counts[y];
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (counts[c] == 0)
            throw DataError("class " + std::to_string(c) + " has no samples");
        normalize_row_inplace(lut.table.row(c), lut.table.cols);
    }
    return lut;
}

std::vector<double> repelled_probability(const double* v, const LookupTable& lut) {
    if (lut.tau <= 0.0) throw ConfigError("temperature tau must be positive");
    const std::size_t c = lut.classes();
    const std::size_t d = lut.dim();
    std::vector<double> logits(c);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
        const double* row = lut.table.row(j);
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += row[k] * v[k];
        logits[j] = dot / lut.tau;
        max_logit = std::max(max_logit, logits[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        logits[j] = std::exp(logits[j] - max_logit);
        denom += logits[j];
    }
    for (std::size_t j = 0; j < c; ++j) logits[j] /= denom;
    return logits;
}

LossGrad repelled_loss_and_gradient(const Matrix& features, const std::vector<int>& labels,
                                    const LookupTable& lut) {
    if (labels.size() != features.rows) throw DataError("label count != feature rows");
    const std::size_t n = features.rows;
    const std::size_t d = features.cols;
    const std::size_t c = lut.classes();

    LossGrad out;
    out.grad = Matrix(n, d);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw DataError("label " + std::to_string(y) + " out of range for " +
                            std::to_string(c) + " classes");
        std::vector<double> p = repelled_probability(features.row(i), lut);
        out.loss -= std::log(p[y]) * inv_n;

        // d loss / d v_i = (1 / (n * tau)) * sum_j (p_j - [j == y]) V_j
        p[y] -= 1.0;
        double* g = out.grad.row(i);
        const double scale = inv_n / lut.tau;
        for (std::size_t j = 0; j < c; ++j) {
            const double w = p[j] * scale;
            if (w == 0.0) continue;
            const double* row = lut.table.row(j);
            for (std::size_t k = 0; k < d; ++k) g[k] += w * row[k];
        }
    }
    return out;
}

void lut_ema_update(LookupTable& lut, const Matrix& batch_features,
                    const std::vector<int>& batch_labels) {
    if (batch_labels.size() != batch_features.rows)
        throw DataError("label count != feature rows");
    if (lut.momentum == 1.0) return;
    for (std::size_t i = 0; i < batch_features.rows; ++i) {
        const int y = batch_labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= lut.classes())
            throw DataError("label out of range in EMA update");
        double* row = lut.table.row(static_cast<std::size_t>(y));
        const double* v = batch_features.row(i);
        for (std::size_t k = 0; k < lut.dim(); ++k)
            row[k] = lut.momentum * row[k] + (1.0 - lut.momentum) * v[k];
        normalize_row_inplace(row, lut.dim());
    }
}

TrainStageResult train_stage(const FeatureStore& store, const std::vector<int>& labels,
                             const TrainConfig& config) {
    config.validate();
    if (labels.size() != store.size()) throw DataError("label count != store size");
    const int c = num_classes_of(labels);
    const std::size_t n = store.size();
    const std::size_t d = store.dim();

    TrainStageResult result;
    result.store = store;
    Matrix& x = result.store.features;

    LookupTable lut = LookupTable::from_centroids(x, labels, static_cast<std::size_t>(c),
                                                  config.momentum, config.tau);

    Rng rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    Matrix batch_x;
    std::vector<int> batch_y;
    result.epoch_losses.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = epoch >= config.decay_epoch ? config.decayed_rate
                                                      : config.learning_rate;
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            const std::size_t bsize = stop - start;
            batch_x = Matrix(bsize, d);
            batch_y.resize(bsize);
            for (std::size_t b = 0; b < bsize; ++b) {
                const std::size_t i = order[start + b];
                std::copy(x.row(i), x.row(i) + d, batch_x.row(b));
                batch_y[b] = labels[i];
            }

            LossGrad lg = repelled_loss_and_gradient(batch_x, batch_y, lut);
            epoch_loss += lg.loss;
            ++batches;

            if (lr != 0.0) {
                for (std::size_t b = 0; b < bsize; ++b) {
                    const std::size_t i = order[start + b];
                    double* row = x.row(i);
                    const double* g = lg.grad.row(b);
                    for (std::size_t k = 0; k < d; ++k) row[k] -= lr * g[k];
                    normalize_row_inplace(row, d);
                    std::copy(row, row + d, batch_x.row(b));
                }
            }
            lut_ema_update(lut, batch_x, batch_y);
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    }
    return result;
}

double internal_score(const Matrix& features, const std::vector<int>& labels) {
    const std::size_t n = features.rows;
    const int c = num_classes_of(labels);
    if (c < 2) return 0.0;

    FeatureStore tmp;
    tmp.features = features;
    tmp.sample_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) tmp.sample_ids[i] = std::to_string(i);
    DistanceMatrix dist = pairwise_distances(tmp);

    std::vector<std::size_t> sizes(c, 0);
    for (int l : labels) ++sizes[l];

    double total = 0.0;
    std::vector<double> mean_to(c);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(mean_to.begin(), mean_to.end(), 0.0);
        const double* row = dist.row(i);
        for (std::size_t j = 0; j < n; ++j) mean_to[labels[j]] += row[j];
        const int own = labels[i];
        double a = sizes[own] > 1
                       ? mean_to[own] / static_cast<double>(sizes[own] - 1)
                       : 0.0;
        double b = std::numeric_limits<double>::infinity();
        for (int k = 0; k < c; ++k) {
            if (k == own || sizes[k] == 0) continue;
            b = std::min(b, mean_to[k] / static_cast<double>(sizes[k]));
        }
        if (sizes[own] > 1 && std::isfinite(b) && std::max(a, b) > 0.0)
            total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

EvalHook default_eval_hook(const FeatureStore& store) {
    if (store.has_ground_truth()) {
        auto protocol = RetrievalProtocol::single_query_split(store.ground_truth);
        return [protocol](const FeatureStore& refined, const ClusterState&) {
            return cmc_rank_k(protocol, refined.features, {1})[0];
        };
    }
    return [](const FeatureStore& refined, const ClusterState& state) {
        return internal_score(refined.features, state.labels);
    };
}

AlternateResult alternate(const FeatureStore& store, const EngineConfig& engine_config,
                          const TrainConfig& train_config, const EvalHook& hook) {
    store.validate();
    train_config.validate();
    engine_config.validate(store.size());
    const std::size_t n = store.size();
    const std::size_t k = merge_batch_size(engine_config.merge_percent, n);

    AlternateResult result;
    result.best_store = store;
    result.best_state = ClusterState::singletons(n);
    result.best_perf = -std::numeric_limits<double>::infinity();

    auto continue_loop = [&](std::size_t cluster_count) {
        if (cluster_count <= k) return false;
        if (engine_config.stop == StopRule::kMinClusters)
            return cluster_count > engine_config.target_clusters;
        return true;
    };

    if (!continue_loop(n)) return result;  // zero stages: sample specificity as-is

    FeatureStore current = normalize_rows(store);
    std::vector<int> labels(n);
    std::iota(labels.begin(), labels.end(), 0);
    std::size_t cluster_count = n;

    TrainConfig stage_train = train_config;
    int stage = 0;
    while (continue_loop(cluster_count)) {
        const auto t0 = std::chrono::steady_clock::now();

        stage_train.seed = train_config.seed + static_cast<std::uint64_t>(stage);
        TrainStageResult trained = train_stage(current, labels, stage_train);
        current = std::move(trained.store);

        DistanceMatrix dist = pairwise_distances(current);
        ClusterState state = ClusterState::from_labels(labels, dist);
        Engine engine(dist, std::move(state), engine_config);
        StageResult sr = engine.run_stage(stage);
        for (auto& e : sr.events) result.events.push_back(e);
        labels = relabel(sr.state);
        cluster_count = sr.state.cluster_count();

        const double perf = hook(current, sr.state);
        const auto t1 = std::chrono::steady_clock::now();

        StageRecord record;
        record.stage = stage;
        record.cluster_count = cluster_count;
        record.loss_final = trained.epoch_losses.empty() ? 0.0 : trained.epoch_losses.back();
        record.perf = perf;
        record.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        result.history.push_back(record);

        if (perf > result.best_perf) {
            result.best_perf = perf;
            result.best_stage = stage;
            result.best_store = current;
            result.best_state = sr.state;
        }
        ++stage;
    }
    return result;
}

std::string history_json(const std::vector<StageRecord>& history) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : history) {
        nlohmann::ordered_json rec;
        rec["stage"] = r.stage;
        rec["cluster_count"] = r.cluster_count;
        rec["loss_final"] = r.loss_final;
        rec["perf"] = r.perf;
        rec["wall_ms"] = r.wall_ms;
        arr.push_back(rec);
    }
    return arr.dump(2);
}

void write_history(const std::string& path, const std::vector<StageRecord>& history) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << history_json(history) << "\n";
}

}  // namespace dbc
