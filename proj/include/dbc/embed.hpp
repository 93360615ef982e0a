#ifndef DBC_EMBED_HPP
#define DBC_EMBED_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dbc/cluster_state.hpp"
#include "dbc/engine.hpp"
#include "dbc/feature_store.hpp"
#include "dbc/matrix.hpp"

namespace dbc {

// Per-class centroid features driving the non-parametric softmax. Rows are
// renormalized to unit norm after every EMA update.
struct LookupTable {
    Matrix table;           // C x d
    double momentum = 0.5;  // in (0,1]; 1 leaves rows untouched
    double tau = 0.1;       // softmax temperature, > 0

    std::size_t classes() const { return table.rows; }
    std::size_t dim() const { return table.cols; }

    // Rows initialized to the normalized centroid of each class.
    static LookupTable from_centroids(const Matrix& features, const std::vector<int>& labels,
                                      std::size_t num_classes, double momentum, double tau);
};

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    double learning_rate = 0.1;
    std::size_t decay_epoch = 15;      // lr drops to decayed_rate from this epoch on
    double decayed_rate = 0.01;
    double tau = 0.1;                  // not stated by the source method; exposed as a flag
    double momentum = 0.5;             // EMA momentum, likewise a declared default
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError
};

// Softmax over class similarities: p_j = exp(V_j . v / tau) / sum_k exp(...).
// Computed with max-subtraction; entries are positive and sum to 1.
std::vector<double> repelled_probability(const double* v, const LookupTable& lut);

struct LossGrad {
    double loss = 0.0;  // mean over samples of -log p(y_i | v_i, V)
    Matrix grad;        // same shape as features; LUT held constant
};

LossGrad repelled_loss_and_gradient(const Matrix& features, const std::vector<int>& labels,
                                    const LookupTable& lut);

// V_{y_i} <- normalize(momentum * V_{y_i} + (1 - momentum) * v_i), applied
// sample by sample in batch order. Untouched rows are left as-is.
void lut_ema_update(LookupTable& lut, const Matrix& batch_features,
                    const std::vector<int>& batch_labels);

// One embedding-learning stage: LUT re-initialized from class centroids,
// then mini-batch gradient descent on the repelled loss over the free
// per-sample embedding rows, renormalizing after every step. Deterministic
// per config.seed. Returns (refined features, per-epoch mean loss).
struct TrainStageResult {
    FeatureStore store;
    std::vector<double> epoch_losses;
};

TrainStageResult train_stage(const FeatureStore& store, const std::vector<int>& labels,
                             const TrainConfig& config);

struct StageRecord {
    int stage = 0;
    std::size_t cluster_count = 0;
    double loss_final = 0.0;
    double perf = 0.0;
    double wall_ms = 0.0;
};

struct AlternateResult {
    FeatureStore best_store;
    ClusterState best_state;
    double best_perf = 0.0;
    int best_stage = -1;
    std::vector<StageRecord> history;
    std::vector<MergeEvent> events;  // all stages, in order
};

using EvalHook = std::function<double(const FeatureStore&, const ClusterState&)>;

// Validation performance: rank-1 on a one-query-per-identity split when
// ground truth exists, else a silhouette-style internal score (not part of
// the source method; documented fallback).
EvalHook default_eval_hook(const FeatureStore& store);

// Mean over samples of (b - a) / max(a, b) with a = mean intra-cluster
// distance and b = the closest other cluster's mean distance.
double internal_score(const Matrix& features, const std::vector<int>& labels);

// The alternating paradigm: train on current pseudo-labels, recompute
// distances, run one clustering stage, relabel; repeat while the engine's
// stop rule allows. Keeps the snapshot with the best hook score. With zero
// stages the input store is returned untouched under sample-specificity
// labels 0..N-1.
AlternateResult alternate(const FeatureStore& store, const EngineConfig& engine_config,
                          const TrainConfig& train_config, const EvalHook& hook);

// History serialization: JSON array of
// {stage, cluster_count, loss_final, perf, wall_ms} records.
std::string history_json(const std::vector<StageRecord>& history);
void write_history(const std::string& path, const std::vector<StageRecord>& history);

}  // namespace dbc

#endif
