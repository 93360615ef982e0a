#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dbc/distance.hpp"
#include "dbc/embed.hpp"
#include "dbc/error.hpp"
#include "dbc/synthetic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace dbc;

namespace {

LookupTable random_unit_lut(std::size_t c, std::size_t d, std::uint64_t seed, double tau = 0.1,
                            double momentum = 0.5) {
    Rng rng(seed);
    LookupTable lut;
    lut.tau = tau;
    lut.momentum = momentum;
    lut.table = Matrix(c, d);
    for (double& v : lut.table.data) v = rng.normal();
    for (std::size_t i = 0; i < c; ++i) {
        double* row = lut.table.row(i);
        double sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) sq += row[j] * row[j];
        for (std::size_t j = 0; j < d; ++j) row[j] /= std::sqrt(sq);
    }
    return lut;
}

Matrix random_unit_features(std::size_t n, std::size_t d, std::uint64_t seed) {
    return normalize_rows(testing::random_store(n, d, seed, -1.0, 1.0)).features;
}

}  // namespace

TEST_CASE("repelled_probability: orthonormal LUT with v = V_0 gives e/(e+1) at tau 1") {
    LookupTable lut;
    lut.tau = 1.0;
    lut.table = Matrix(2, 2);
    lut.table(0, 0) = 1.0;
    lut.table(1, 1) = 1.0;
    const double v[2] = {1.0, 0.0};
    auto p = repelled_probability(v, lut);
    const double e = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-9));
    CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("repelled_probability: identical LUT rows give the uniform distribution") {
    LookupTable lut;
    lut.tau = 0.25;
    lut.table = Matrix(5, 3);
    for (std::size_t i = 0; i < 5; ++i) {
        lut.table(i, 0) = 0.6;
        lut.table(i, 1) = 0.8;
        lut.table(i, 2) = 0.0;
    }
    const double v[3] = {0.0, 1.0, 0.0};
    auto p = repelled_probability(v, lut);
    for (double pi : p) CHECK(pi == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("repelled_probability: small tau approaches one-hot") {
    LookupTable lut = random_unit_lut(4, 8, 3, 1e-3);
    Matrix features = random_unit_features(1, 8, 4);
    auto p = repelled_probability(features.row(0), lut);
    CHECK(*std::max_element(p.begin(), p.end()) > 0.999);
}

TEST_CASE("repelled_probability: rejects non-positive tau") {
    LookupTable lut = random_unit_lut(3, 4, 5);
    lut.tau = 0.0;
    Matrix features = random_unit_features(1, 4, 6);
    CHECK_THROWS_AS(repelled_probability(features.row(0), lut), ConfigError);
}

TEST_CASE("repelled_probability: entries positive, summing to one") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        LookupTable lut = random_unit_lut(6, 5, seed);
        Matrix features = random_unit_features(3, 5, seed + 50);
        for (std::size_t i = 0; i < 3; ++i) {
            auto p = repelled_probability(features.row(i), lut);
            double sum = std::accumulate(p.begin(), p.end(), 0.0);
            CHECK(std::abs(sum - 1.0) <= 1e-9);
            for (double pi : p) CHECK(pi > 0.0);
        }
    }
}

TEST_CASE("repelled_probability: extreme logits do not overflow") {
    LookupTable lut;
    lut.tau = 1e-6;  // logits on the order of 1e6
    lut.table = Matrix(3, 2);
    lut.table(0, 0) = 1.0;
    lut.table(1, 0) = -1.0;
    lut.table(2, 1) = 1.0;
    const double v[2] = {1.0, 0.0};
    auto p = repelled_probability(v, lut);
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) <= 1e-9);
}

TEST_CASE("repelled_loss: perfect alignment at small tau is near zero") {
    LookupTable lut;
    lut.tau = 0.05;
    lut.table = Matrix(3, 3);
    for (std::size_t i = 0; i < 3; ++i) lut.table(i, i) = 1.0;
    Matrix features(3, 3);
    for (std::size_t i = 0; i < 3; ++i) features(i, i) = 1.0;
    LossGrad lg = repelled_loss_and_gradient(features, {0, 1, 2}, lut);
    CHECK(lg.loss < 1e-6);
}

TEST_CASE("repelled_loss: uniform LUT gives exactly log C") {
    LookupTable lut;
    lut.tau = 0.1;
    const std::size_t c = 7;
    lut.table = Matrix(c, 2);
    for (std::size_t i = 0; i < c; ++i) {
        lut.table(i, 0) = 0.6;
        lut.table(i, 1) = 0.8;
    }
    Matrix features = random_unit_features(4, 2, 11);
    LossGrad lg = repelled_loss_and_gradient(features, {0, 3, 6, 2}, lut);
    CHECK(lg.loss == doctest::Approx(std::log(static_cast<double>(c))).epsilon(1e-12));
}

TEST_CASE("repelled_loss: label out of range is rejected") {
    LookupTable lut = random_unit_lut(3, 4, 13);
    Matrix features = random_unit_features(2, 4, 14);
    CHECK_THROWS_AS(repelled_loss_and_gradient(features, {0, 3}, lut), DataError);
    CHECK_THROWS_AS(repelled_loss_and_gradient(features, {-1, 0}, lut), DataError);
}

TEST_CASE("repelled_loss: analytic gradient matches central finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t n = 10, d = 8, c = 4;
        LookupTable lut = random_unit_lut(c, d, seed * 3 + 1);
        Matrix features = random_unit_features(n, d, seed * 3 + 2);
        std::vector<int> labels(n);
        Rng rng(seed * 3 + 3);
        for (int& l : labels) l = static_cast<int>(rng.uniform_index(c));

        LossGrad lg = repelled_loss_and_gradient(features, labels, lut);

        auto loss_of = [&](const std::vector<double>& flat) {
            Matrix m = features;
            m.data = flat;
            return repelled_loss_and_gradient(m, labels, lut).loss;
        };
        auto fd = oracle::finite_difference_gradient(loss_of, features.data, 1e-5);

        double max_abs = 0.0, max_diff = 0.0;
        for (std::size_t i = 0; i < fd.size(); ++i) {
            max_abs = std::max(max_abs, std::abs(lg.grad.data[i]));
            max_diff = std::max(max_diff, std::abs(lg.grad.data[i] - fd[i]));
        }
        CHECK(max_diff / std::max(1.0, max_abs) < 1e-5);
    }
}

TEST_CASE("lut_ema_update: momentum 1 leaves the LUT unchanged") {
    LookupTable lut = random_unit_lut(3, 4, 17, 0.1, 1.0);
    Matrix before = lut.table;
    Matrix batch = random_unit_features(3, 4, 18);
    lut_ema_update(lut, batch, {0, 1, 2});
    CHECK(lut.table.data == before.data);
}

TEST_CASE("lut_ema_update: momentum 0 replaces touched rows") {
    LookupTable lut = random_unit_lut(4, 3, 19, 0.1, 1.0);
    lut.momentum = 0.0;
    Matrix batch = random_unit_features(2, 3, 20);
    Matrix before = lut.table;
    lut_ema_update(lut, batch, {2, 0});
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(lut.table(2, j) == doctest::Approx(batch(0, j)).epsilon(1e-12));
        CHECK(lut.table(0, j) == doctest::Approx(batch(1, j)).epsilon(1e-12));
        CHECK(lut.table(1, j) == before(1, j));  // untouched rows stay put
        CHECK(lut.table(3, j) == before(3, j));
    }
}

TEST_CASE("lut_ema_update: repeated updates converge to the class direction") {
    LookupTable lut = random_unit_lut(1, 6, 21, 0.1, 0.5);
    Matrix target = random_unit_features(1, 6, 22);
    auto distance_to_target = [&]() {
        double sq = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            double diff = lut.table(0, j) - target(0, j);
            sq += diff * diff;
        }
        return std::sqrt(sq);
    };
    double prev = distance_to_target();
    for (int it = 0; it < 30; ++it) {
        lut_ema_update(lut, target, {0});
        double now = distance_to_target();
        if (prev > 1e-12) CHECK(now < prev);
        prev = now;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("train_stage: zero learning rate is a bit-exact no-op on features") {
    FeatureStore store = normalize_rows(testing::random_store(20, 6, 23));
    std::vector<int> labels(20);
    for (std::size_t i = 0; i < 20; ++i) labels[i] = static_cast<int>(i % 4);
    TrainConfig config;
    config.epochs = 3;
    config.learning_rate = 0.0;
    config.decayed_rate = 0.0;
    config.decay_epoch = 2;
    TrainStageResult result = train_stage(store, labels, config);
    CHECK(result.store.features.data == store.features.data);
}

TEST_CASE("train_stage: compacts well-separated classes") {
    SyntheticSpec spec;
    spec.num_identities = 2;
    spec.size_law = SizeLaw::kUniform;
    spec.avg_samples_per_id = 12;
    spec.dimension = 8;
    spec.cluster_spread = 0.5;
    spec.ambient_scale = 20.0;
    spec.seed = 29;
    FeatureStore store = normalize_rows(generate_synthetic(spec));

    auto mean_within = [&](const FeatureStore& s) {
        DistanceMatrix dist = pairwise_distances(s);
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = i + 1; j < s.size(); ++j)
                if (s.ground_truth[i] == s.ground_truth[j]) {
                    sum += dist(i, j);
                    ++count;
                }
        return sum / static_cast<double>(count);
    };

    TrainConfig config;
    config.seed = 31;
    TrainStageResult result = train_stage(store, store.ground_truth, config);
    CHECK(mean_within(result.store) < mean_within(store));
}

TEST_CASE("train_stage: per-epoch loss is mostly non-increasing") {
    SyntheticSpec spec;
    spec.num_identities = 20;
    spec.size_law = SizeLaw::kUniform;
    spec.avg_samples_per_id = 16;
    spec.dimension = 16;
    spec.cluster_spread = 1.0;
    spec.ambient_scale = 40.0;
    spec.seed = 37;
    FeatureStore store = normalize_rows(generate_synthetic(spec));

    TrainConfig config;
    config.seed = 41;
    TrainStageResult result = train_stage(store, store.ground_truth, config);
    REQUIRE(result.epoch_losses.size() == config.epochs);
    std::size_t non_increasing = 0;
    for (std::size_t e = 1; e < result.epoch_losses.size(); ++e)
        if (result.epoch_losses[e] <= result.epoch_losses[e - 1] + 1e-12) ++non_increasing;
    CHECK(static_cast<double>(non_increasing) >=
          0.9 * static_cast<double>(result.epoch_losses.size() - 1));
}

TEST_CASE("train_stage: rows stay unit norm and runs are seed-deterministic") {
    FeatureStore store = normalize_rows(testing::random_store(18, 5, 43, -2.0, 2.0));
    std::vector<int> labels(18);
    for (std::size_t i = 0; i < 18; ++i) labels[i] = static_cast<int>(i % 3);
    TrainConfig config;
    config.epochs = 5;
    config.decay_epoch = 4;
    config.seed = 47;

    TrainStageResult a = train_stage(store, labels, config);
    TrainStageResult b = train_stage(store, labels, config);
    CHECK(a.store.features.data == b.store.features.data);
    CHECK(a.epoch_losses == b.epoch_losses);

    for (std::size_t i = 0; i < a.store.size(); ++i) {
        double sq = 0.0;
        for (std::size_t j = 0; j < a.store.dim(); ++j)
            sq += a.store.features(i, j) * a.store.features(i, j);
        CHECK(std::abs(std::sqrt(sq) - 1.0) < 1e-6);
    }

    TrainConfig other = config;
    other.seed = 48;
    TrainStageResult c = train_stage(store, labels, other);
    CHECK(a.store.features.data != c.store.features.data);
}

TEST_CASE("train_stage: empty class is rejected") {
    FeatureStore store = normalize_rows(testing::random_store(6, 4, 53));
    // class 1 never appears: labels are not a dense range
    std::vector<int> labels = {0, 0, 2, 2, 2, 0};
    TrainConfig config;
    config.epochs = 1;
    config.decay_epoch = 1;
    CHECK_THROWS_AS(train_stage(store, labels, config), DataError);
}

TEST_CASE("alternate: zero stages returns sample specificity untouched") {
    FeatureStore store = testing::random_store(12, 4, 59);
    EngineConfig engine_config;
    engine_config.merge_percent = 0.1;
    engine_config.stop = StopRule::kMinClusters;
    engine_config.target_clusters = 12;  // already satisfied
    TrainConfig train_config;

    AlternateResult result =
        alternate(store, engine_config, train_config, default_eval_hook(store));
    CHECK(result.history.empty());
    CHECK(result.best_stage == -1);
    CHECK(result.best_store.features.data == store.features.data);
    std::vector<int> expected(12);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(result.best_state.labels == expected);
}

TEST_CASE("alternate: history bookkeeping matches the stage loop") {
    SyntheticSpec spec;
    spec.num_identities = 6;
    spec.size_law = SizeLaw::kUniform;
    spec.avg_samples_per_id = 8;
    spec.dimension = 6;
    spec.cluster_spread = 0.4;
    spec.ambient_scale = 20.0;
    spec.seed = 61;
    FeatureStore store = generate_synthetic(spec);  // 48 samples

    EngineConfig engine_config;
    engine_config.merge_percent = 0.25;  // k = 12
    engine_config.stop = StopRule::kMinClusters;
    engine_config.target_clusters = 12;
    TrainConfig train_config;
    train_config.epochs = 2;
    train_config.decay_epoch = 2;
    train_config.seed = 67;

    AlternateResult result =
        alternate(store, engine_config, train_config, default_eval_hook(store));
    // 48 -> 36 -> 24 -> 12: three stages, each shrinking by k
    REQUIRE(result.history.size() == 3);
    std::size_t expected_count = 48;
    for (const auto& record : result.history) {
        expected_count -= 12;
        CHECK(record.cluster_count == expected_count);
    }
    CHECK(result.events.size() == 36);
    CHECK(result.best_stage >= 0);
    // best perf is the max of history perfs
    double best = -1.0;
    for (const auto& record : result.history) best = std::max(best, record.perf);
    CHECK(result.best_perf == doctest::Approx(best));
}

TEST_CASE("alternate: deterministic histories for identical seeds") {
    SyntheticSpec spec;
    spec.num_identities = 4;
    spec.size_law = SizeLaw::kUniform;
    spec.avg_samples_per_id = 6;
    spec.dimension = 5;
    spec.cluster_spread = 0.5;
    spec.ambient_scale = 15.0;
    spec.seed = 71;
    FeatureStore store = generate_synthetic(spec);

    EngineConfig engine_config;
    engine_config.merge_percent = 0.25;
    engine_config.stop = StopRule::kMinClusters;
    engine_config.target_clusters = 6;
    TrainConfig train_config;
    train_config.epochs = 2;
    train_config.decay_epoch = 2;
    train_config.seed = 73;

    AlternateResult a = alternate(store, engine_config, train_config, default_eval_hook(store));
    AlternateResult b = alternate(store, engine_config, train_config, default_eval_hook(store));
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t s = 0; s < a.history.size(); ++s) {
        CHECK(a.history[s].perf == b.history[s].perf);
        CHECK(a.history[s].loss_final == b.history[s].loss_final);
        CHECK(a.history[s].cluster_count == b.history[s].cluster_count);
    }
    CHECK(a.best_store.features.data == b.best_store.features.data);
}

TEST_CASE("history serialization carries the documented fields") {
    std::vector<StageRecord> history = {{0, 90, 1.25, 0.5, 10.0}, {1, 80, 1.0, 0.75, 12.0}};
    std::string json = history_json(history);
    CHECK(json.find("\"stage\"") != std::string::npos);
    CHECK(json.find("\"cluster_count\"") != std::string::npos);
    CHECK(json.find("\"loss_final\"") != std::string::npos);
    CHECK(json.find("\"perf\"") != std::string::npos);
    CHECK(json.find("\"wall_ms\"") != std::string::npos);
}
