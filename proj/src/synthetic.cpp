#include "dbc/synthetic.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "dbc/error.hpp"
#include "dbc/rng.hpp"

namespace dbc {

namespace {
constexpr std::size_t kMinCount = 2;  // a singleton identity is unidentifiable
}

void SyntheticSpec::validate() const {
    if (num_identities == 0) throw ConfigError("num_identities must be positive");
    if (dimension == 0) throw ConfigError("dimension must be positive");
    if (cluster_spread < 0.0) throw ConfigError("cluster_spread must be >= 0");
    if (ambient_scale <= 0.0) throw ConfigError("ambient_scale must be positive");
    if (avg_samples_per_id < kMinCount)
        throw ConfigError("avg_samples_per_id must be at least " + std::to_string(kMinCount));
    if (size_law == SizeLaw::kLongTail && power_exponent <= 0.0)
        throw ConfigError("long_tail exponent must be positive");
    if (num_identities * kMinCount > sample_cap)
        throw ConfigError("num_identities * minimum count " + std::to_string(kMinCount) +
                          " exceeds the sample cap of " + std::to_string(sample_cap));
}

std::vector<std::size_t> identity_counts(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t k = spec.num_identities;
    std::vector<std::size_t> counts(k, spec.avg_samples_per_id);
    if (spec.size_law == SizeLaw::kLongTail) {
        // counts ~ head * r^-gamma, head chosen so the unclamped mass matches
        // num_identities * avg_samples_per_id, then clamped to the minimum.
        double weight_sum = 0.0;
        for (std::size_t r = 1; r <= k; ++r)
            weight_sum += std::pow(static_cast<double>(r), -spec.power_exponent);
        const double head =
            static_cast<double>(k * spec.avg_samples_per_id) / weight_sum;
        for (std::size_t r = 1; r <= k; ++r) {
            double c = head * std::pow(static_cast<double>(r), -spec.power_exponent);
            counts[r - 1] = std::max(kMinCount, static_cast<std::size_t>(std::llround(c)));
        }
    }
    std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (total > spec.sample_cap)
        throw ConfigError("size law yields " + std::to_string(total) +
                          " samples, above the sample cap of " + std::to_string(spec.sample_cap));
    return counts;
}

FeatureStore generate_synthetic(const SyntheticSpec& spec) {
    const std::vector<std::size_t> counts = identity_counts(spec);
    const std::size_t k = spec.num_identities;
    const std::size_t d = spec.dimension;
    const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});

    Rng rng(spec.seed);
    const double min_sep = std::max(4.0 * spec.cluster_spread, 1e-9 * spec.ambient_scale);

    // Rejection-sample centroids in [0, L]^d; L doubles if the box cannot
    // host all identities at the required separation.
    Matrix centroids(k, d);
    double box = spec.ambient_scale;
    std::size_t placed = 0;
    std::size_t attempts = 0;
    const std::size_t max_attempts_per_id = 1000;
    while (placed < k) {
        double* c = centroids.row(placed);
        for (std::size_t j = 0; j < d; ++j) c[j] = rng.uniform(0.0, box);
        bool ok = true;
        for (std::size_t p = 0; p < placed && ok; ++p) {
            const double* other = centroids.row(p);
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double diff = c[j] - other[j];
                sq += diff * diff;
            }
            ok = sq >= min_sep * min_sep;
        }
        if (ok) {
            ++placed;
            attempts = 0;
        } else if (++attempts > max_attempts_per_id) {
            box *= 2.0;
            placed = 0;  // restart placement in the larger box
            attempts = 0;
        }
    }

    FeatureStore out;
    out.features = Matrix(total, d);
    out.sample_ids.reserve(total);
    out.ground_truth.reserve(total);
    std::size_t row = 0;
    for (std::size_t id = 0; id < k; ++id) {
        const double* c = centroids.row(id);
        for (std::size_t s = 0; s < counts[id]; ++s, ++row) {
            double* x = out.features.row(row);
            for (std::size_t j = 0; j < d; ++j) x[j] = c[j] + spec.cluster_spread * rng.normal();
            out.sample_ids.push_back(std::to_string(row));
            out.ground_truth.push_back(static_cast<int>(id));
        }
    }
    return out;
}

}  // namespace dbc
