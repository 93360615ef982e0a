#ifndef DBC_TESTS_HELPERS_HPP
#define DBC_TESTS_HELPERS_HPP

#include <string>
#include <vector>

#include "dbc/feature_store.hpp"
#include "dbc/rng.hpp"

namespace testing {

inline dbc::FeatureStore random_store(std::size_t n, std::size_t d, std::uint64_t seed,
                                      double lo = -1.0, double hi = 1.0) {
    dbc::Rng rng(seed);
    dbc::FeatureStore store;
    store.features = dbc::Matrix(n, d);
    for (double& v : store.features.data) v = rng.uniform(lo, hi);
    store.sample_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) store.sample_ids.push_back(std::to_string(i));
    return store;
}

inline dbc::FeatureStore store_1d(const std::vector<double>& points) {
    dbc::FeatureStore store;
    store.features = dbc::Matrix(points.size(), 1);
    for (std::size_t i = 0; i < points.size(); ++i) {
        store.features(i, 0) = points[i];
        store.sample_ids.push_back(std::to_string(i));
    }
    return store;
}

// random partition of n samples into exactly c nonempty clusters
inline std::vector<int> random_partition(std::size_t n, std::size_t c, dbc::Rng& rng) {
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < c; ++i) labels[i] = static_cast<int>(i);
    for (std::size_t i = c; i < n; ++i)
        labels[i] = static_cast<int>(rng.uniform_index(c));
    rng.shuffle(labels);
    return labels;
}

}  // namespace testing

#endif
