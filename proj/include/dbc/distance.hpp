#ifndef DBC_DISTANCE_HPP
#define DBC_DISTANCE_HPP

#include <cstddef>
#include <vector>

#include "dbc/feature_store.hpp"

namespace dbc {

// Full N x N Euclidean distance matrix, materialized densely. Upper
// triangle is computed once and mirrored, so values[i][j] == values[j][i]
// holds exactly and the diagonal is zero.
struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // n * n

    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n_) : n(n_), values(n_ * n_, 0.0) {}

    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
    const double* row(std::size_t i) const { return values.data() + i * n; }
};

// Row blocks may be computed in parallel (DBC_THREADS caps workers); the
// result is read-only afterwards.
DistanceMatrix pairwise_distances(const FeatureStore& store);

}  // namespace dbc

#endif
