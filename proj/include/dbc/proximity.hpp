#ifndef DBC_PROXIMITY_HPP
#define DBC_PROXIMITY_HPP

#include <cstddef>
#include <vector>

#include "dbc/cluster_state.hpp"
#include "dbc/distance.hpp"

namespace dbc {

// Symmetric C x C matrix of inter-cluster dispersions. The diagonal is
// unused. Stored square so row scans stay contiguous during merging.
struct ProximityMatrix {
    std::size_t n = 0;
    std::vector<double> values;

    ProximityMatrix() = default;
    explicit ProximityMatrix(std::size_t n_) : n(n_), values(n_ * n_, 0.0) {}

    double operator()(std::size_t a, std::size_t b) const { return values[a * n + b]; }
    double& at(std::size_t a, std::size_t b) { return values[a * n + b]; }
    const double* row(std::size_t a) const { return values.data() + a * n; }
};

// Builds the proximity matrix by a single grouped pass over the dense
// sample-level distance matrix (O(N^2) total), not by per-cluster-pair
// loops. With an all-singleton state this equals the distance matrix.
ProximityMatrix build_proximity(const ClusterState& state, const DistanceMatrix& dist);

}  // namespace dbc

#endif
