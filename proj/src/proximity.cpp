#include "dbc/proximity.hpp"

#include "dbc/error.hpp"

namespace dbc {

ProximityMatrix build_proximity(const ClusterState& state, const DistanceMatrix& dist) {
    const std::size_t n = dist.n;
    const std::size_t c = state.cluster_count();
    if (state.labels.size() != n) throw DataError("state does not match distance matrix");

    ProximityMatrix prox(c);
    if (c == n) {
        // all singletons: inter dispersion degenerates to the sample distances
        prox.values = dist.values;
        return prox;
    }

    // one grouped pass over the upper triangle of the sample matrix
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = dist.row(i);
        const int ci = state.labels[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const int cj = state.labels[j];
            if (ci == cj) continue;
            prox.at(ci, cj) += row[j];
        }
    }
    for (std::size_t a = 0; a < c; ++a) {
        const double na = static_cast<double>(state.size_of(a));
        for (std::size_t b = a + 1; b < c; ++b) {
            const double sum = prox(a, b) + prox(b, a);
            const double v = sum / (na * static_cast<double>(state.size_of(b)));
            prox.at(a, b) = v;
            prox.at(b, a) = v;
        }
        prox.at(a, a) = 0.0;
    }
    return prox;
}

}  // namespace dbc
