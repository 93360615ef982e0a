#include "dbc/distance.hpp"

#include <cmath>

#include "dbc/threading.hpp"

namespace dbc {

DistanceMatrix pairwise_distances(const FeatureStore& store) {
    store.validate();
    const std::size_t n = store.size();
    const std::size_t d = store.dim();
    const Matrix& x = store.features;

    DistanceMatrix out(n);
    // Upper triangle only; mirrored afterwards so symmetry is exact.
    parallel_for_blocks(0, n, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double* xi = x.row(i);
            double* oi = out.values.data() + i * n;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double* xj = x.row(j);
                double sq = 0.0;
                for (std::size_t k = 0; k < d; ++k) {
                    double diff = xi[k] - xj[k];
                    sq += diff * diff;
                }
                oi[j] = std::sqrt(sq);
            }
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) out.at(j, i) = out(i, j);
        out.at(i, i) = 0.0;
    }
    return out;
}

}  // namespace dbc
