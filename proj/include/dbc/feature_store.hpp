#ifndef DBC_FEATURE_STORE_HPP
#define DBC_FEATURE_STORE_HPP

#include <string>
#include <vector>

#include "dbc/matrix.hpp"

namespace dbc {

// N x d embedding table with opaque per-sample ids. Ground-truth identity
// labels, when present, are for evaluation only; the clustering engine
// never reads them.
struct FeatureStore {
    Matrix features;                       // N x d
    std::vector<std::string> sample_ids;   // N, unique
    std::vector<int> ground_truth;         // N or empty
    bool normalized = false;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    bool has_ground_truth() const { return !ground_truth.empty(); }

    // Checks N >= 1, d >= 1, finite rows, unique ids, unit norms when the
    // normalized flag is set. Throws DataError naming the offending row.
    void validate() const;
};

// Returns a copy with every row scaled to unit Euclidean norm.
// Throws DataError naming the row if a row has zero norm.
FeatureStore normalize_rows(const FeatureStore& store);

// One output row per group: the arithmetic mean of the member rows.
// Group id is the first member's sample id. Unknown ids and empty groups
// are DataErrors.
FeatureStore pool_group_features(const FeatureStore& store,
                                 const std::vector<std::vector<std::string>>& groups);

}  // namespace dbc

#endif
