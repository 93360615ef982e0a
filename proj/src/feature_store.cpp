#include "dbc/feature_store.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "dbc/error.hpp"

namespace dbc {

void FeatureStore::validate() const {
    if (features.rows == 0 || features.cols == 0)
        throw DataError("feature store must have N >= 1 and d >= 1");
    if (sample_ids.size() != features.rows)
        throw DataError("sample id count does not match feature row count");
    if (!ground_truth.empty() && ground_truth.size() != features.rows)
        throw DataError("ground truth label count does not match feature row count");

    for (std::size_t i = 0; i < features.rows; ++i) {
        const double* r = features.row(i);
        for (std::size_t j = 0; j < features.cols; ++j) {
            if (!std::isfinite(r[j]))
                throw DataError("non-finite feature value in row " + std::to_string(i) +
                                " (id '" + sample_ids[i] + "')");
        }
    }

    std::unordered_set<std::string> seen;
    seen.reserve(sample_ids.size());
    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
        if (!seen.insert(sample_ids[i]).second)
            throw DataError("duplicate sample id '" + sample_ids[i] + "'");
    }

    if (normalized) {
        for (std::size_t i = 0; i < features.rows; ++i) {
            const double* r = features.row(i);
            double sq = 0.0;
            for (std::size_t j = 0; j < features.cols; ++j) sq += r[j] * r[j];
            if (std::abs(std::sqrt(sq) - 1.0) > 1e-6)
                throw DataError("row " + std::to_string(i) +
                                " violates the normalized flag (norm != 1)");
        }
    }
}

FeatureStore normalize_rows(const FeatureStore& store) {
    FeatureStore out = store;
    for (std::size_t i = 0; i < out.features.rows; ++i) {
        double* r = out.features.row(i);
        double sq = 0.0;
        for (std::size_t j = 0; j < out.features.cols; ++j) sq += r[j] * r[j];
        double norm = std::sqrt(sq);
        if (norm == 0.0)
            throw DataError("cannot normalize zero-norm row " + std::to_string(i) +
                            " (id '" + store.sample_ids[i] + "')");
        for (std::size_t j = 0; j < out.features.cols; ++j) r[j] /= norm;
    }
    out.normalized = true;
    return out;
}

FeatureStore pool_group_features(const FeatureStore& store,
                                 const std::vector<std::vector<std::string>>& groups) {
    std::unordered_map<std::string, std::size_t> row_of;
    row_of.reserve(store.size());
    for (std::size_t i = 0; i < store.sample_ids.size(); ++i) row_of[store.sample_ids[i]] = i;

    FeatureStore out;
    out.features = Matrix(groups.size(), store.dim());
    out.sample_ids.reserve(groups.size());
    const bool carry_truth = store.has_ground_truth();
    if (carry_truth) out.ground_truth.reserve(groups.size());

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& group = groups[g];
        if (group.empty()) throw DataError("group " + std::to_string(g) + " is empty");
        double* acc = out.features.row(g);
        for (const auto& id : group) {
            auto it = row_of.find(id);
            if (it == row_of.end()) throw DataError("unknown sample id '" + id + "'");
            const double* r = store.features.row(it->second);
            for (std::size_t j = 0; j < store.dim(); ++j) acc[j] += r[j];
        }
        for (std::size_t j = 0; j < store.dim(); ++j) acc[j] /= static_cast<double>(group.size());
        out.sample_ids.push_back(group.front());
        if (carry_truth) out.ground_truth.push_back(store.ground_truth[row_of[group.front()]]);
    }
    return out;
}

}  // namespace dbc
