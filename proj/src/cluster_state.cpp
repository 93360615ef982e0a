#include "dbc/cluster_state.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

#include "dbc/error.hpp"

namespace dbc {

std::pair<double, double> intra_dispersion(const std::vector<int>& members,
                                           const DistanceMatrix& dist) {
    if (members.empty()) throw DataError("intra_dispersion on empty member set");
    const std::size_t n = members.size();
    double pair_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = dist.row(static_cast<std::size_t>(members[i]));
        for (std::size_t j = i + 1; j < n; ++j) pair_sum += row[members[j]];
    }
    return {pair_sum, pair_sum / static_cast<double>(n)};
}

double inter_dispersion(const std::vector<int>& members_a, const std::vector<int>& members_b,
                        const DistanceMatrix& dist) {
    if (members_a.empty() || members_b.empty())
        throw DataError("inter_dispersion on empty member set");
    std::unordered_set<int> seen(members_a.begin(), members_a.end());
    for (int m : members_b)
        if (seen.count(m)) throw DataError("inter_dispersion on overlapping member sets");

    double sum = 0.0;
    for (int i : members_a) {
        const double* row = dist.row(static_cast<std::size_t>(i));
        for (int j : members_b) sum += row[j];
    }
    return sum / (static_cast<double>(members_a.size()) * static_cast<double>(members_b.size()));
}

double update_inter_on_merge(double d_as, double d_bs, std::size_t n_a, std::size_t n_b) {
    const double na = static_cast<double>(n_a);
    const double nb = static_cast<double>(n_b);
    return (na / (na + nb)) * d_as + (nb / (na + nb)) * d_bs;
}

std::pair<double, double> update_intra_on_merge(double d_a, double d_b, double d_ab,
                                                std::size_t n_a, std::size_t n_b, IntraMode mode,
                                                double s_a, double s_b) {
    const double na = static_cast<double>(n_a);
    const double nb = static_cast<double>(n_b);
    const double pair_sum = s_a + s_b + na * nb * d_ab;
    if (mode == IntraMode::kPaperEq7) {
        const double dispersion = (na * d_a + nb * d_b + na * nb * d_ab) / (na + nb + na * nb);
        return {pair_sum, dispersion};
    }
    return {pair_sum, pair_sum / (na + nb)};
}

ClusterState ClusterState::singletons(std::size_t n) {
    ClusterState state;
    state.labels.resize(n);
    state.members.resize(n);
    state.pair_sums.assign(n, 0.0);
    state.dispersions.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        state.labels[i] = static_cast<int>(i);
        state.members[i] = {static_cast<int>(i)};
    }
    return state;
}

ClusterState ClusterState::from_labels(const std::vector<int>& labels,
                                       const DistanceMatrix& dist) {
    if (labels.size() != dist.n) throw DataError("label count does not match distance matrix");
    int max_label = -1;
    for (int l : labels) {
        if (l < 0) throw DataError("negative cluster label");
        max_label = std::max(max_label, l);
    }
    const std::size_t c = static_cast<std::size_t>(max_label) + 1;

    ClusterState state;
    state.labels = labels;
    state.members.resize(c);
    for (std::size_t i = 0; i < labels.size(); ++i)
        state.members[labels[i]].push_back(static_cast<int>(i));
    for (const auto& m : state.members)
        if (m.empty()) throw DataError("labels are not a dense range [0, C)");

    state.pair_sums.resize(c);
    state.dispersions.resize(c);
    for (std::size_t j = 0; j < c; ++j) {
        auto [s, d] = intra_dispersion(state.members[j], dist);
        state.pair_sums[j] = s;
        state.dispersions[j] = d;
    }
    return state;
}

void ClusterState::validate() const {
    const std::size_t n = labels.size();
    const std::size_t c = members.size();
    if (pair_sums.size() != c || dispersions.size() != c)
        throw DataError("cluster state arrays disagree on cluster count");
    std::size_t covered = 0;
    std::vector<char> seen(n, 0);
    for (std::size_t j = 0; j < c; ++j) {
        if (members[j].empty()) throw DataError("empty cluster " + std::to_string(j));
        for (int i : members[j]) {
            if (i < 0 || static_cast<std::size_t>(i) >= n || seen[i])
                throw DataError("member lists do not partition the samples");
            seen[i] = 1;
            if (labels[i] != static_cast<int>(j))
                throw DataError("label of sample " + std::to_string(i) +
                                " disagrees with member list");
            ++covered;
        }
        if (members[j].size() == 1 && (pair_sums[j] != 0.0 || dispersions[j] != 0.0))
            throw DataError("singleton cluster " + std::to_string(j) +
                            " must have zero dispersion");
    }
    if (covered != n) throw DataError("member lists do not cover all samples");
}

}  // namespace dbc
