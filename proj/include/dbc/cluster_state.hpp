#ifndef DBC_CLUSTER_STATE_HPP
#define DBC_CLUSTER_STATE_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "dbc/distance.hpp"

namespace dbc {

// How the intra-cluster dispersion of a merged cluster is carried forward.
//   kPaperEq7 — the incremental recurrence
//                 d_q = (n_a d_a + n_b d_b + n_a n_b d_ab) / (n_a + n_b + n_a n_b)
//   kExact    — pair-sum bookkeeping S_q = S_a + S_b + n_a n_b d_ab, with
//               d_q = S_q / n_q, which matches a from-scratch evaluation.
// The two are not algebraically equivalent; see update_intra_on_merge tests.
enum class IntraMode { kPaperEq7, kExact };

// Intra-cluster dispersion of a member set: the sum of distances over
// unordered member pairs and that sum divided by the member count.
// A singleton has no pairs, so both values are zero.
std::pair<double, double> intra_dispersion(const std::vector<int>& members,
                                           const DistanceMatrix& dist);

// Inter-cluster dispersion: average distance over all cross pairs.
// Symmetric in its arguments; overlapping sets are rejected.
double inter_dispersion(const std::vector<int>& members_a,
                        const std::vector<int>& members_b,
                        const DistanceMatrix& dist);

// Inter-dispersion of the merge of (a, b) against a bystander s, from the
// pre-merge entries alone: the size-weighted average
//   (n_a d_as + n_b d_bs) / (n_a + n_b).
double update_inter_on_merge(double d_as, double d_bs,
                             std::size_t n_a, std::size_t n_b);

// Intra dispersion of the merged cluster, as (pair_sum, dispersion).
// In kPaperEq7 mode the pair sum is still tracked exactly; only the
// dispersion follows the recurrence.
std::pair<double, double> update_intra_on_merge(double d_a, double d_b, double d_ab,
                                                std::size_t n_a, std::size_t n_b,
                                                IntraMode mode,
                                                double s_a = 0.0, double s_b = 0.0);

// Current partition: per-sample labels in [0, C) plus per-cluster member
// lists, exact pair sums and dispersions. Labels and member lists stay
// consistent; sizes sum to N.
struct ClusterState {
    std::vector<int> labels;                  // N
    std::vector<std::vector<int>> members;    // C lists, partitioning 0..N-1
    std::vector<double> pair_sums;            // C, exact sum over unordered pairs
    std::vector<double> dispersions;          // C, per the configured intra mode

    std::size_t cluster_count() const { return members.size(); }
    std::size_t num_samples() const { return labels.size(); }
    std::size_t size_of(std::size_t c) const { return members[c].size(); }

    static ClusterState singletons(std::size_t n);
    static ClusterState from_labels(const std::vector<int>& labels,
                                    const DistanceMatrix& dist);

    void validate() const;  // throws DataError on inconsistency
};

}  // namespace dbc

#endif
