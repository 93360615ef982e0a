#ifndef DBC_EVAL_HPP
#define DBC_EVAL_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "dbc/feature_store.hpp"

namespace dbc {

// Query/gallery split over rows of one feature store. Queries and galleries
// are disjoint; every query identity must appear in the gallery. Ranking is
// by ascending Euclidean distance with ties broken by gallery order.
struct RetrievalProtocol {
    std::vector<std::size_t> query_rows;
    std::vector<std::size_t> gallery_rows;
    std::vector<int> identities;  // per store row

    void validate(std::size_t num_rows) const;  // throws DataError

    // One query per identity with >= 2 samples (its first row), remaining
    // rows as gallery.
    static RetrievalProtocol single_query_split(const std::vector<int>& identities);
};

struct MetricReport {
    double rank1 = 0.0;
    double rank5 = 0.0;
    double rank10 = 0.0;
    double mAP = 0.0;
    double pairwise_f1 = 0.0;
    double purity = 0.0;
};

// CMC accuracy at each requested k: fraction of queries whose identity
// appears among the k nearest gallery rows.
std::vector<double> cmc_rank_k(const RetrievalProtocol& protocol, const Matrix& features,
                               const std::vector<std::size_t>& ks);

// Mean over queries of average precision of the ranked gallery list.
double mean_average_precision(const RetrievalProtocol& protocol, const Matrix& features);

// Pairwise F1 over co-clustered sample pairs plus cluster purity, both
// invariant to label permutation. An all-singleton prediction scores F1 = 0
// against any partition with a co-clustered pair; two partitions with no
// co-clustered pairs at all agree perfectly (F1 = 1).
std::pair<double, double> partition_scores(const std::vector<int>& predicted,
                                           const std::vector<int>& truth);

// rank-1/5/10 + mAP from the protocol, partition scores from the labels.
MetricReport evaluate(const RetrievalProtocol& protocol, const Matrix& features,
                      const std::vector<int>& predicted, const std::vector<int>& truth);

// Flat JSON object with keys rank1, rank5, rank10, mAP, pairwise_f1, purity.
std::string metric_report_json(const MetricReport& report);
void write_metric_report(const std::string& path, const MetricReport& report);

}  // namespace dbc

#endif
