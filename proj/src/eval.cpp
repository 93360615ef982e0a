#include "dbc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "dbc/error.hpp"

namespace dbc {

namespace {

double euclidean(const double* a, const double* b, std::size_t d) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double diff = a[k] - b[k];
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

// gallery rows sorted by ascending distance to the query; ties keep
// gallery order (stable), so rankings are reproducible bit-exactly
std::vector<std::size_t> ranked_gallery(const RetrievalProtocol& protocol,
                                        const Matrix& features, std::size_t query_row) {
    const double* q = features.row(query_row);
    std::vector<double> dist(protocol.gallery_rows.size());
    for (std::size_t g = 0; g < protocol.gallery_rows.size(); ++g)
        dist[g] = euclidean(q, features.row(protocol.gallery_rows[g]), features.cols);
    std::vector<std::size_t> order(protocol.gallery_rows.size());
    for (std::size_t g = 0; g < order.size(); ++g) order[g] = g;
    std::stable_sort(order.begin(), order.end(),
                     [&dist](std::size_t x, std::size_t y) { return dist[x] < dist[y]; });
    return order;
}

}  // namespace

void RetrievalProtocol::validate(std::size_t num_rows) const {
    if (identities.size() != num_rows)
        throw DataError("protocol identity list does not cover all rows");
    if (query_rows.empty() || gallery_rows.empty())
        throw DataError("protocol needs nonempty query and gallery sets");
    std::unordered_set<std::size_t> gallery(gallery_rows.begin(), gallery_rows.end());
    std::unordered_set<int> gallery_ids;
    for (std::size_t g : gallery_rows) {
        if (g >= num_rows) throw DataError("gallery row out of range");
        gallery_ids.insert(identities[g]);
    }
    for (std::size_t q : query_rows) {
        if (q >= num_rows) throw DataError("query row out of range");
        if (gallery.count(q)) throw DataError("query and gallery sets overlap");
        if (!gallery_ids.count(identities[q]))
            throw DataError("query row " + std::to_string(q) + " (identity " +
                            std::to_string(identities[q]) + ") has no gallery match");
    }
}

RetrievalProtocol RetrievalProtocol::single_query_split(const std::vector<int>& identities) {
    RetrievalProtocol protocol;
    protocol.identities = identities;
    std::map<int, std::vector<std::size_t>> by_id;
    for (std::size_t i = 0; i < identities.size(); ++i) by_id[identities[i]].push_back(i);
    std::unordered_set<std::size_t> query_set;
    for (const auto& [id, rows] : by_id) {
        if (rows.size() < 2) continue;
        protocol.query_rows.push_back(rows.front());
        query_set.insert(rows.front());
    }
    for (std::size_t i = 0; i < identities.size(); ++i)
        if (!query_set.count(i)) protocol.gallery_rows.push_back(i);
    return protocol;
}

std::vector<double> cmc_rank_k(const RetrievalProtocol& protocol, const Matrix& features,
                               const std::vector<std::size_t>& ks) {
    protocol.validate(features.rows);
    std::vector<double> hits(ks.size(), 0.0);
    for (std::size_t query_row : protocol.query_rows) {
        const int id = protocol.identities[query_row];
        auto order = ranked_gallery(protocol, features, query_row);
        std::size_t first_match = order.size();
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (protocol.identities[protocol.gallery_rows[order[r]]] == id) {
                first_match = r;
                break;
            }
        }
        for (std::size_t k = 0; k < ks.size(); ++k)
            if (first_match < ks[k]) hits[k] += 1.0;
    }
    for (double& h : hits) h /= static_cast<double>(protocol.query_rows.size());
    return hits;
}

double mean_average_precision(const RetrievalProtocol& protocol, const Matrix& features) {
    protocol.validate(features.rows);
    double ap_sum = 0.0;
    for (std::size_t query_row : protocol.query_rows) {
        const int id = protocol.identities[query_row];
        auto order = ranked_gallery(protocol, features, query_row);
        std::size_t relevant_seen = 0;
        double precision_sum = 0.0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (protocol.identities[protocol.gallery_rows[order[r]]] == id) {
                ++relevant_seen;
                precision_sum +=
                    static_cast<double>(relevant_seen) / static_cast<double>(r + 1);
            }
        }
        ap_sum += precision_sum / static_cast<double>(relevant_seen);
    }
    return ap_sum / static_cast<double>(protocol.query_rows.size());
}

std::pair<double, double> partition_scores(const std::vector<int>& predicted,
                                           const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw DataError("partition_scores: label arrays differ in length");
    const std::size_t n = predicted.size();

    // pair counts via the contingency table
    std::map<std::pair<int, int>, std::size_t> joint;
    std::unordered_map<int, std::size_t> pred_sizes, true_sizes;
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[{predicted[i], truth[i]}];
        ++pred_sizes[predicted[i]];
        ++true_sizes[truth[i]];
    }
    auto pairs = [](std::size_t m) { return m * (m - 1) / 2; };
    std::size_t both = 0;
    for (const auto& [cell, count] : joint) both += pairs(count);
    std::size_t pred_pairs = 0, true_pairs = 0;
    for (const auto& [label, count] : pred_sizes) pred_pairs += pairs(count);
    for (const auto& [label, count] : true_sizes) true_pairs += pairs(count);

    double f1;
    if (pred_pairs == 0 && true_pairs == 0) {
        f1 = 1.0;  // neither partition co-clusters anything
    } else if (pred_pairs == 0 || true_pairs == 0 || both == 0) {
        f1 = 0.0;
    } else {
        const double precision = static_cast<double>(both) / static_cast<double>(pred_pairs);
        const double recall = static_cast<double>(both) / static_cast<double>(true_pairs);
        f1 = 2.0 * precision * recall / (precision + recall);
    }

    std::unordered_map<int, std::unordered_map<int, std::size_t>> overlap;
    for (std::size_t i = 0; i < n; ++i) ++overlap[predicted[i]][truth[i]];
    std::size_t majority = 0;
    for (const auto& [cluster, table] : overlap) {
        std::size_t best = 0;
        for (const auto& [id, count] : table) best = std::max(best, count);
        majority += best;
    }
    const double purity = static_cast<double>(majority) / static_cast<double>(n);
    return {f1, purity};
}

MetricReport evaluate(const RetrievalProtocol& protocol, const Matrix& features,
                      const std::vector<int>& predicted, const std::vector<int>& truth) {
    MetricReport report;
    auto cmc = cmc_rank_k(protocol, features, {1, 5, 10});
    report.rank1 = cmc[0];
    report.rank5 = cmc[1];
    report.rank10 = cmc[2];
    report.mAP = mean_average_precision(protocol, features);
    auto [f1, purity] = partition_scores(predicted, truth);
    report.pairwise_f1 = f1;
    report.purity = purity;
    return report;
}

std::string metric_report_json(const MetricReport& report) {
    nlohmann::ordered_json j;
    j["rank1"] = report.rank1;
    j["rank5"] = report.rank5;
    j["rank10"] = report.rank10;
    j["mAP"] = report.mAP;
    j["pairwise_f1"] = report.pairwise_f1;
    j["purity"] = report.purity;
    return j.dump(2);
}

void write_metric_report(const std::string& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << metric_report_json(report) << "\n";
}

}  // namespace dbc
