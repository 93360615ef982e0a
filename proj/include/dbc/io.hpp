#ifndef DBC_IO_HPP
#define DBC_IO_HPP

#include <string>
#include <vector>

#include "dbc/feature_store.hpp"

namespace dbc {

// Feature file formats:
//   csv  — header "id,f0,...,f{d-1}[,label]", UTF-8, '.' decimal point.
//          A trailing "label" column carries integer ground truth.
//   dbcf — magic "DBCF", little-endian u32 N, u32 d, then N*d little-endian
//          float32 values; ids are implicit "0".."N-1".
// Ground truth can also ride in a sidecar TSV of "id<TAB>label" lines.

FeatureStore read_csv(const std::string& path);
void write_csv(const std::string& path, const FeatureStore& store);

FeatureStore read_dbcf(const std::string& path);
void write_dbcf(const std::string& path, const FeatureStore& store);

// Merges sidecar labels into store.ground_truth; every id must be known.
void read_labels_tsv(const std::string& path, FeatureStore& store);

// "id<TAB>label" lines, one per sample, in store row order.
void write_labels_tsv(const std::string& path,
                      const std::vector<std::string>& ids,
                      const std::vector<int>& labels);

}  // namespace dbc

#endif
