#ifndef DBC_SYNTHETIC_HPP
#define DBC_SYNTHETIC_HPP

#include <cstdint>
#include <cstddef>

#include "dbc/feature_store.hpp"

namespace dbc {

enum class SizeLaw {
    kUniform,   // avg_samples_per_id samples for every identity
    kLongTail,  // counts follow a truncated power law, minimum count 2
};

// Gaussian-blob generator for desk-scale experiments. Identity centroids
// are drawn uniformly in [0, ambient_scale]^d with mutual distance at
// least 4 * cluster_spread; samples are isotropic normal around their
// centroid. Deterministic per seed.
struct SyntheticSpec {
    std::size_t num_identities = 100;
    SizeLaw size_law = SizeLaw::kLongTail;
    double power_exponent = 1.5;        // long_tail only
    std::size_t avg_samples_per_id = 16;
    std::size_t dimension = 16;
    double cluster_spread = 1.0;
    double ambient_scale = 40.0;
    std::uint64_t seed = 0;
    std::size_t sample_cap = 1u << 20;

    void validate() const;  // throws ConfigError
};

// Per-identity sample counts under the spec's size law. Long-tail counts
// are non-increasing with identity rank and never below 2.
std::vector<std::size_t> identity_counts(const SyntheticSpec& spec);

FeatureStore generate_synthetic(const SyntheticSpec& spec);

}  // namespace dbc

#endif
