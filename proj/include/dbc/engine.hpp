#ifndef DBC_ENGINE_HPP
#define DBC_ENGINE_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dbc/cluster_state.hpp"
#include "dbc/distance.hpp"
#include "dbc/proximity.hpp"

namespace dbc {

enum class CriterionKind {
    kDispersion,            // inter dispersion + lambda * (d_a + d_b)
    kDispersionNoReg,       // inter dispersion only
    kSingleLinkage,         // min cross-cluster sample distance
    kSingleLinkageSizeReg,  // min cross distance + lambda * (n_a + n_b)
};

struct Criterion {
    CriterionKind kind = CriterionKind::kDispersion;
    double lambda = 0.5;
};

const char* criterion_name(CriterionKind kind);

// One greedy merge. cluster_a < cluster_b are ids at the time of the merge;
// the merged cluster keeps the smaller id and indices above cluster_b shift
// down by one, so a log replays deterministically.
struct MergeEvent {
    int stage = 0;
    int step = 0;
    int cluster_a = 0;
    int cluster_b = 0;
    double criterion_value = 0.0;
    int new_cluster_id = 0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

enum class StopRule {
    kMinClusters,  // stop at the first stage boundary with C <= target
    kPaperLoop,    // run stages while C > k
};

struct EngineConfig {
    double merge_percent = 0.05;  // m; k = round(m * N), fixed across stages
    Criterion criterion;
    IntraMode intra_mode = IntraMode::kPaperEq7;
    StopRule stop = StopRule::kPaperLoop;
    std::size_t target_clusters = 2;  // kMinClusters only

    // Throws ConfigError unless m is in (0,1) and round(m*N) >= 1.
    void validate(std::size_t num_samples) const;
};

std::size_t merge_batch_size(double merge_percent, std::size_t num_samples);

// Criterion value for a live cluster pair, evaluated from first principles
// (single-linkage kinds scan the cross pairs of the distance matrix).
// The engine's incremental bookkeeping must agree with this.
double criterion_value(const Criterion& crit, std::size_t a, std::size_t b,
                       const ClusterState& state, const ProximityMatrix& prox,
                       const DistanceMatrix& dist);

// Dense relabeling: y_i = j for every sample in cluster j.
std::vector<int> relabel(const ClusterState& state);

struct StageResult {
    ClusterState state;
    std::vector<MergeEvent> events;
};

// Sequential greedy agglomeration over a fixed distance matrix. Each stage
// performs exactly k merges; after every merge the proximity matrix row of
// the surviving cluster is rewritten (size-weighted average for dispersion
// criteria, minimum for single-linkage) and intra bookkeeping is updated
// per the configured mode.
//
// Ties on the criterion value prefer the pair with smaller d_a + d_b, then
// the lexicographically smaller (a, b).
class Engine {
public:
    Engine(const DistanceMatrix& dist, ClusterState initial, EngineConfig config);

    std::size_t merge_batch() const { return k_; }
    std::size_t cluster_count() const { return live_.size(); }

    bool can_run_stage() const { return cluster_count() > k_; }

    // Stop-rule check: whether another stage should run.
    bool should_continue() const;

    // Runs one stage of exactly k merges. Throws ConfigError when C <= k.
    StageResult run_stage(int stage_index);

    ClusterState snapshot() const;

private:
    struct Slot {
        std::vector<int> members;
        double pair_sum = 0.0;
        double dispersion = 0.0;
        bool alive = false;
        std::size_t size() const { return members.size(); }
    };

    // (value, tie d_a+d_b, slot_a, slot_b); lexicographic min wins. Slot
    // order matches dense-id order, so slot comparisons implement the
    // documented tie-break.
    struct PairKey {
        double value;
        double d_sum;
        int slot_a;
        int slot_b;
        bool operator<(const PairKey& o) const;
    };

    PairKey pair_key(int s, int t) const;
    void rescan_row(int s);
    MergeEvent merge_best(int stage_index, int step);
    double regularizer(const Slot& slot) const;
    int dense_id(int slot) const;

    const DistanceMatrix& dist_;
    EngineConfig config_;
    std::size_t k_ = 1;

    std::vector<Slot> slots_;
    std::vector<int> live_;  // ascending slot ids; dense id = position
    ProximityMatrix prox_;   // slot-indexed

    // per live slot: best partner under the pair key, kept exact
    std::vector<int> nn_slot_;
    std::vector<PairKey> nn_key_;
};

struct ClusterRunResult {
    ClusterState state;
    std::vector<MergeEvent> events;
    std::size_t stages = 0;
};

// Stage loop without any training in between (the distance matrix is fixed).
ClusterRunResult run_clustering(const DistanceMatrix& dist, ClusterState initial,
                                const EngineConfig& config);

// MergeLog lines: {"stage":..,"step":..,"a":..,"b":..,"value":..,
//                  "new_id":..,"n_a":..,"n_b":..}
void write_merge_log(std::ostream& out, const std::vector<MergeEvent>& events);
void write_merge_log(const std::string& path, const std::vector<MergeEvent>& events);

// Constructed 1-D instances used to probe criterion behavior.
struct Scenario {
    std::vector<double> points;  // 1-D features
    std::vector<int> labels;

    // Two singleton candidates and a two-point cluster arranged so both
    // candidate pairs have identical inter-dispersion.
    static Scenario singleton_priority();
    // A loose cluster adjacent to a compact one, with a farther compact
    // partner: d(loose, compact) < d(compact, far) but the loose cluster
    // carries high intra dispersion.
    static Scenario poor_clustering();
};

// First pair the engine would merge, as dense cluster ids.
std::pair<int, int> first_merge_pair(const Scenario& scenario, const Criterion& crit,
                                     IntraMode mode = IntraMode::kExact);

}  // namespace dbc

#endif
