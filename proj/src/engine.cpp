#include "dbc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include <json.hpp>

#include "dbc/error.hpp"

namespace dbc {

namespace {

// Single-linkage bookkeeping uses the same matrix slot, but entries hold
// the minimum cross-pair distance instead of the average.
ProximityMatrix build_min_proximity(const ClusterState& state, const DistanceMatrix& dist) {
    const std::size_t n = dist.n;
    const std::size_t c = state.cluster_count();
    ProximityMatrix prox(c);
    std::fill(prox.values.begin(), prox.values.end(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = dist.row(i);
        const int ci = state.labels[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const int cj = state.labels[j];
            if (ci == cj) continue;
            double& slot_ij = prox.at(ci, cj);
            if (row[j] < slot_ij) slot_ij = row[j];
        }
    }
    for (std::size_t a = 0; a < c; ++a) {
        for (std::size_t b = a + 1; b < c; ++b) {
            const double v = std::min(prox(a, b), prox(b, a));
            prox.at(a, b) = v;
            prox.at(b, a) = v;
        }
        prox.at(a, a) = 0.0;
    }
    return prox;
}

bool uses_min_linkage(CriterionKind kind) {
    return kind == CriterionKind::kSingleLinkage ||
           kind == CriterionKind::kSingleLinkageSizeReg;
}

double min_cross_distance(const std::vector<int>& a, const std::vector<int>& b,
                          const DistanceMatrix& dist) {
    double best = std::numeric_limits<double>::infinity();
    for (int i : a) {
        const double* row = dist.row(static_cast<std::size_t>(i));
        for (int j : b) best = std::min(best, row[j]);
    }
    return best;
}

}  // namespace

const char* criterion_name(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::kDispersion: return "dispersion";
        case CriterionKind::kDispersionNoReg: return "dispersion-noreg";
        case CriterionKind::kSingleLinkage: return "single";
        case CriterionKind::kSingleLinkageSizeReg: return "single-sizereg";
    }
    return "?";
}

std::size_t merge_batch_size(double merge_percent, std::size_t num_samples) {
    return static_cast<std::size_t>(
        std::llround(merge_percent * static_cast<double>(num_samples)));
}

void EngineConfig::validate(std::size_t num_samples) const {
    if (!(merge_percent > 0.0 && merge_percent < 1.0))
        throw ConfigError("merge_percent must lie in (0, 1)");
    if (criterion.lambda < 0.0) throw ConfigError("lambda must be >= 0");
    if (merge_batch_size(merge_percent, num_samples) < 1)
        throw ConfigError("merge batch k = round(m*N) is below 1 for N = " +
                          std::to_string(num_samples));
}

double criterion_value(const Criterion& crit, std::size_t a, std::size_t b,
                       const ClusterState& state, const ProximityMatrix& prox,
                       const DistanceMatrix& dist) {
    const std::size_t c = state.cluster_count();
    if (a == b || a >= c || b >= c)
        throw DataError("criterion_value on invalid cluster pair (" + std::to_string(a) + ", " +
                        std::to_string(b) + ")");
    switch (crit.kind) {
        case CriterionKind::kDispersion:
            return prox(a, b) + crit.lambda * (state.dispersions[a] + state.dispersions[b]);
        case CriterionKind::kDispersionNoReg:
            return prox(a, b);
        case CriterionKind::kSingleLinkage:
            return min_cross_distance(state.members[a], state.members[b], dist);
        case CriterionKind::kSingleLinkageSizeReg:
            return min_cross_distance(state.members[a], state.members[b], dist) +
                   crit.lambda * static_cast<double>(state.size_of(a) + state.size_of(b));
    }
    throw DataError("unknown criterion kind");
}

std::vector<int> relabel(const ClusterState& state) {
    std::vector<int> labels(state.num_samples(), -1);
    for (std::size_t j = 0; j < state.cluster_count(); ++j)
        for (int i : state.members[j]) labels[i] = static_cast<int>(j);
    return labels;
}

bool Engine::PairKey::operator<(const PairKey& o) const {
    if (value != o.value) return value < o.value;
    if (d_sum != o.d_sum) return d_sum < o.d_sum;
    if (slot_a != o.slot_a) return slot_a < o.slot_a;
    return slot_b < o.slot_b;
}

Engine::Engine(const DistanceMatrix& dist, ClusterState initial, EngineConfig config)
    : dist_(dist), config_(config) {
    config_.validate(initial.num_samples());
    k_ = merge_batch_size(config_.merge_percent, initial.num_samples());

    const std::size_t c = initial.cluster_count();
    slots_.resize(c);
    live_.resize(c);
    for (std::size_t j = 0; j < c; ++j) {
        slots_[j].members = std::move(initial.members[j]);
        slots_[j].pair_sum = initial.pair_sums[j];
        slots_[j].dispersion = initial.dispersions[j];
        slots_[j].alive = true;
        live_[j] = static_cast<int>(j);
    }

    ClusterState view;  // rebuild a label view for the proximity pass
    view.labels.assign(dist_.n, -1);
    view.members.resize(c);
    view.pair_sums.assign(c, 0.0);
    view.dispersions.assign(c, 0.0);
    for (std::size_t j = 0; j < c; ++j) {
        view.members[j] = slots_[j].members;
        for (int i : slots_[j].members) view.labels[i] = static_cast<int>(j);
    }
    prox_ = uses_min_linkage(config_.criterion.kind) ? build_min_proximity(view, dist_)
                                                     : build_proximity(view, dist_);

    nn_slot_.assign(c, -1);
    nn_key_.resize(c);
    for (int s : live_) rescan_row(s);
}

double Engine::regularizer(const Slot& slot) const {
    switch (config_.criterion.kind) {
        case CriterionKind::kDispersion:
            return config_.criterion.lambda * slot.dispersion;
        case CriterionKind::kSingleLinkageSizeReg:
            return config_.criterion.lambda * static_cast<double>(slot.size());
        default:
            return 0.0;
    }
}

Engine::PairKey Engine::pair_key(int s, int t) const {
    const int a = std::min(s, t);
    const int b = std::max(s, t);
    return PairKey{prox_(a, b) + regularizer(slots_[a]) + regularizer(slots_[b]),
                   slots_[a].dispersion + slots_[b].dispersion, a, b};
}

void Engine::rescan_row(int s) {
    PairKey best{std::numeric_limits<double>::infinity(),
                 std::numeric_limits<double>::infinity(), -1, -1};
    int best_slot = -1;
    for (int t : live_) {
        if (t == s) continue;
        PairKey key = pair_key(s, t);
        if (best_slot < 0 || key < best) {
            best = key;
            best_slot = t;
        }
    }
    nn_slot_[s] = best_slot;
    nn_key_[s] = best;
}

int Engine::dense_id(int slot) const {
    auto it = std::lower_bound(live_.begin(), live_.end(), slot);
    return static_cast<int>(it - live_.begin());
}

MergeEvent Engine::merge_best(int stage_index, int step) {
    // global argmin over cached row minima
    int best_row = -1;
    for (int s : live_) {
        if (nn_slot_[s] < 0) continue;
        if (best_row < 0 || nn_key_[s] < nn_key_[best_row]) best_row = s;
    }
    const PairKey key = nn_key_[best_row];
    const int sa = key.slot_a;
    const int sb = key.slot_b;
    Slot& a = slots_[sa];
    Slot& b = slots_[sb];

    MergeEvent event;
    event.stage = stage_index;
    event.step = step;
    event.cluster_a = dense_id(sa);
    event.cluster_b = dense_id(sb);
    event.criterion_value = key.value;
    event.new_cluster_id = event.cluster_a;
    event.n_a = a.size();
    event.n_b = b.size();

    // Average cross dispersion feeds the intra update; under single-linkage
    // bookkeeping the matrix holds minima, so it is recomputed directly.
    const double d_ab_avg = uses_min_linkage(config_.criterion.kind)
                                ? inter_dispersion(a.members, b.members, dist_)
                                : prox_(sa, sb);
    auto [pair_sum, dispersion] =
        update_intra_on_merge(a.dispersion, b.dispersion, d_ab_avg, a.size(), b.size(),
                              config_.intra_mode, a.pair_sum, b.pair_sum);

    const bool min_linkage = uses_min_linkage(config_.criterion.kind);
    for (int t : live_) {
        if (t == sa || t == sb) continue;
        const double merged = min_linkage
                                  ? std::min(prox_(sa, t), prox_(sb, t))
                                  : update_inter_on_merge(prox_(sa, t), prox_(sb, t),
                                                          a.size(), b.size());
        prox_.at(sa, t) = merged;
        prox_.at(t, sa) = merged;
    }

    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    a.pair_sum = pair_sum;
    a.dispersion = dispersion;
    b.alive = false;
    b.members.clear();
    b.members.shrink_to_fit();
    live_.erase(std::lower_bound(live_.begin(), live_.end(), sb));

    // cache repair: rows pointing at the merged pair rescan, everyone else
    // only needs the fresh pair against the surviving slot
    rescan_row(sa);
    for (int s : live_) {
        if (s == sa) continue;
        if (nn_slot_[s] == sa || nn_slot_[s] == sb) {
            rescan_row(s);
        } else {
            PairKey candidate = pair_key(s, sa);
            if (candidate < nn_key_[s]) {
                nn_key_[s] = candidate;
                nn_slot_[s] = sa;
            }
        }
    }
    return event;
}

StageResult Engine::run_stage(int stage_index) {
    if (!can_run_stage())
        throw ConfigError("stage refused: cluster count " + std::to_string(cluster_count()) +
                          " must exceed merge batch k = " + std::to_string(k_));
    StageResult result;
    result.events.reserve(k_);
    for (std::size_t step = 0; step < k_; ++step)
        result.events.push_back(merge_best(stage_index, static_cast<int>(step)));
    result.state = snapshot();
    return result;
}

bool Engine::should_continue() const {
    if (!can_run_stage()) return false;
    if (config_.stop == StopRule::kMinClusters)
        return cluster_count() > config_.target_clusters;
    return true;
}

ClusterState Engine::snapshot() const {
    ClusterState state;
    state.labels.assign(dist_.n, -1);
    state.members.reserve(live_.size());
    state.pair_sums.reserve(live_.size());
    state.dispersions.reserve(live_.size());
    for (int s : live_) {
        const Slot& slot = slots_[s];
        const int dense = static_cast<int>(state.members.size());
        for (int i : slot.members) state.labels[i] = dense;
        state.members.push_back(slot.members);
        state.pair_sums.push_back(slot.pair_sum);
        state.dispersions.push_back(slot.dispersion);
    }
    return state;
}

ClusterRunResult run_clustering(const DistanceMatrix& dist, ClusterState initial,
                                const EngineConfig& config) {
    Engine engine(dist, std::move(initial), config);
    ClusterRunResult result;
    int stage = 0;
    while (engine.should_continue()) {
        StageResult sr = engine.run_stage(stage++);
        result.state = std::move(sr.state);
        result.events.insert(result.events.end(), sr.events.begin(), sr.events.end());
    }
    result.stages = static_cast<std::size_t>(stage);
    if (stage == 0) result.state = engine.snapshot();
    return result;
}

void write_merge_log(std::ostream& out, const std::vector<MergeEvent>& events) {
    for (const auto& e : events) {
        nlohmann::ordered_json rec;
        rec["stage"] = e.stage;
        rec["step"] = e.step;
        rec["a"] = e.cluster_a;
        rec["b"] = e.cluster_b;
        rec["value"] = e.criterion_value;
        rec["new_id"] = e.new_cluster_id;
        rec["n_a"] = e.n_a;
        rec["n_b"] = e.n_b;
        out << rec.dump() << "\n";
    }
}

void write_merge_log(const std::string& path, const std::vector<MergeEvent>& events) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_merge_log(out, events);
}

Scenario Scenario::singleton_priority() {
    // two singletons at distance 4, and a compact pair whose average
    // distance to the middle singleton is also exactly 4
    return Scenario{{0.0, 4.0, 7.5, 8.5}, {0, 1, 2, 2}};
}

Scenario Scenario::poor_clustering() {
    // loose cluster {0,3}, compact cluster {5,5.25}, compact partner
    // {8.75,9}: the loose pair is nearer by inter dispersion alone
    return Scenario{{0.0, 3.0, 5.0, 5.25, 8.75, 9.0}, {0, 0, 1, 1, 2, 2}};
}

std::pair<int, int> first_merge_pair(const Scenario& scenario, const Criterion& crit,
                                     IntraMode mode) {
    FeatureStore store;
    store.features = Matrix(scenario.points.size(), 1);
    for (std::size_t i = 0; i < scenario.points.size(); ++i) {
        store.features(i, 0) = scenario.points[i];
        store.sample_ids.push_back(std::to_string(i));
    }
    DistanceMatrix dist = pairwise_distances(store);
    ClusterState state = ClusterState::from_labels(scenario.labels, dist);

    EngineConfig config;
    config.merge_percent = 0.9 / static_cast<double>(scenario.points.size());  // k = 1
    config.criterion = crit;
    config.intra_mode = mode;
    Engine engine(dist, std::move(state), config);
    StageResult sr = engine.run_stage(0);
    return {sr.events[0].cluster_a, sr.events[0].cluster_b};
}

}  // namespace dbc
