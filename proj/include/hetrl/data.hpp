#pragma once

#include "hetrl/mdp.hpp"
#include "hetrl/policy.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hetrl {

/// One logged step. For games `action` is the joint index a1 * A2 + a2.
struct Step {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;

    bool operator==(const Step&) const = default;
};

/// K length-H trajectories collected from one source.
struct SourceDataset {
    int source_id = 0;
    Shape shape;
    int num_trajectories = 0;
    std::vector<Step> steps; ///< indexed k * H + h

    const Step& at(int k, int h) const { return steps[std::size_t(k) * shape.horizon + h]; }
    bool operator==(const SourceDataset&) const = default;
};

struct TransitionSample {
    int step = 0;
    Step data;
};

/// Unordered transition samples; what the two-fold subsampling produces and
/// what counting consumes.
struct TransitionSet {
    int source_id = 0;
    Shape shape;
    std::vector<TransitionSample> samples;
};

/// Trajectories drawn by s_0 ~ xi, a_h ~ behavior, r = r_h(s, a), s' ~ P_h(.|s, a).
/// Throws InputError if K < 1 and ShapeError on mismatched policy or xi.
SourceDataset sample_dataset(const EpisodicMdp& source, const Policy& behavior, const InitDist& xi,
                             int num_trajectories, std::uint64_t seed, int source_id = 0);

struct SubsampleConfig {
    double trim_constant = 10.0; ///< T in N_trim = N_aux - T sqrt(N_aux log(K H L / delta))
    double delta = 0.05;
    int num_sources = 1;         ///< L used inside the log
};

/// Split-and-trim subsampling. Every trajectory goes to the auxiliary or the
/// main half by a fair coin. Per (h, s, a) the budget is
///
///     N_trim = max(0, N_aux - T sqrt(N_aux log(K H L / delta)))
///
/// and the first min(N_trim, N_main) main-half samples at that tuple, in
/// trajectory order, are kept. Throws InputError if K < 2 or delta is not in (0, 1).
TransitionSet two_fold_subsample(const SourceDataset& dataset, const SubsampleConfig& cfg,
                                 std::uint64_t seed);

/// Every step of every trajectory, unchanged.
TransitionSet flatten(const SourceDataset& dataset);

/// N_h(s, a), N_h(s, a, s') and the range of rewards seen at each (h, s, a).
struct VisitCounts {
    Shape shape;
    std::vector<std::int64_t> sa;  ///< indexed like Shape::sa
    std::vector<std::int64_t> sas; ///< indexed like Shape::sas
    numvec reward_lo;              ///< +inf where unvisited
    numvec reward_hi;              ///< -inf where unvisited
    numvec reward_sum;

    explicit VisitCounts(Shape shape);
    std::int64_t n(int h, int s, int a) const { return sa[shape.sa(h, s, a)]; }
    std::int64_t n(int h, int s, int a, int next) const { return sas[shape.sas(h, s, a, next)]; }
};

VisitCounts count_visits(const TransitionSet& samples);
VisitCounts count_visits(const SourceDataset& dataset);

/**
 * Aggregate of L per-source empirical models. At each (h, s, a) the active set
 * is the sources with at least one visit; r-hat and P-hat are unweighted means
 * of the active sources' empirical models. Tuples with no active source carry
 * r = 0 and a uniform P row as a sentinel.
 */
struct AggregatedModel {
    Shape shape;
    int num_sources = 0;
    numvec reward;                     ///< r-hat, indexed like Shape::sa
    numvec transition;                 ///< P-hat, indexed like Shape::sas
    std::vector<int> num_active;       ///< |L-hat_h(s, a)|
    std::vector<std::int64_t> visits;  ///< N_{h,l}(s, a), indexed sa * L + l
    numvec p_min;                      ///< smallest positive P-hat entry; 0 where inactive

    std::span<const double> transition_row(int h, int s, int a) const {
        return {transition.data() + shape.sas(h, s, a, 0), std::size_t(shape.num_states)};
    }
    std::span<const std::int64_t> source_visits(int h, int s, int a) const {
        return {visits.data() + shape.sa(h, s, a) * num_sources, std::size_t(num_sources)};
    }
    bool active(int h, int s, int a, int l) const { return source_visits(h, s, a)[l] > 0; }
};

/// Throws ShapeError on inconsistent shapes and DataIntegrityError if a
/// source logged two different rewards at one (h, s, a).
AggregatedModel aggregate_model(std::span<const VisitCounts> counts);

// ---------------------------------------------------------------------------
// CSV persistence
//
// Header: source_id,trajectory,step,s,a,r,s_next   (MDP datasets)
//         source_id,trajectory,step,s,a1,a2,r,s_next  (game datasets)
// One row per step, 0-based indices, rewards in shortest round-trip form.
// ---------------------------------------------------------------------------

/// `min_actions` > 0 writes the joint action as (a1, a2) columns.
void write_dataset_csv(const std::filesystem::path& path, std::span<const SourceDataset> datasets,
                       int min_actions = 0);

/// Reads and validates datasets written by write_dataset_csv. Every source
/// must have complete length-H trajectories with indices inside `shape`.
/// Throws InputError or ShapeError describing the offending line.
std::vector<SourceDataset> read_dataset_csv(const std::filesystem::path& path, const Shape& shape,
                                            int min_actions = 0);

} // namespace hetrl
