#pragma once

#include "hetrl/data.hpp"
#include "hetrl/diagnostics.hpp"
#include "hetrl/mdp.hpp"
#include "hetrl/policy.hpp"
#include "hetrl/solvers.hpp"
#include "hetrl/sources.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hetrl {

enum class Setting { Mdp, Game, Robust, LowerBound };

const char* setting_name(Setting s);

/// Where the target comes from: the built-in two-state example, an instance
/// file, or a random instance of the given size.
struct TargetSpec {
    enum class Kind { Fig2, File, Random } kind = Kind::Fig2;
    std::filesystem::path path;
    int horizon = 0, num_states = 0, num_actions = 0;
    int min_actions = 0; ///< random games only
    int fig2_special_action = 0; ///< fig2 only: index of the rewarding action
    std::uint64_t seed = 0;
};

struct ExperimentConfig {
    Setting setting = Setting::Mdp;
    std::string tag = "run";
    std::uint64_t base_seed = 0;
    TargetSpec target;
    /// "default" (fig2 behavior for fig2, otherwise uniform), "uniform", or a
    /// policy file path.
    std::string behavior = "default";
    GeneratorConfig generator;
    std::vector<int> k_list{10, 100, 1000};
    std::vector<int> l_list{2, 5, 10, 20};
    int replications = 100;
    std::vector<std::string> algorithms{"hetpevi", "avg_pevi"};
    PenaltyConfig penalty;
    bool subsample = true;
    double trim_constant = 10.0;
    // robust
    double sigma = 0.1;
    BoundedGeneratorConfig bounded;
    // lower bound; l_list holds the number of good sources
    int lb_horizon = 8, lb_states = 2;
    double lb_coverage = 2.0, lb_epsilon = 0.1;
    HardRegime lb_regime = HardRegime::SourceLimited;
    int lb_bad_sources = 0;
    /// Record wall-clock time; off by default so reruns are byte-identical.
    bool timing = false;

    /// Throws InputError naming the offending field.
    void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct ResultRecord {
    std::string setting;
    std::string algorithm;
    int k = 0;
    int l = 0;
    int rep = 0;
    double gap = 0.0;
    double elapsed_ms = 0.0;
    std::uint64_t seed = 0;
};

/// Two-state, twenty-action, twenty-step example: reward 0.9 and stay
/// probability 0.9 at (state 0, action 0), reward 0.1 and a fair coin
/// elsewhere. The behavior picks action 0 with probability 0.2 and the
/// other actions uniformly. `special_action` relabels which index carries
/// the 0.9 entry; at index 0 the lowest-index tie-break happens to pick the
/// optimal action, so an uninformed solver looks perfect.
struct BuiltinTarget {
    EpisodicMdp mdp;
    MixedPolicy behavior;
    InitDist init;
};
BuiltinTarget builtin_fig2_target(int special_action = 0);

/// seed of cell (K, L, rep)
std::uint64_t cell_seed(std::uint64_t base, int k, int l, int rep);

/// All (K, L, rep, algorithm) records in that order. `jobs` worker threads
/// share the cells; results do not depend on it.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, int jobs = 1);

struct LowerBoundCell {
    int k = 0;
    int l = 0;
    double mean_gap[2] = {0.0, 0.0}; ///< per target phi
    double stderr_gap[2] = {0.0, 0.0};
    double max_mean_gap() const { return std::max(mean_gap[0], mean_gap[1]); }
};

struct LowerBoundResult {
    std::vector<ResultRecord> records; ///< algorithm "hetpevi_phi0" / "hetpevi_phi1"
    std::vector<LowerBoundCell> cells;
    double epsilon = 0.0;
};

/// Hard-instance experiment. For every (K, L-double-dagger, rep) one dataset
/// set is drawn for target 0; target 1 uses the same draw with actions 0 and
/// 1 swapped, which has exactly the distribution of a target-1 draw.
LowerBoundResult run_lower_bound(const ExperimentConfig& cfg, int jobs = 1);

/// Swaps actions 0 and 1 in every step.
SourceDataset mirror_actions(const SourceDataset& dataset);

struct CellSummary {
    std::string algorithm;
    int k = 0;
    int l = 0;
    int n = 0;
    double mean = 0.0;
    double stddev = 0.0; ///< sample standard deviation
    double stderr_mean() const;
};

/// Mean and spread per (algorithm, K, L), in first-appearance order.
std::vector<CellSummary> summarize(const std::vector<ResultRecord>& records);

inline constexpr const char* kCsvHeader = "setting,algorithm,K,L,rep,gap,elapsed_ms,seed";
void write_results_csv(std::ostream& out, const std::vector<ResultRecord>& records);
void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRecord>& records);

/// Coverage of the sources of cell (K_list[0], L, 0) for each L in the grid.
nlohmann::json coverage_snapshot(const ExperimentConfig& cfg);

/// Datasets of cell (K, L, rep), before subsampling.
std::vector<SourceDataset> cell_datasets(const ExperimentConfig& cfg, int k, int l, int rep);

} // namespace hetrl
