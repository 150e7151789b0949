#pragma once

#include "hetrl/evaluation.hpp"
#include "hetrl/mdp.hpp"
#include "hetrl/policy.hpp"

#include <json.hpp>

#include <span>
#include <string>
#include <vector>

namespace hetrl {

/// Occupancies above this count as visited.
inline constexpr double kOccupancyFloor = 1e-12;

/// Which sources can visit each (h, s, a), from exact source occupancies.
struct CoverageSets {
    Shape shape;
    int num_sources = 0;
    numvec occupancy;                   ///< d^{rho_l, M_l}_h(s, a), indexed sa * L + l
    std::vector<std::vector<int>> sets; ///< indexed like Shape::sa

    double d(int h, int s, int a, int l) const { return occupancy[shape.sa(h, s, a) * num_sources + l]; }
    const std::vector<int>& at(int h, int s, int a) const { return sets[shape.sa(h, s, a)]; }
};

CoverageSets coverage_sets(std::span<const EpisodicMdp> sources, std::span<const Policy> behaviors,
                           std::span<const InitDist> inits);
/// Game sources are treated over the joint action index.
CoverageSets coverage_sets(std::span<const ZeroSumGame> sources, std::span<const Policy> behaviors,
                           std::span<const InitDist> inits);

/**
 * L-dagger, C-dagger and d-min of a target against a set of sources.
 *
 * L-dagger is the smallest covering-set size over the tuples the reference
 * policy can reach; C-dagger the largest average of min(d_ref, clip) / d_l over
 * the covering sources; d-min the smallest positive reference occupancy. An
 * uncovered reachable tuple gives L-dagger = 0 and C-dagger = +inf.
 */
struct CoverageReport {
    std::string kind; ///< "mdp", "game" or "robust"
    Shape shape;
    int num_sources = 0;
    int l_dagger = 0;
    double c_dagger = 0.0;
    double d_min = 0.0;
    double clip = 0.0;
    /// True when c_dagger only bounds the true quantity from below (robust).
    bool c_dagger_lower_bound = false;
    numvec reference_occupancy; ///< d used for the ratios, indexed like Shape::sa
    std::vector<char> required; ///< tuples counted in L-dagger
    std::vector<std::vector<int>> sets;
};

/// Reference: the optimal policy of the target, clip 1/S.
CoverageReport coverage_params(const EpisodicMdp& target, const InitDist& xi, const CoverageSets& sets);

/// Reference: the NE max-player policy mu* with the min-player free. A tuple
/// is required when some nu reaches it; C-dagger uses max over nu of the
/// occupancy (found by a reach-probability DP), clip 1/(S A1).
CoverageReport coverage_params_game(const ZeroSumGame& target, const InitDist& xi,
                                    const CoverageSets& sets);

/// Reference: the robust-optimal policy. Every kernel in a KL ball shares the
/// nominal support, so the required tuples and L-dagger are exact. C-dagger is
/// computed from nominal occupancies and flagged as a lower bound.
CoverageReport coverage_params_robust(const RobustSpec& target, const InitDist& xi,
                                      const CoverageSets& sets);

/// V*_1(xi) - V^{pi}_1(xi).
double gap(const EpisodicMdp& target, const Policy& policy, const InitDist& xi);
/// NE value minus the value of mu against its best response.
double mg_gap(const ZeroSumGame& game, const MixedPolicy& max_policy, const InitDist& xi);
/// Robust-optimal value minus the robust value of the policy.
double r_gap(const RobustSpec& spec, const Policy& policy, const InitDist& xi);

nlohmann::json to_json(const CoverageReport& report);

} // namespace hetrl
