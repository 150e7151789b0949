#pragma once

#include "hetrl/mdp.hpp"
#include "hetrl/policy.hpp"

namespace hetrl {

/// V_h(s) for h in [0, H], with V_H = 0. Indexed (h, s).
class ValueTable {
public:
    ValueTable(int horizon, int num_states)
        : horizon_(horizon), num_states_(num_states),
          values_(std::size_t(horizon + 1) * num_states, 0.0) {}

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    double operator()(int h, int s) const { return values_[std::size_t(h) * num_states_ + s]; }
    double& operator()(int h, int s) { return values_[std::size_t(h) * num_states_ + s]; }
    std::span<const double> step(int h) const {
        return {values_.data() + std::size_t(h) * num_states_, std::size_t(num_states_)};
    }
    double expected(int h, const InitDist& xi) const;

private:
    int horizon_;
    int num_states_;
    numvec values_;
};

/// Per-step state and state-action visitation probabilities.
struct OccupancyTables {
    Shape shape;
    numvec state;        ///< d_h(s), indexed (h, s)
    numvec state_action; ///< d_h(s, a), indexed (h, s, a)

    double d(int h, int s) const { return state[shape.hs(h, s)]; }
    double d(int h, int s, int a) const { return state_action[shape.sa(h, s, a)]; }
};

/// sum_{s'} P(s'|s,a) V(s')
double expect(std::span<const double> row, std::span<const double> values);

/// Backward induction for V^{pi}. Any policy variant is accepted; product
/// policies act on the joint action space of the MDP.
ValueTable policy_values(const EpisodicMdp& mdp, const Policy& policy);

/// V^{pi}_1(xi).
double evaluate_policy(const EpisodicMdp& mdp, const Policy& policy, const InitDist& xi);

struct OptimalSolution {
    DeterministicPolicy policy;
    ValueTable values;
    numvec q; ///< Q*_h(s, a), indexed like Shape::sa
};

/// Optimal deterministic policy by backward induction. Ties in argmax go to the
/// lowest action index.
OptimalSolution optimal_policy(const EpisodicMdp& mdp);

/// Forward recursion d_1 = xi, d_{h+1}(s') = sum d_h(s, a) P_h(s'|s, a).
OccupancyTables occupancy(const EpisodicMdp& mdp, const Policy& policy, const InitDist& xi);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax_lowest(std::span<const double> values);

// ---------------------------------------------------------------------------
// Zero-sum games
// ---------------------------------------------------------------------------

/// MDP faced by the min-player once the max-player's mixed policy is fixed:
/// actions are a2, rewards and transitions are averaged over mu(a1 | s).
EpisodicMdp fix_max_player(const ZeroSumGame& game, const MixedPolicy& max_policy);

/// MDP faced by the max-player once the min-player's mixed policy is fixed.
EpisodicMdp fix_min_player(const ZeroSumGame& game, const MixedPolicy& min_policy);

struct BestResponse {
    DeterministicPolicy policy; ///< min-player, over A2
    double value;               ///< V^{mu x br(mu)}_1(xi)
};

/// br(mu) = argmin_nu V^{mu x nu}_1(xi), found by min-player backward induction
/// (lowest index on ties).
BestResponse best_response(const ZeroSumGame& game, const MixedPolicy& max_policy,
                           const InitDist& xi);

struct GameSolution {
    ProductPolicy policy; ///< Nash equilibrium (mu*, nu*)
    ValueTable values;
};

/// Exact Nash equilibrium of the game by backward induction with the matrix
/// game solver at every (h, s).
GameSolution solve_game(const ZeroSumGame& game);

/// V^{mu x nu}_1(xi) for a product policy.
double evaluate_product(const ZeroSumGame& game, const ProductPolicy& policy, const InitDist& xi);

} // namespace hetrl
