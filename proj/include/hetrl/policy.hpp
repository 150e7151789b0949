#pragma once

#include "hetrl/mdp.hpp"

#include <span>
#include <variant>
#include <vector>

namespace hetrl {

/// pi_h(s) -> action, indexed (h, s).
class DeterministicPolicy {
public:
    DeterministicPolicy(int horizon, int num_states, std::vector<int> actions);
    static DeterministicPolicy constant(int horizon, int num_states, int action);

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    int action(int h, int s) const { return actions_[std::size_t(h) * num_states_ + s]; }
    const std::vector<int>& actions() const { return actions_; }

    bool operator==(const DeterministicPolicy&) const = default;

private:
    int horizon_;
    int num_states_;
    std::vector<int> actions_;
};

/// pi_h(a | s), indexed (h, s, a); each (h, s) row is a distribution.
class MixedPolicy {
public:
    MixedPolicy(int horizon, int num_states, int num_actions, numvec probs);
    static MixedPolicy uniform(int horizon, int num_states, int num_actions);
    static MixedPolicy from(const DeterministicPolicy& policy, int num_actions);

    int horizon() const { return horizon_; }
    int num_states() const { return num_states_; }
    int num_actions() const { return num_actions_; }

    double prob(int h, int s, int a) const { return probs_[index(h, s) + a]; }
    std::span<const double> row(int h, int s) const {
        return {probs_.data() + index(h, s), std::size_t(num_actions_)};
    }
    const numvec& probs() const { return probs_; }

    bool operator==(const MixedPolicy&) const = default;

private:
    std::size_t index(int h, int s) const {
        return (std::size_t(h) * num_states_ + s) * num_actions_;
    }

    int horizon_;
    int num_states_;
    int num_actions_;
    numvec probs_;
};

/// mu x nu for a zero-sum game: independent mixed strategies per (h, s).
struct ProductPolicy {
    MixedPolicy max_player;
    MixedPolicy min_player;
};

using Policy = std::variant<DeterministicPolicy, MixedPolicy, ProductPolicy>;

/// Expands any policy to a mixed policy over `num_actions` actions. Product
/// policies expand to the joint action a1 * A2 + a2, so `num_actions` must be
/// A1 * A2. Throws ShapeError on mismatch.
MixedPolicy to_mixed(const Policy& policy, int num_actions);

/// Throws ShapeError unless `policy` can act on `shape`.
void check_policy_shape(const Policy& policy, const Shape& shape);

} // namespace hetrl
