#include "hetrl/policy.hpp"

#include <string>
#include <type_traits>

namespace hetrl {

DeterministicPolicy::DeterministicPolicy(int horizon, int num_states, std::vector<int> actions)
    : horizon_(horizon), num_states_(num_states), actions_(std::move(actions)) {
    if (horizon_ <= 0 || num_states_ <= 0)
        throw ShapeError("DeterministicPolicy: horizon and states must be positive");
    if (actions_.size() != std::size_t(horizon_) * num_states_)
        throw ShapeError("DeterministicPolicy: expected H*S actions");
    for (int a : actions_)
        if (a < 0) throw InputError("DeterministicPolicy: negative action");
}

DeterministicPolicy DeterministicPolicy::constant(int horizon, int num_states, int action) {
    return DeterministicPolicy(horizon, num_states,
                               std::vector<int>(std::size_t(horizon) * num_states, action));
}

MixedPolicy::MixedPolicy(int horizon, int num_states, int num_actions, numvec probs)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions),
      probs_(std::move(probs)) {
    if (horizon_ <= 0 || num_states_ <= 0 || num_actions_ <= 0)
        throw ShapeError("MixedPolicy: dimensions must be positive");
    if (probs_.size() != std::size_t(horizon_) * num_states_ * num_actions_)
        throw ShapeError("MixedPolicy: expected H*S*A probabilities");
    for (int h = 0; h < horizon_; ++h)
        for (int s = 0; s < num_states_; ++s) check_distribution(row(h, s), "MixedPolicy row");
}

MixedPolicy MixedPolicy::uniform(int horizon, int num_states, int num_actions) {
    return MixedPolicy(horizon, num_states, num_actions,
                       numvec(std::size_t(horizon) * num_states * num_actions,
                              1.0 / num_actions));
}

MixedPolicy MixedPolicy::from(const DeterministicPolicy& policy, int num_actions) {
    const int H = policy.horizon(), S = policy.num_states();
    numvec probs(std::size_t(H) * S * num_actions, 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            int a = policy.action(h, s);
            if (a >= num_actions) throw ShapeError("DeterministicPolicy: action out of range");
            probs[(std::size_t(h) * S + s) * num_actions + a] = 1.0;
        }
    return MixedPolicy(H, S, num_actions, std::move(probs));
}

MixedPolicy to_mixed(const Policy& policy, int num_actions) {
    if (const auto* det = std::get_if<DeterministicPolicy>(&policy))
        return MixedPolicy::from(*det, num_actions);
    if (const auto* mixed = std::get_if<MixedPolicy>(&policy)) {
        if (mixed->num_actions() != num_actions)
            throw ShapeError("MixedPolicy: has " + std::to_string(mixed->num_actions()) +
                             " actions, expected " + std::to_string(num_actions));
        return *mixed;
    }
    const auto& prod = std::get<ProductPolicy>(policy);
    const MixedPolicy& mu = prod.max_player;
    const MixedPolicy& nu = prod.min_player;
    if (mu.horizon() != nu.horizon() || mu.num_states() != nu.num_states())
        throw ShapeError("ProductPolicy: player policies disagree on (H, S)");
    const int A1 = mu.num_actions(), A2 = nu.num_actions();
    if (A1 * A2 != num_actions)
        throw ShapeError("ProductPolicy: A1 * A2 does not match joint action count");
    const int H = mu.horizon(), S = mu.num_states();
    numvec probs(std::size_t(H) * S * num_actions);
    std::size_t k = 0;
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a1 = 0; a1 < A1; ++a1)
                for (int a2 = 0; a2 < A2; ++a2) probs[k++] = mu.prob(h, s, a1) * nu.prob(h, s, a2);
    return MixedPolicy(H, S, num_actions, std::move(probs));
}

void check_policy_shape(const Policy& policy, const Shape& shape) {
    int H = 0, S = 0;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ProductPolicy>) {
                H = p.max_player.horizon();
                S = p.max_player.num_states();
            } else {
                H = p.horizon();
                S = p.num_states();
            }
        },
        policy);
    if (H != shape.horizon || S != shape.num_states)
        throw ShapeError("policy (H, S) does not match the model");
    if (const auto* det = std::get_if<DeterministicPolicy>(&policy)) {
        for (int a : det->actions())
            if (a >= shape.num_actions) throw ShapeError("policy action out of range");
    } else {
        (void)to_mixed(policy, shape.num_actions);
    }
}

} // namespace hetrl
