#include "hetrl/evaluation.hpp"

#include "hetrl/matrix_game.hpp"

#include <algorithm>

namespace hetrl {

double ValueTable::expected(int h, const InitDist& xi) const {
    if (xi.num_states() != num_states_) throw ShapeError("InitDist does not match value table");
    double v = 0.0;
    for (int s = 0; s < num_states_; ++s) v += xi[s] * (*this)(h, s);
    return v;
}

double expect(std::span<const double> row, std::span<const double> values) {
    double v = 0.0;
    for (std::size_t i = 0; i < row.size(); ++i) v += row[i] * values[i];
    return v;
}

int argmax_lowest(std::span<const double> values) {
    int best = 0;
    for (std::size_t a = 1; a < values.size(); ++a)
        if (values[a] > values[std::size_t(best)]) best = int(a);
    return best;
}

ValueTable policy_values(const EpisodicMdp& mdp, const Policy& policy) {
    check_policy_shape(policy, mdp.shape());
    const MixedPolicy pi = to_mixed(policy, mdp.num_actions());
    const int H = mdp.horizon(), S = mdp.num_states(), A = mdp.num_actions();
    ValueTable v(H, S);
    for (int h = H - 1; h >= 0; --h) {
        auto next = v.step(h + 1);
        for (int s = 0; s < S; ++s) {
            double total = 0.0;
            for (int a = 0; a < A; ++a) {
                const double w = pi.prob(h, s, a);
                if (w == 0.0) continue;
                total += w * (mdp.reward(h, s, a) + expect(mdp.transition_row(h, s, a), next));
            }
            v(h, s) = total;
        }
    }
    return v;
}

double evaluate_policy(const EpisodicMdp& mdp, const Policy& policy, const InitDist& xi) {
    if (xi.num_states() != mdp.num_states()) throw ShapeError("InitDist does not match MDP");
    return policy_values(mdp, policy).expected(0, xi);
}

OptimalSolution optimal_policy(const EpisodicMdp& mdp) {
    const Shape& sh = mdp.shape();
    const int H = sh.horizon, S = sh.num_states, A = sh.num_actions;
    ValueTable v(H, S);
    numvec q(sh.sa_size());
    std::vector<int> actions(std::size_t(H) * S);
    for (int h = H - 1; h >= 0; --h) {
        auto next = v.step(h + 1);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a)
                q[sh.sa(h, s, a)] = mdp.reward(h, s, a) + expect(mdp.transition_row(h, s, a), next);
            std::span<const double> row(q.data() + sh.sa(h, s, 0), std::size_t(A));
            const int best = argmax_lowest(row);
            actions[sh.hs(h, s)] = best;
            v(h, s) = row[std::size_t(best)];
        }
    }
    return {DeterministicPolicy(H, S, std::move(actions)), std::move(v), std::move(q)};
}

OccupancyTables occupancy(const EpisodicMdp& mdp, const Policy& policy, const InitDist& xi) {
    check_policy_shape(policy, mdp.shape());
    if (xi.num_states() != mdp.num_states()) throw ShapeError("InitDist does not match MDP");
    const MixedPolicy pi = to_mixed(policy, mdp.num_actions());
    const Shape& sh = mdp.shape();
    const int H = sh.horizon, S = sh.num_states, A = sh.num_actions;
    OccupancyTables occ{sh, numvec(std::size_t(H) * S, 0.0), numvec(sh.sa_size(), 0.0)};
    numvec current = xi.probs();
    for (int h = 0; h < H; ++h) {
        numvec next(std::size_t(S), 0.0);
        for (int s = 0; s < S; ++s) {
            occ.state[sh.hs(h, s)] = current[std::size_t(s)];
            for (int a = 0; a < A; ++a) {
                const double d = current[std::size_t(s)] * pi.prob(h, s, a);
                occ.state_action[sh.sa(h, s, a)] = d;
                if (d == 0.0) continue;
                auto row = mdp.transition_row(h, s, a);
                for (int n = 0; n < S; ++n) next[std::size_t(n)] += d * row[std::size_t(n)];
            }
        }
        current = std::move(next);
    }
    return occ;
}

// ---------------------------------------------------------------------------

namespace {

EpisodicMdp marginalize(const ZeroSumGame& game, const MixedPolicy& fixed, bool fix_max) {
    const int H = game.horizon(), S = game.num_states();
    const int A1 = game.max_actions(), A2 = game.min_actions();
    const int fixed_actions = fix_max ? A1 : A2;
    const int free_actions = fix_max ? A2 : A1;
    if (fixed.horizon() != H || fixed.num_states() != S || fixed.num_actions() != fixed_actions)
        throw ShapeError("fixed player's policy does not match the game");
    const Shape sh{H, S, free_actions};
    numvec trans(sh.sas_size(), 0.0), rew(sh.sa_size(), 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int b = 0; b < free_actions; ++b) {
                double r = 0.0;
                for (int f = 0; f < fixed_actions; ++f) {
                    const double w = fixed.prob(h, s, f);
                    if (w == 0.0) continue;
                    const int a1 = fix_max ? f : b, a2 = fix_max ? b : f;
                    r += w * game.reward(h, s, a1, a2);
                    for (int n = 0; n < S; ++n)
                        trans[sh.sas(h, s, b, n)] += w * game.transition(h, s, a1, a2, n);
                }
                rew[sh.sa(h, s, b)] = std::min(1.0, std::max(0.0, r));
                // renormalize away round-off so the result passes validation
                double sum = 0.0;
                for (int n = 0; n < S; ++n) sum += trans[sh.sas(h, s, b, n)];
                for (int n = 0; n < S; ++n) trans[sh.sas(h, s, b, n)] /= sum;
            }
    return EpisodicMdp(sh, std::move(trans), std::move(rew));
}

} // namespace

EpisodicMdp fix_max_player(const ZeroSumGame& game, const MixedPolicy& max_policy) {
    return marginalize(game, max_policy, true);
}

EpisodicMdp fix_min_player(const ZeroSumGame& game, const MixedPolicy& min_policy) {
    return marginalize(game, min_policy, false);
}

BestResponse best_response(const ZeroSumGame& game, const MixedPolicy& max_policy,
                           const InitDist& xi) {
    if (xi.num_states() != game.num_states()) throw ShapeError("InitDist does not match game");
    const EpisodicMdp induced = fix_max_player(game, max_policy);
    const Shape& sh = induced.shape();
    const int H = sh.horizon, S = sh.num_states, A2 = sh.num_actions;
    ValueTable v(H, S);
    std::vector<int> actions(std::size_t(H) * S);
    numvec q(static_cast<std::size_t>(A2));
    for (int h = H - 1; h >= 0; --h) {
        auto next = v.step(h + 1);
        for (int s = 0; s < S; ++s) {
            int best = 0;
            for (int b = 0; b < A2; ++b) {
                q[std::size_t(b)] = induced.reward(h, s, b) + expect(induced.transition_row(h, s, b), next);
                if (q[std::size_t(b)] < q[std::size_t(best)]) best = b;
            }
            actions[sh.hs(h, s)] = best;
            v(h, s) = q[std::size_t(best)];
        }
    }
    return {DeterministicPolicy(H, S, std::move(actions)), v.expected(0, xi)};
}

GameSolution solve_game(const ZeroSumGame& game) {
    const int H = game.horizon(), S = game.num_states();
    const int A1 = game.max_actions(), A2 = game.min_actions();
    ValueTable v(H, S);
    numvec mu(std::size_t(H) * S * A1), nu(std::size_t(H) * S * A2);
    PayoffMatrix q{A1, A2, numvec(std::size_t(A1) * A2)};
    for (int h = H - 1; h >= 0; --h) {
        auto next = v.step(h + 1);
        for (int s = 0; s < S; ++s) {
            for (int a1 = 0; a1 < A1; ++a1)
                for (int a2 = 0; a2 < A2; ++a2) {
                    const int a = game.joint_action(a1, a2);
                    q.entries[std::size_t(a)] =
                        game.joint().reward(h, s, a) + expect(game.joint().transition_row(h, s, a), next);
                }
            const MatrixGameSolution ne = ne_matrix_game(q);
            std::copy(ne.row_strategy.begin(), ne.row_strategy.end(),
                      mu.begin() + std::ptrdiff_t((std::size_t(h) * S + s) * A1));
            std::copy(ne.col_strategy.begin(), ne.col_strategy.end(),
                      nu.begin() + std::ptrdiff_t((std::size_t(h) * S + s) * A2));
            v(h, s) = ne.value;
        }
    }
    return {ProductPolicy{MixedPolicy(H, S, A1, std::move(mu)), MixedPolicy(H, S, A2, std::move(nu))},
            std::move(v)};
}

double evaluate_product(const ZeroSumGame& game, const ProductPolicy& policy, const InitDist& xi) {
    return evaluate_policy(game.joint(), Policy(policy), xi);
}

} // namespace hetrl
