#pragma once

#include "hetrl/mdp.hpp"

#include <span>

namespace hetrl {

/// Dense row-major payoff matrix; the row player maximizes.
struct PayoffMatrix {
    int rows = 0;
    int cols = 0;
    numvec entries;

    double operator()(int i, int j) const { return entries[std::size_t(i) * cols + j]; }
};

struct MatrixGameSolution {
    numvec row_strategy; ///< x, maximizer
    numvec col_strategy; ///< y, minimizer
    double value = 0.0;
};

/// max_i (A y)_i - value and value - min_j (x^T A)_j, i.e. how much each
/// player gains by deviating unilaterally.
struct Exploitability {
    double row_gain = 0.0;
    double col_gain = 0.0;
};

Exploitability exploitability(const PayoffMatrix& payoff, std::span<const double> x,
                              std::span<const double> y, double value);

/**
 * Nash equilibrium of a zero-sum matrix game through the minimax linear
 * program. The payoff is shifted to be strictly positive and
 *
 *     maximize sum(w)  s.t.  A w <= 1, w >= 0
 *
 * is solved with a dense tableau simplex under Bland's rule. The column
 * strategy is w / sum(w); the row strategy comes from the optimal duals.
 * Multiple equilibria are resolved by whatever vertex the deterministic
 * pivot sequence reaches.
 *
 * Throws InputError on non-finite entries or tol <= 0, and std::runtime_error
 * if the returned pair is more than `tol` exploitable.
 */
MatrixGameSolution ne_matrix_game(const PayoffMatrix& payoff, double tol = 1e-9);

} // namespace hetrl
