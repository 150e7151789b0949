#include "hetrl/matrix_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hetrl {

namespace {

constexpr double kPivotEps = 1e-12;

/// Dense simplex tableau for max c^T w, A w <= b, w >= 0 with b >= 0, so the
/// slack basis is feasible from the start.
class Tableau {
public:
    Tableau(int rows, int vars) : rows_(rows), cols_(vars + rows), basis_(std::size_t(rows)) {
        data_.assign(std::size_t(rows_ + 1) * (cols_ + 1), 0.0);
        for (int i = 0; i < rows_; ++i) {
            at(i, vars + i) = 1.0;
            basis_[std::size_t(i)] = vars + i;
        }
    }

    double& at(int i, int j) { return data_[std::size_t(i) * (cols_ + 1) + j]; }
    double& rhs(int i) { return at(i, cols_); }
    double& cost(int j) { return at(rows_, j); } ///< reduced costs, objective row
    int basis(int i) const { return basis_[std::size_t(i)]; }

    void solve() {
        // Bland's rule terminates; the bound is only a guard against bugs.
        const int max_pivots = 1000 * (rows_ + cols_);
        for (int it = 0; it < max_pivots; ++it) {
            int enter = -1;
            for (int j = 0; j < cols_; ++j)
                if (cost(j) < -kPivotEps) {
                    enter = j;
                    break;
                }
            if (enter < 0) return;

            int leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < rows_; ++i) {
                double a = at(i, enter);
                if (a <= kPivotEps) continue;
                double ratio = rhs(i) / a;
                if (ratio < best - kPivotEps ||
                    (std::abs(ratio - best) <= kPivotEps && basis(i) < basis(leave))) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave < 0) throw std::runtime_error("ne_matrix_game: unbounded program");
            pivot(leave, enter);
        }
        throw std::runtime_error("ne_matrix_game: simplex did not terminate");
    }

private:
    void pivot(int row, int col) {
        const double p = at(row, col);
        for (int j = 0; j <= cols_; ++j) at(row, j) /= p;
        for (int i = 0; i <= rows_; ++i) {
            if (i == row) continue;
            const double f = at(i, col);
            if (f == 0.0) continue;
            for (int j = 0; j <= cols_; ++j) at(i, j) -= f * at(row, j);
        }
        basis_[std::size_t(row)] = col;
    }

    int rows_;
    int cols_;
    std::vector<int> basis_;
    numvec data_;
};

void clean_distribution(numvec& p) {
    double sum = 0.0;
    for (double& v : p) {
        if (v < 0.0) v = 0.0;
        sum += v;
    }
    for (double& v : p) v /= sum;
}

} // namespace

Exploitability exploitability(const PayoffMatrix& payoff, std::span<const double> x,
                              std::span<const double> y, double value) {
    double best_row = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < payoff.rows; ++i) {
        double v = 0.0;
        for (int j = 0; j < payoff.cols; ++j) v += payoff(i, j) * y[std::size_t(j)];
        best_row = std::max(best_row, v);
    }
    double best_col = std::numeric_limits<double>::infinity();
    for (int j = 0; j < payoff.cols; ++j) {
        double v = 0.0;
        for (int i = 0; i < payoff.rows; ++i) v += x[std::size_t(i)] * payoff(i, j);
        best_col = std::min(best_col, v);
    }
    return {best_row - value, value - best_col};
}

MatrixGameSolution ne_matrix_game(const PayoffMatrix& payoff, double tol) {
    const int m = payoff.rows, n = payoff.cols;
    if (m <= 0 || n <= 0 || payoff.entries.size() != std::size_t(m) * n)
        throw ShapeError("ne_matrix_game: payoff dimensions do not match entries");
    if (!(tol > 0.0)) throw InputError("ne_matrix_game: tol must be positive");
    double lo = std::numeric_limits<double>::infinity();
    for (double v : payoff.entries) {
        if (!std::isfinite(v)) throw InputError("ne_matrix_game: non-finite payoff entry");
        lo = std::min(lo, v);
    }
    const double shift = 1.0 - lo; // every shifted entry is >= 1

    Tableau t(m, n);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) t.at(i, j) = payoff(i, j) + shift;
        t.rhs(i) = 1.0;
    }
    for (int j = 0; j < n; ++j) t.cost(j) = -1.0;
    t.solve();

    MatrixGameSolution sol;
    sol.col_strategy.assign(std::size_t(n), 0.0);
    for (int i = 0; i < m; ++i)
        if (t.basis(i) < n) sol.col_strategy[std::size_t(t.basis(i))] = t.rhs(i);
    sol.row_strategy.assign(std::size_t(m), 0.0);
    for (int i = 0; i < m; ++i) sol.row_strategy[std::size_t(i)] = t.cost(n + i);

    double total = 0.0;
    for (double w : sol.col_strategy) total += w;
    sol.value = 1.0 / total - shift;
    clean_distribution(sol.col_strategy);
    clean_distribution(sol.row_strategy);

    const Exploitability e = exploitability(payoff, sol.row_strategy, sol.col_strategy, sol.value);
    if (e.row_gain > tol || e.col_gain > tol)
        throw std::runtime_error("ne_matrix_game: equilibrium exploitable by " +
                                 std::to_string(std::max(e.row_gain, e.col_gain)));
    return sol;
}

} // namespace hetrl
