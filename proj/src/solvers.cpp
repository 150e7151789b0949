#include "hetrl/solvers.hpp"

#include "hetrl/matrix_game.hpp"
#include "hetrl/robust.hpp"
#include "hetrl/serialize.hpp"

#include <algorithm>
#include <cmath>

namespace hetrl {

void PenaltyConfig::validate() const {
    if (!(c > 0.0)) throw InputError("penalty: c must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw InputError("penalty: delta must lie in (0, 1)");
    if (mode == VarianceMode::Adaptive && !(sigma_g >= 0.0))
        throw InputError("penalty: sigma_g must be non-negative");
    if (log_factor && !(*log_factor >= 0.0)) throw InputError("penalty: log factor override must be >= 0");
}

double PenaltyConfig::log_term(const Shape& shape) const {
    if (log_factor) return *log_factor;
    return std::log(double(shape.num_states) * shape.num_actions * shape.horizon / delta);
}

PenaltyTerms penalty_gamma(std::span<const std::int64_t> visits, int horizon, double log_term,
                           const PenaltyConfig& cfg) {
    const double H = horizon;
    int active = 0;
    double inv_sum = 0.0;
    for (std::int64_t n : visits)
        if (n > 0) {
            ++active;
            inv_sum += 1.0 / double(n);
        }
    if (active == 0) return {H, H, H};
    const double L = active;
    const double h2_log = H * H * log_term;
    const double alpha = cfg.c * std::sqrt(h2_log * inv_sum / (L * L));
    double beta_sq = h2_log / L;
    if (cfg.mode == VarianceMode::Adaptive) beta_sq *= cfg.sigma_g * cfg.sigma_g;
    const double beta = cfg.c * std::sqrt(beta_sq);
    return {alpha, beta, std::min(alpha + beta, H)};
}

double penalty_robust(std::span<const std::int64_t> visits, double p_min, double sigma, int horizon,
                      double log_term, const PenaltyConfig& cfg) {
    const double H = horizon;
    int active = 0;
    double inv_sum = 0.0;
    for (std::int64_t n : visits)
        if (n > 0) {
            ++active;
            inv_sum += 1.0 / double(n);
        }
    if (active == 0) return H; // p_min is meaningless here
    const double L = active;
    const double alpha_core = std::sqrt(H * H * log_term * inv_sum / (L * L));
    const double scale = cfg.c / (sigma * p_min);
    const double g = scale * (alpha_core + std::sqrt(H * H * log_term / L)) + cfg.c * std::sqrt(log_term / L);
    return std::min(g, H);
}

namespace {

struct Tables {
    ValueTable values;
    numvec q;
    numvec penalty;
};

/// Shared backward pass. `backup(h, s, a, next_values)` returns the
/// un-penalized estimate and `penalty(h, s, a)` the amount subtracted; the
/// state value is chosen by `select(h, s, q_row)`, which also records the policy.
template <class Backup, class Penalty, class Select>
Tables backward(const Shape& sh, Backup&& backup, Penalty&& penalty, Select&& select) {
    Tables t{ValueTable(sh.horizon, sh.num_states), numvec(sh.sa_size(), 0.0), numvec(sh.sa_size(), 0.0)};
    for (int h = sh.horizon - 1; h >= 0; --h) {
        const auto next = t.values.step(h + 1);
        for (int s = 0; s < sh.num_states; ++s) {
            for (int a = 0; a < sh.num_actions; ++a) {
                const std::size_t i = sh.sa(h, s, a);
                t.penalty[i] = penalty(h, s, a);
                // a fully penalized tuple is 0 whatever the backup says
                t.q[i] = t.penalty[i] >= sh.horizon ? 0.0 : std::max(backup(h, s, a, next) - t.penalty[i], 0.0);
            }
            t.values(h, s) = select(h, s, std::span<const double>(t.q.data() + sh.sa(h, s, 0),
                                                                 std::size_t(sh.num_actions)));
        }
    }
    return t;
}

struct Greedy {
    const Shape& sh;
    std::vector<int> actions;

    explicit Greedy(const Shape& shape) : sh(shape), actions(std::size_t(shape.horizon) * shape.num_states, 0) {}
    double operator()(int h, int s, std::span<const double> q) {
        const int a = argmax_lowest(q);
        actions[sh.hs(h, s)] = a;
        return q[std::size_t(a)];
    }
    DeterministicPolicy policy() && { return DeterministicPolicy(sh.horizon, sh.num_states, std::move(actions)); }
};

} // namespace

SolverOutput hetpevi(const AggregatedModel& model, const PenaltyConfig& cfg) {
    cfg.validate();
    const Shape& sh = model.shape;
    const double log_term = cfg.log_term(sh);
    Greedy greedy(sh);
    Tables t = backward(
        sh,
        [&](int h, int s, int a, std::span<const double> next) {
            return model.reward[sh.sa(h, s, a)] + expect(model.transition_row(h, s, a), next);
        },
        [&](int h, int s, int a) {
            if (cfg.zero_penalty) return 0.0;
            return penalty_gamma(model.source_visits(h, s, a), sh.horizon, log_term, cfg).total;
        },
        greedy);
    return {std::move(greedy).policy(), std::move(t.values), std::move(t.q), std::move(t.penalty)};
}

SolverOutput hetpevi_game(const AggregatedModel& model, int max_actions, int min_actions,
                          const PenaltyConfig& cfg) {
    cfg.validate();
    const Shape& sh = model.shape;
    if (max_actions < 1 || min_actions < 1 || max_actions * min_actions != sh.num_actions)
        throw ShapeError("hetpevi_game: A1 * A2 must equal the model's action count");
    const double log_term = cfg.log_term(sh);
    numvec mu(std::size_t(sh.horizon) * sh.num_states * max_actions, 0.0);
    numvec nu(std::size_t(sh.horizon) * sh.num_states * min_actions, 0.0);

    Tables t = backward(
        sh,
        [&](int h, int s, int a, std::span<const double> next) {
            return model.reward[sh.sa(h, s, a)] + expect(model.transition_row(h, s, a), next);
        },
        [&](int h, int s, int a) {
            if (cfg.zero_penalty) return 0.0;
            return penalty_gamma(model.source_visits(h, s, a), sh.horizon, log_term, cfg).total;
        },
        [&](int h, int s, std::span<const double> q) {
            PayoffMatrix m{max_actions, min_actions, numvec(q.begin(), q.end())};
            const MatrixGameSolution ne = ne_matrix_game(m);
            const std::size_t base = sh.hs(h, s);
            std::copy(ne.row_strategy.begin(), ne.row_strategy.end(), mu.begin() + base * max_actions);
            std::copy(ne.col_strategy.begin(), ne.col_strategy.end(), nu.begin() + base * min_actions);
            double v = 0.0;
            for (int i = 0; i < max_actions; ++i)
                for (int j = 0; j < min_actions; ++j)
                    v += ne.row_strategy[std::size_t(i)] * m(i, j) * ne.col_strategy[std::size_t(j)];
            return std::clamp(v, 0.0, double(sh.horizon - h));
        });
    ProductPolicy policy{MixedPolicy(sh.horizon, sh.num_states, max_actions, std::move(mu)),
                         MixedPolicy(sh.horizon, sh.num_states, min_actions, std::move(nu))};
    return {std::move(policy), std::move(t.values), std::move(t.q), std::move(t.penalty)};
}

SolverOutput hetpevi_robust(const AggregatedModel& model, double sigma, const PenaltyConfig& cfg) {
    cfg.validate();
    if (!(sigma > 0.0)) throw InputError("hetpevi_robust: sigma must be positive");
    const Shape& sh = model.shape;
    const double log_term = cfg.log_term(sh);
    Greedy greedy(sh);
    Tables t = backward(
        sh,
        [&](int h, int s, int a, std::span<const double> next) {
            return model.reward[sh.sa(h, s, a)] + kl_dual_inf(next, model.transition_row(h, s, a), sigma);
        },
        [&](int h, int s, int a) {
            if (cfg.zero_penalty) return 0.0;
            return penalty_robust(model.source_visits(h, s, a), model.p_min[sh.sa(h, s, a)], sigma,
                                  sh.horizon, log_term, cfg);
        },
        greedy);
    return {std::move(greedy).policy(), std::move(t.values), std::move(t.q), std::move(t.penalty)};
}

SolverOutput pevi_single(const VisitCounts& counts, const PenaltyConfig& cfg) {
    cfg.validate();
    const Shape& sh = counts.shape;
    const double H = sh.horizon;
    const double log_term = cfg.log_term(sh);
    numvec row(static_cast<std::size_t>(sh.num_states));
    Greedy greedy(sh);
    Tables t = backward(
        sh,
        [&](int h, int s, int a, std::span<const double> next) {
            const std::int64_t n = counts.n(h, s, a);
            if (n == 0) return 0.0;
            for (int n2 = 0; n2 < sh.num_states; ++n2)
                row[std::size_t(n2)] = double(counts.n(h, s, a, n2)) / double(n);
            return counts.reward_sum[sh.sa(h, s, a)] / double(n) + expect(row, next);
        },
        [&](int h, int s, int a) {
            if (cfg.zero_penalty) return 0.0;
            const std::int64_t n = counts.n(h, s, a);
            if (n == 0) return H;
            return std::min(cfg.c * std::sqrt(H * H * log_term / double(n)), H);
        },
        greedy);
    return {std::move(greedy).policy(), std::move(t.values), std::move(t.q), std::move(t.penalty)};
}

MixedPolicy avg_pevi(std::span<const DeterministicPolicy> policies, int num_actions) {
    if (policies.empty()) throw InputError("avg_pevi: need at least one policy");
    const int H = policies[0].horizon(), S = policies[0].num_states();
    numvec probs(std::size_t(H) * S * num_actions, 0.0);
    const double w = 1.0 / double(policies.size());
    for (const auto& p : policies) {
        if (p.horizon() != H || p.num_states() != S) throw ShapeError("avg_pevi: policies differ in shape");
        for (int h = 0; h < H; ++h)
            for (int s = 0; s < S; ++s) {
                const int a = p.action(h, s);
                if (a < 0 || a >= num_actions) throw ShapeError("avg_pevi: action out of range");
                probs[(std::size_t(h) * S + s) * num_actions + a] += w;
            }
    }
    return MixedPolicy(H, S, num_actions, std::move(probs));
}

SolverOutput pevi_pooled(std::span<const VisitCounts> counts, const PenaltyConfig& cfg) {
    if (counts.empty()) throw InputError("pevi_pooled: need at least one source");
    VisitCounts pooled(counts[0].shape);
    for (const auto& c : counts) {
        if (c.shape != pooled.shape) throw ShapeError("pevi_pooled: sources disagree on shape");
        for (std::size_t i = 0; i < pooled.sa.size(); ++i) {
            pooled.sa[i] += c.sa[i];
            pooled.reward_sum[i] += c.reward_sum[i];
            pooled.reward_lo[i] = std::min(pooled.reward_lo[i], c.reward_lo[i]);
            pooled.reward_hi[i] = std::max(pooled.reward_hi[i], c.reward_hi[i]);
        }
        for (std::size_t i = 0; i < pooled.sas.size(); ++i) pooled.sas[i] += c.sas[i];
    }
    return pevi_single(pooled, cfg);
}

nlohmann::json to_json(const SolverOutput& out, const Shape& shape) {
    auto nest = [&](const numvec& table) {
        json steps = json::array();
        for (int h = 0; h < shape.horizon; ++h) {
            json rows = json::array();
            for (int s = 0; s < shape.num_states; ++s)
                rows.push_back(numvec(table.begin() + std::ptrdiff_t(shape.sa(h, s, 0)),
                                      table.begin() + std::ptrdiff_t(shape.sa(h, s, 0) + shape.num_actions)));
            steps.push_back(std::move(rows));
        }
        return steps;
    };
    return {{"policy", to_json(out.policy)},
            {"values", to_json(out.values)},
            {"q", nest(out.q)},
            {"penalty", nest(out.penalty)}};
}

} // namespace hetrl
