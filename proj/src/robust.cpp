#include "hetrl/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetrl {

double essential_inf(std::span<const double> values, std::span<const double> p) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > kSupportFloor) m = std::min(m, values[i]);
    return m;
}

double kl_divergence(std::span<const double> q, std::span<const double> p) {
    double kl = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) continue;
        if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
        kl += q[i] * std::log(q[i] / p[i]);
    }
    return kl;
}

namespace {

/// m - lambda log E_p[exp(-(V - m)/lambda)] - lambda sigma with m = essinf V.
/// Written with expm1/log1p so that lambda in the 1e12 range (sigma -> 0)
/// keeps full precision; p is renormalized over its support.
double dual_objective(std::span<const double> values, std::span<const double> p, double sigma,
                      double m, double lambda) {
    double mass = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > kSupportFloor) {
            mass += p[i];
            acc += p[i] * std::expm1(-(values[i] - m) / lambda);
        }
    // acc / mass > -1 because the minimizing state contributes expm1(0) = 0
    return m - lambda * std::log1p(acc / mass) - lambda * sigma;
}

} // namespace

double kl_dual_inf(std::span<const double> values, std::span<const double> p, double sigma,
                   const KlDualOptions& options) {
    if (values.size() != p.size() || p.empty())
        throw InputError("kl_dual_inf: value and probability vectors differ in size");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("kl_dual_inf: sigma must be positive");
    check_distribution(p, "kl_dual_inf nominal row");

    const double m = essential_inf(values, p);
    double vmax = -std::numeric_limits<double>::infinity();
    double mean = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > kSupportFloor) {
            vmax = std::max(vmax, values[i]);
            mean += p[i] * values[i];
            mass += p[i];
        }
    mean /= mass;
    if (vmax - m <= 0.0) return m; // constant on the support

    double lo = options.lambda_floor;
    double hi = std::max(vmax, 0.0) / sigma;
    double best = m;
    if (hi > lo) {
        const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - inv_phi * (hi - lo);
        double x2 = lo + inv_phi * (hi - lo);
        double f1 = dual_objective(values, p, sigma, m, x1);
        double f2 = dual_objective(values, p, sigma, m, x2);
        // the cap only matters when hi is so large that doubles cannot resolve the tolerance
        for (int it = 0; it < 400 && hi - lo > options.tolerance; ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = dual_objective(values, p, sigma, m, x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = dual_objective(values, p, sigma, m, x1);
            }
        }
        best = std::max({best, f1, f2, dual_objective(values, p, sigma, m, 0.5 * (lo + hi))});
    }
    // p itself lies in the ball, so the infimum never exceeds the mean
    return std::min(best, mean);
}

ValueTable robust_policy_values(const RobustSpec& spec, const Policy& policy) {
    const EpisodicMdp& mdp = spec.nominal();
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
                total += w * (mdp.reward(h, s, a) +
                              kl_dual_inf(next, mdp.transition_row(h, s, a), spec.sigma()));
            }
            v(h, s) = total;
        }
    }
    return v;
}

double robust_policy_value(const RobustSpec& spec, const Policy& policy, const InitDist& xi) {
    if (xi.num_states() != spec.nominal().num_states())
        throw ShapeError("InitDist does not match MDP");
    return robust_policy_values(spec, policy).expected(0, xi);
}

OptimalSolution robust_optimal_policy(const RobustSpec& spec) {
    const EpisodicMdp& mdp = spec.nominal();
    const Shape& sh = mdp.shape();
    const int H = sh.horizon, S = sh.num_states, A = sh.num_actions;
    ValueTable v(H, S);
    numvec q(sh.sa_size());
    std::vector<int> actions(std::size_t(H) * S);
    for (int h = H - 1; h >= 0; --h) {
        auto next = v.step(h + 1);
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a)
                q[sh.sa(h, s, a)] =
                    mdp.reward(h, s, a) + kl_dual_inf(next, mdp.transition_row(h, s, a), spec.sigma());
            std::span<const double> row(q.data() + sh.sa(h, s, 0), std::size_t(A));
            const int best = argmax_lowest(row);
            actions[sh.hs(h, s)] = best;
            v(h, s) = row[std::size_t(best)];
        }
    }
    return {DeterministicPolicy(H, S, std::move(actions)), std::move(v), std::move(q)};
}

} // namespace hetrl
