#pragma once

#include "hetrl/evaluation.hpp"
#include "hetrl/mdp.hpp"
#include "hetrl/policy.hpp"

#include <span>

namespace hetrl {

/// Settings of the scalar dual search; the defaults are what every caller in
/// this library uses.
struct KlDualOptions {
    double lambda_floor = 1e-12;
    double tolerance = 1e-9;
};

/**
 * inf { q . V : KL(q || p) <= sigma }, computed through the scalar dual
 *
 *     sup_{lambda >= 0}  -lambda log( sum_s p(s) exp(-V(s) / lambda) ) - lambda sigma.
 *
 * The dual is concave in lambda and its maximizer lies in [0, max(V) / sigma],
 * so it is maximized by golden-section search on [lambda_floor, max(V)/sigma].
 * The lambda -> 0 limit is the minimum of V over the support of p; the larger
 * of the two candidates is returned. The log-sum-exp is shifted by that
 * minimum so small lambda cannot underflow.
 *
 * Throws InputError when sigma <= 0, p is not a distribution, or the sizes
 * differ.
 */
double kl_dual_inf(std::span<const double> values, std::span<const double> p, double sigma,
                   const KlDualOptions& options = {});

/// min of V over {s : p(s) > kSupportFloor}.
double essential_inf(std::span<const double> values, std::span<const double> p);

/// KL(q || p), +inf when q is not absolutely continuous w.r.t. p.
double kl_divergence(std::span<const double> q, std::span<const double> p);

/// Robust values V^{pi, R}_h(s) by rectangular robust backward induction.
ValueTable robust_policy_values(const RobustSpec& spec, const Policy& policy);

/// V^{pi, R}_1(xi).
double robust_policy_value(const RobustSpec& spec, const Policy& policy, const InitDist& xi);

/// Robust-optimal deterministic policy: greedy argmax of the robust Bellman
/// backup, lowest index on ties.
OptimalSolution robust_optimal_policy(const RobustSpec& spec);

} // namespace hetrl
