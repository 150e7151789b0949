#pragma once

#include "hetrl/data.hpp"
#include "hetrl/evaluation.hpp"
#include "hetrl/policy.hpp"

#include <json.hpp>

#include <optional>
#include <span>

namespace hetrl {

enum class VarianceMode {
    WorstCase, ///< source term c sqrt(H^2 log / L)
    Adaptive,  ///< source term c sqrt(sigma_g^2 H^2 log / L)
};

struct PenaltyConfig {
    double c = 1.0;
    double delta = 0.05;
    VarianceMode mode = VarianceMode::WorstCase;
    double sigma_g = 1.0;

    /// Test hooks. `log_factor` replaces log(S A H / delta); `zero_penalty`
    /// sets every penalty to zero.
    std::optional<double> log_factor;
    bool zero_penalty = false;

    void validate() const;
    /// log(S A H / delta) unless overridden. A is the joint count for games.
    double log_term(const Shape& shape) const;
};

struct PenaltyTerms {
    double alpha = 0.0; ///< sample-uncertainty part
    double beta = 0.0;  ///< source-uncertainty part
    double total = 0.0; ///< min(alpha + beta, H)
};

/// Penalty at one (h, s, a) from the per-source visit counts N_{h,l}(s, a);
/// sources with zero visits are excluded. With no active source all three
/// terms are H.
PenaltyTerms penalty_gamma(std::span<const std::int64_t> visits, int horizon, double log_term,
                           const PenaltyConfig& cfg);

/// Robust penalty at one (h, s, a): H when no source is active, otherwise
/// min(H, c/(sigma p_min) (alpha_core + sqrt(H^2 log / L)) + c sqrt(log / L))
/// with alpha_core = sqrt(sum_l H^2 log / (L^2 N_l)).
double penalty_robust(std::span<const std::int64_t> visits, double p_min, double sigma, int horizon,
                      double log_term, const PenaltyConfig& cfg);

/// Pessimistic tables produced by every solver. Tables are indexed like
/// Shape::sa over the action space the solver worked in (joint for games).
struct SolverOutput {
    Policy policy;
    ValueTable values;
    numvec q;
    numvec penalty;
};

/// Algorithm 1: pessimistic value iteration on the aggregated model with
/// greedy (lowest index on ties) deterministic policy.
SolverOutput hetpevi(const AggregatedModel& model, const PenaltyConfig& cfg);

/// Algorithm 2 for a model over joint actions a1 * A2 + a2. The policy is the
/// product of the per-state matrix game equilibria of Q-hat.
SolverOutput hetpevi_game(const AggregatedModel& model, int max_actions, int min_actions,
                          const PenaltyConfig& cfg);

/// Algorithm 3: the next-state expectation is replaced by the KL worst case
/// around the aggregated row and the penalty by penalty_robust.
SolverOutput hetpevi_robust(const AggregatedModel& model, double sigma, const PenaltyConfig& cfg);

/// Single-source PEVI with penalty c sqrt(H^2 log / N), H where N = 0.
/// Rewards are averaged, so pooled counts from several sources work too.
SolverOutput pevi_single(const VisitCounts& counts, const PenaltyConfig& cfg);

/// Mixed policy that plays each source's recommended action with weight 1/L.
MixedPolicy avg_pevi(std::span<const DeterministicPolicy> policies, int num_actions);

/// Sum of the counts of all sources, then pevi_single.
SolverOutput pevi_pooled(std::span<const VisitCounts> counts, const PenaltyConfig& cfg);

nlohmann::json to_json(const SolverOutput& out, const Shape& shape);

} // namespace hetrl
