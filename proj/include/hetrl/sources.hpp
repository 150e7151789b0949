#pragma once

#include "hetrl/mdp.hpp"
#include "hetrl/policy.hpp"
#include "hetrl/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hetrl {

enum class GeneratorKind {
    Degenerate,         ///< every source equals the target
    DirichletBernoulli, ///< Dirichlet(kappa * P) rows, one Bernoulli(r) reward draw
    SubGaussian,        ///< truncated Gaussian noise on logits and rewards
};

/// How source MDPs are drawn around a target. Every mode has the target as
/// its mean except SubGaussian transitions, where renormalized logit noise
/// introduces a small bias.
struct GeneratorConfig {
    GeneratorKind kind = GeneratorKind::DirichletBernoulli;
    double concentration = 1.0; ///< kappa; larger means sources closer to the target
    double sigma_g = 0.1;       ///< SubGaussian noise scale

    void validate() const;
};

/// Rejection sampling around a base generator so that every source entry
/// satisfies lower * P <= P_l <= upper * P.
struct BoundedGeneratorConfig {
    GeneratorConfig base;
    double lower = 0.5;
    double upper = 2.0;
    int max_attempts = 10000; ///< per transition row

    void validate() const;
};

/// Draws one source transition row for a target row. Zero target entries stay
/// exactly zero and positive ones stay positive.
void draw_transition_row(Rng& rng, std::span<const double> target, const GeneratorConfig& cfg,
                         std::span<double> out);

/// Draws one source reward for a target reward in [0, 1].
double draw_reward(Rng& rng, double target, const GeneratorConfig& cfg);

/// L perturbed copies of `target`. Source l is drawn from mix_seed(seed, {l})
/// alone, so the output does not depend on generation order.
std::vector<EpisodicMdp> generate_sources(const EpisodicMdp& target, int num_sources,
                                          const GeneratorConfig& cfg, std::uint64_t seed);

/// Same as generate_sources applied to the joint-action MDP of a game.
std::vector<ZeroSumGame> generate_game_sources(const ZeroSumGame& target, int num_sources,
                                               const GeneratorConfig& cfg, std::uint64_t seed);

/// Sources whose transition entries stay in [lower * P, upper * P]. Rows are
/// redrawn until they satisfy the box; the accepted rows are therefore not
/// unbiased for P in general. Throws GenerationError naming the (h, s, a)
/// whose attempt budget ran out, InputError if a box misses the simplex.
std::vector<EpisodicMdp> generate_bounded_sources(const EpisodicMdp& nominal, int num_sources,
                                                  const BoundedGeneratorConfig& cfg,
                                                  std::uint64_t seed);

/// One bounded row draw; returns the number of attempts used, or -1 if the
/// budget ran out (in which case `out` holds the last rejected draw).
int draw_bounded_row(Rng& rng, std::span<const double> target, const BoundedGeneratorConfig& cfg,
                     std::span<double> out);

/// Random instance with Dirichlet(1, ..., 1) transition rows and rewards
/// uniform on [0, 1].
EpisodicMdp random_mdp(const Shape& shape, std::uint64_t seed);
ZeroSumGame random_game(int horizon, int num_states, int max_actions, int min_actions,
                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Lower-bound construction
// ---------------------------------------------------------------------------

enum class HardRegime {
    SourceLimited, ///< alpha = 1/2 - 16 eps / H, gap parameter 1/8
    SampleLimited, ///< alpha = 1/4, gap parameter 8 eps / H
};

/**
 * Pair of three-action targets M^0, M^1 that differ only in which of actions
 * 0 and 1 is better at state 0 of the first step, together with the two
 * source MDPs N^0, N^1 whose alpha-mixtures they are. State 0 pays reward 1
 * at every step; every other state pays 0 and is absorbing.
 */
struct HardInstance {
    int horizon = 0;
    int num_states = 0;
    double coverage = 0.0; ///< C
    double epsilon = 0.0;
    HardRegime regime = HardRegime::SampleLimited;

    double alpha = 0.0; ///< probability that a source comes from the other N
    double gap = 0.0;   ///< Delta
    double p_prime = 0.0, p = 0.0, q = 0.0, q_prime = 0.0;

    std::vector<EpisodicMdp> targets; ///< M^0, M^1
    std::vector<EpisodicMdp> sources; ///< N^0, N^1
    InitDist test_init;               ///< point mass on state 0
    InitDist data_init;               ///< 1/(CS) on state 0, the rest on state 1
    MixedPolicy good_behavior;        ///< uniform on actions {0, 1}
    DeterministicPolicy bad_behavior; ///< always action 2
    int num_good_sources = 1;         ///< L^double-dagger
};

/// Builds the construction and validates 7/8 > p' > p > q > q' >= 1/2.
/// Throws InputError naming the violated precondition.
HardInstance build_hard_instance(int horizon, int num_states, double coverage, double epsilon,
                                 HardRegime regime, int num_good_sources = 1);

struct HardSourceDraw {
    std::vector<EpisodicMdp> sources;
    std::vector<int> chi; ///< which N each source equals
};

/// Draws L sources for target phi: N^phi with probability 1 - alpha and
/// N^{1-phi} otherwise, one independent draw per source.
HardSourceDraw draw_hard_sources(const HardInstance& inst, int phi, int num_sources,
                                 std::uint64_t seed);

} // namespace hetrl
