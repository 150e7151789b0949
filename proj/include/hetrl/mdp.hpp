#pragma once

#include "hetrl/errors.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hetrl {

using numvec = std::vector<double>;

/// Row sums of transition kernels, policies and initial distributions must be
/// within this distance of one.
inline constexpr double kSumTolerance = 1e-9;

/// Probabilities below this are treated as exact zeros when a support is needed.
inline constexpr double kSupportFloor = 1e-15;

/// Dimensions of an episodic tabular problem. Steps are 0-based: h in [0, H).
struct Shape {
    int horizon = 0;
    int num_states = 0;
    int num_actions = 0;

    std::size_t sa_size() const {
        return std::size_t(horizon) * num_states * num_actions;
    }
    std::size_t sas_size() const { return sa_size() * num_states; }

    std::size_t sa(int h, int s, int a) const {
        return (std::size_t(h) * num_states + s) * num_actions + a;
    }
    std::size_t sas(int h, int s, int a, int next) const {
        return sa(h, s, a) * num_states + next;
    }
    std::size_t hs(int h, int s) const { return std::size_t(h) * num_states + s; }

    bool operator==(const Shape&) const = default;
};

/**
 * Finite-horizon MDP (H, S, A, P, r) with time-dependent transitions and
 * deterministic rewards in [0, 1].
 *
 * Transitions are stored densely indexed (h, s, a, s') and rewards (h, s, a).
 * The object is immutable after construction; the constructor validates that
 * every transition row is a distribution and every reward lies in [0, 1].
 */
class EpisodicMdp {
public:
    EpisodicMdp(Shape shape, numvec transitions, numvec rewards);

    const Shape& shape() const { return shape_; }
    int horizon() const { return shape_.horizon; }
    int num_states() const { return shape_.num_states; }
    int num_actions() const { return shape_.num_actions; }

    double transition(int h, int s, int a, int next) const {
        return transitions_[shape_.sas(h, s, a, next)];
    }
    std::span<const double> transition_row(int h, int s, int a) const {
        return {transitions_.data() + shape_.sas(h, s, a, 0), std::size_t(shape_.num_states)};
    }
    double reward(int h, int s, int a) const { return rewards_[shape_.sa(h, s, a)]; }

    const numvec& transitions() const { return transitions_; }
    const numvec& rewards() const { return rewards_; }

    bool operator==(const EpisodicMdp&) const = default;

private:
    Shape shape_;
    numvec transitions_;
    numvec rewards_;
};

/**
 * Two-player zero-sum Markov game. The max-player picks a1 in [0, A1), the
 * min-player a2 in [0, A2). Internally this is an EpisodicMdp over the joint
 * action a = a1 * A2 + a2, which is also the flattened index used by datasets.
 */
class ZeroSumGame {
public:
    /// `transitions` indexed (h, s, a1, a2, s'), `rewards` indexed (h, s, a1, a2).
    ZeroSumGame(int horizon, int num_states, int max_actions, int min_actions,
                numvec transitions, numvec rewards);
    ZeroSumGame(EpisodicMdp joint, int max_actions, int min_actions);

    int horizon() const { return joint_.horizon(); }
    int num_states() const { return joint_.num_states(); }
    int max_actions() const { return max_actions_; }
    int min_actions() const { return min_actions_; }

    int joint_action(int a1, int a2) const { return a1 * min_actions_ + a2; }

    double transition(int h, int s, int a1, int a2, int next) const {
        return joint_.transition(h, s, joint_action(a1, a2), next);
    }
    double reward(int h, int s, int a1, int a2) const {
        return joint_.reward(h, s, joint_action(a1, a2));
    }

    const EpisodicMdp& joint() const { return joint_; }

private:
    EpisodicMdp joint_;
    int max_actions_;
    int min_actions_;
};

/// Nominal MDP and KL radius of a rectangular (s, a, h) uncertainty set.
class RobustSpec {
public:
    RobustSpec(EpisodicMdp nominal, double sigma);

    const EpisodicMdp& nominal() const { return nominal_; }
    double sigma() const { return sigma_; }

private:
    EpisodicMdp nominal_;
    double sigma_;
};

/// Initial state distribution.
class InitDist {
public:
    explicit InitDist(numvec probs);

    static InitDist uniform(int num_states);
    static InitDist point(int num_states, int state);

    int num_states() const { return int(probs_.size()); }
    double operator[](int s) const { return probs_[std::size_t(s)]; }
    const numvec& probs() const { return probs_; }

private:
    numvec probs_;
};

/// Throws InputError unless `row` is a probability vector within kSumTolerance.
void check_distribution(std::span<const double> row, const char* what);

} // namespace hetrl
