#include "hetrl/mdp.hpp"

#include <cmath>
#include <string>

namespace hetrl {

void check_distribution(std::span<const double> row, const char* what) {
    double sum = 0.0;
    for (double p : row) {
        if (!std::isfinite(p) || p < 0.0)
            throw InputError(std::string(what) + ": negative or non-finite probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance)
        throw InputError(std::string(what) + ": probabilities sum to " + std::to_string(sum));
}

EpisodicMdp::EpisodicMdp(Shape shape, numvec transitions, numvec rewards)
    : shape_(shape), transitions_(std::move(transitions)), rewards_(std::move(rewards)) {
    if (shape_.horizon <= 0 || shape_.num_states <= 0 || shape_.num_actions <= 0)
        throw ShapeError("EpisodicMdp: horizon, states and actions must be positive");
    if (transitions_.size() != shape_.sas_size())
        throw ShapeError("EpisodicMdp: transition table has " +
                         std::to_string(transitions_.size()) + " entries, expected " +
                         std::to_string(shape_.sas_size()));
    if (rewards_.size() != shape_.sa_size())
        throw ShapeError("EpisodicMdp: reward table has " + std::to_string(rewards_.size()) +
                         " entries, expected " + std::to_string(shape_.sa_size()));
    for (int h = 0; h < shape_.horizon; ++h)
        for (int s = 0; s < shape_.num_states; ++s)
            for (int a = 0; a < shape_.num_actions; ++a)
                check_distribution(transition_row(h, s, a), "EpisodicMdp transition row");
    for (double r : rewards_)
        if (!(r >= 0.0 && r <= 1.0)) throw InputError("EpisodicMdp: reward outside [0, 1]");
}

ZeroSumGame::ZeroSumGame(int horizon, int num_states, int max_actions, int min_actions,
                         numvec transitions, numvec rewards)
    : ZeroSumGame(EpisodicMdp(Shape{horizon, num_states, max_actions * min_actions},
                              std::move(transitions), std::move(rewards)),
                  max_actions, min_actions) {}

ZeroSumGame::ZeroSumGame(EpisodicMdp joint, int max_actions, int min_actions)
    : joint_(std::move(joint)), max_actions_(max_actions), min_actions_(min_actions) {
    if (max_actions_ <= 0 || min_actions_ <= 0 ||
        max_actions_ * min_actions_ != joint_.num_actions())
        throw ShapeError("ZeroSumGame: joint action count must equal A1 * A2");
}

RobustSpec::RobustSpec(EpisodicMdp nominal, double sigma)
    : nominal_(std::move(nominal)), sigma_(sigma) {
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
        throw InputError("RobustSpec: sigma must be positive");
}

InitDist::InitDist(numvec probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw ShapeError("InitDist: empty");
    check_distribution(probs_, "InitDist");
}

InitDist InitDist::uniform(int num_states) {
    return InitDist(numvec(std::size_t(num_states), 1.0 / num_states));
}

InitDist InitDist::point(int num_states, int state) {
    numvec p(std::size_t(num_states), 0.0);
    p.at(std::size_t(state)) = 1.0;
    return InitDist(std::move(p));
}

} // namespace hetrl
