#include "hetrl/sources.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hetrl {

void GeneratorConfig::validate() const {
    if (kind == GeneratorKind::DirichletBernoulli && !(concentration > 0.0))
        throw InputError("generator concentration must be positive");
    if (kind == GeneratorKind::SubGaussian && !(sigma_g >= 0.0))
        throw InputError("generator sigma_g must be non-negative");
}

void BoundedGeneratorConfig::validate() const {
    base.validate();
    if (!(lower > 0.0 && lower <= 1.0)) throw InputError("bounded generator: lower factor must be in (0, 1]");
    if (!(upper >= 1.0)) throw InputError("bounded generator: upper factor must be >= 1");
    if (max_attempts < 1) throw InputError("bounded generator: max_attempts must be >= 1");
}

namespace {

/// Standard normal restricted to [-bound, bound] times `scale`. Uses a normal
/// proposal when the window is wide relative to the scale, a uniform one
/// otherwise; both are exact.
double truncated_normal(Rng& rng, double scale, double bound) {
    if (scale <= 0.0 || bound <= 0.0) return 0.0;
    if (scale <= bound) {
        std::normal_distribution<double> normal(0.0, scale);
        for (;;) {
            const double x = normal(rng);
            if (std::abs(x) <= bound) return x;
        }
    }
    for (;;) {
        const double x = (2.0 * uniform01(rng) - 1.0) * bound;
        if (uniform01(rng) < std::exp(-0.5 * (x / scale) * (x / scale))) return x;
    }
}

void draw_dirichlet(Rng& rng, std::span<const double> target, double kappa, std::span<double> out) {
    for (;;) {
        double sum = 0.0;
        bool lost_support = false;
        for (std::size_t i = 0; i < target.size(); ++i) {
            if (target[i] <= 0.0) {
                out[i] = 0.0;
                continue;
            }
            std::gamma_distribution<double> gamma(kappa * target[i], 1.0);
            out[i] = gamma(rng);
            if (!(out[i] > 0.0)) lost_support = true;
            sum += out[i];
        }
        if (lost_support || !(sum > 0.0) || !std::isfinite(sum)) continue;
        for (double& v : out) v /= sum;
        return;
    }
}

void draw_logit_noise(Rng& rng, std::span<const double> target, double sigma_g, std::span<double> out) {
    double top = -INFINITY;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] <= 0.0) continue;
        out[i] = std::log(target[i]) + truncated_normal(rng, sigma_g, 2.0 * sigma_g);
        top = std::max(top, out[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        out[i] = target[i] <= 0.0 ? 0.0 : std::exp(out[i] - top);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
}

EpisodicMdp draw_source(const EpisodicMdp& target, const GeneratorConfig& cfg, Rng& rng) {
    const Shape& sh = target.shape();
    numvec trans = target.transitions();
    numvec rew = target.rewards();
    for (int h = 0; h < sh.horizon; ++h)
        for (int s = 0; s < sh.num_states; ++s)
            for (int a = 0; a < sh.num_actions; ++a) {
                std::span<double> row(trans.data() + sh.sas(h, s, a, 0), std::size_t(sh.num_states));
                draw_transition_row(rng, target.transition_row(h, s, a), cfg, row);
                rew[sh.sa(h, s, a)] = draw_reward(rng, target.reward(h, s, a), cfg);
            }
    return EpisodicMdp(sh, std::move(trans), std::move(rew));
}

} // namespace

void draw_transition_row(Rng& rng, std::span<const double> target, const GeneratorConfig& cfg,
                         std::span<double> out) {
    switch (cfg.kind) {
    case GeneratorKind::Degenerate:
        std::copy(target.begin(), target.end(), out.begin());
        return;
    case GeneratorKind::DirichletBernoulli:
        draw_dirichlet(rng, target, cfg.concentration, out);
        return;
    case GeneratorKind::SubGaussian:
        draw_logit_noise(rng, target, cfg.sigma_g, out);
        return;
    }
}

double draw_reward(Rng& rng, double target, const GeneratorConfig& cfg) {
    switch (cfg.kind) {
    case GeneratorKind::Degenerate:
        return target;
    case GeneratorKind::DirichletBernoulli:
        return uniform01(rng) < target ? 1.0 : 0.0;
    case GeneratorKind::SubGaussian: {
        // symmetric truncation around the target keeps the mean exact
        const double half_width = std::min(target, 1.0 - target);
        return std::clamp(target + truncated_normal(rng, cfg.sigma_g, half_width), 0.0, 1.0);
    }
    }
    return target;
}

std::vector<EpisodicMdp> generate_sources(const EpisodicMdp& target, int num_sources,
                                          const GeneratorConfig& cfg, std::uint64_t seed) {
    if (num_sources < 1) throw InputError("generate_sources: need at least one source");
    cfg.validate();
    std::vector<EpisodicMdp> out;
    out.reserve(std::size_t(num_sources));
    for (int l = 0; l < num_sources; ++l) {
        Rng rng(mix_seed(seed, {std::uint64_t(l)}));
        out.push_back(draw_source(target, cfg, rng));
    }
    return out;
}

std::vector<ZeroSumGame> generate_game_sources(const ZeroSumGame& target, int num_sources,
                                               const GeneratorConfig& cfg, std::uint64_t seed) {
    std::vector<ZeroSumGame> out;
    for (auto& joint : generate_sources(target.joint(), num_sources, cfg, seed))
        out.emplace_back(std::move(joint), target.max_actions(), target.min_actions());
    return out;
}

int draw_bounded_row(Rng& rng, std::span<const double> target, const BoundedGeneratorConfig& cfg,
                     std::span<double> out) {
    for (int attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
        draw_transition_row(rng, target, cfg.base, out);
        bool ok = true;
        for (std::size_t i = 0; i < target.size() && ok; ++i)
            ok = out[i] >= cfg.lower * target[i] && out[i] <= cfg.upper * target[i];
        if (ok) return attempt;
    }
    return -1;
}

std::vector<EpisodicMdp> generate_bounded_sources(const EpisodicMdp& nominal, int num_sources,
                                                  const BoundedGeneratorConfig& cfg,
                                                  std::uint64_t seed) {
    if (num_sources < 1) throw InputError("generate_bounded_sources: need at least one source");
    cfg.validate();
    const Shape& sh = nominal.shape();
    for (int h = 0; h < sh.horizon; ++h)
        for (int s = 0; s < sh.num_states; ++s)
            for (int a = 0; a < sh.num_actions; ++a) {
                double lo = 0.0, hi = 0.0;
                for (double p : nominal.transition_row(h, s, a)) {
                    lo += cfg.lower * p;
                    hi += cfg.upper * p;
                }
                if (lo > 1.0 + kSumTolerance || hi < 1.0 - kSumTolerance)
                    throw InputError("generate_bounded_sources: box misses the simplex");
            }

    std::vector<EpisodicMdp> out;
    for (int l = 0; l < num_sources; ++l) {
        Rng rng(mix_seed(seed, {std::uint64_t(l)}));
        numvec trans = nominal.transitions();
        numvec rew = nominal.rewards();
        for (int h = 0; h < sh.horizon; ++h)
            for (int s = 0; s < sh.num_states; ++s)
                for (int a = 0; a < sh.num_actions; ++a) {
                    std::span<double> row(trans.data() + sh.sas(h, s, a, 0), std::size_t(sh.num_states));
                    if (draw_bounded_row(rng, nominal.transition_row(h, s, a), cfg, row) < 0)
                        throw GenerationError("generate_bounded_sources: attempt budget exhausted at (h=" +
                                              std::to_string(h) + ", s=" + std::to_string(s) +
                                              ", a=" + std::to_string(a) + ") of source " +
                                              std::to_string(l));
                    rew[sh.sa(h, s, a)] = draw_reward(rng, nominal.reward(h, s, a), cfg.base);
                }
        out.emplace_back(sh, std::move(trans), std::move(rew));
    }
    return out;
}

EpisodicMdp random_mdp(const Shape& shape, std::uint64_t seed) {
    if (shape.horizon < 1 || shape.num_states < 1 || shape.num_actions < 1)
        throw InputError("random_mdp: dimensions must be positive");
    Rng rng(seed);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    numvec trans(shape.sas_size()), rew(shape.sa_size());
    for (std::size_t i = 0; i < shape.sa_size(); ++i) {
        double* row = trans.data() + i * shape.num_states;
        double sum = 0.0;
        for (int n = 0; n < shape.num_states; ++n) sum += row[n] = gamma(rng) + 1e-300;
        for (int n = 0; n < shape.num_states; ++n) row[n] /= sum;
        rew[i] = uniform01(rng);
    }
    return EpisodicMdp(shape, std::move(trans), std::move(rew));
}

ZeroSumGame random_game(int horizon, int num_states, int max_actions, int min_actions,
                        std::uint64_t seed) {
    return ZeroSumGame(random_mdp(Shape{horizon, num_states, max_actions * min_actions}, seed),
                       max_actions, min_actions);
}

// ---------------------------------------------------------------------------

namespace {

/// Transition table for the construction: at step 0, state 0 moves to state 0
/// with probability stay[a] and to state 1 otherwise; everything else stays put.
EpisodicMdp hard_mdp(int H, int S, const double (&stay)[3]) {
    const Shape sh{H, S, 3};
    numvec trans(sh.sas_size(), 0.0), rew(sh.sa_size(), 0.0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < 3; ++a) {
                rew[sh.sa(h, s, a)] = s == 0 ? 1.0 : 0.0;
                if (h == 0 && s == 0) {
                    trans[sh.sas(h, s, a, 0)] = stay[a];
                    trans[sh.sas(h, s, a, 1)] = 1.0 - stay[a];
                } else {
                    trans[sh.sas(h, s, a, s)] = 1.0;
                }
            }
    return EpisodicMdp(sh, std::move(trans), std::move(rew));
}

} // namespace

HardInstance build_hard_instance(int horizon, int num_states, double coverage, double epsilon,
                                 HardRegime regime, int num_good_sources) {
    if (horizon < 4) throw InputError("build_hard_instance: H must be at least 4");
    if (num_states < 2) throw InputError("build_hard_instance: need at least two states");
    if (!(epsilon > 0.0) || !(epsilon < horizon / 64.0))
        throw InputError("build_hard_instance: epsilon must lie in (0, H/64)");
    if (!(coverage > 0.0) || 1.0 / (coverage * num_states) > 0.25)
        throw InputError("build_hard_instance: need 1/(C S) <= 1/4");
    if (num_good_sources < 0) throw InputError("build_hard_instance: negative good-source count");

    const double H = horizon;
    double alpha = 0.0, gap = 0.0;
    if (regime == HardRegime::SourceLimited) {
        alpha = 0.5 - 16.0 * epsilon / H;
        gap = 0.125;
    } else {
        alpha = 0.25;
        gap = 8.0 * epsilon / H;
    }
    const double p_prime = 0.75 - 1.0 / H + gap;
    const double q_prime = p_prime - gap;
    const double p = p_prime - alpha * gap;
    const double q = q_prime + alpha * gap;
    if (!(gap <= 0.125) || !(alpha <= 0.5) || !(alpha >= 0.0))
        throw InputError("build_hard_instance: requires Delta <= 1/8 and 0 <= alpha <= 1/2");
    if (!(0.875 > p_prime && p_prime > p && p > q && q > q_prime && q_prime >= 0.5))
        throw InputError("build_hard_instance: parameter chain 7/8 > p' > p > q > q' >= 1/2 violated");

    const double mu0 = 1.0 / (coverage * num_states);
    numvec data_init(std::size_t(num_states), 0.0);
    data_init[0] = mu0;
    data_init[1] = 1.0 - mu0;

    numvec good(std::size_t(horizon) * num_states * 3, 0.0);
    for (std::size_t k = 0; k < good.size(); k += 3) good[k] = good[k + 1] = 0.5;

    const double m0[3] = {p, q, q}, m1[3] = {q, p, q};
    const double n0[3] = {p_prime, q_prime, q}, n1[3] = {q_prime, p_prime, q};
    return HardInstance{
        .horizon = horizon,
        .num_states = num_states,
        .coverage = coverage,
        .epsilon = epsilon,
        .regime = regime,
        .alpha = alpha,
        .gap = gap,
        .p_prime = p_prime,
        .p = p,
        .q = q,
        .q_prime = q_prime,
        .targets = {hard_mdp(horizon, num_states, m0), hard_mdp(horizon, num_states, m1)},
        .sources = {hard_mdp(horizon, num_states, n0), hard_mdp(horizon, num_states, n1)},
        .test_init = InitDist::point(num_states, 0),
        .data_init = InitDist(std::move(data_init)),
        .good_behavior = MixedPolicy(horizon, num_states, 3, std::move(good)),
        .bad_behavior = DeterministicPolicy::constant(horizon, num_states, 2),
        .num_good_sources = num_good_sources,
    };
}

HardSourceDraw draw_hard_sources(const HardInstance& inst, int phi, int num_sources,
                                 std::uint64_t seed) {
    if (phi != 0 && phi != 1) throw InputError("draw_hard_sources: phi must be 0 or 1");
    HardSourceDraw out;
    for (int l = 0; l < num_sources; ++l) {
        Rng rng(mix_seed(seed, {std::uint64_t(l)}));
        const int chi = uniform01(rng) < 1.0 - inst.alpha ? phi : 1 - phi;
        out.chi.push_back(chi);
        out.sources.push_back(inst.sources[std::size_t(chi)]);
    }
    return out;
}

} // namespace hetrl
