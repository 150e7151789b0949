#include "hetrl/diagnostics.hpp"

#include "hetrl/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetrl {

CoverageSets coverage_sets(std::span<const EpisodicMdp> sources, std::span<const Policy> behaviors,
                           std::span<const InitDist> inits) {
    if (sources.empty()) throw InputError("coverage_sets: need at least one source");
    if (behaviors.size() != sources.size() || inits.size() != sources.size())
        throw ShapeError("coverage_sets: sources, behaviors and inits must align");
    const Shape sh = sources[0].shape();
    const int L = int(sources.size());
    CoverageSets out{sh, L, numvec(sh.sa_size() * L, 0.0), std::vector<std::vector<int>>(sh.sa_size())};
    for (int l = 0; l < L; ++l) {
        if (sources[std::size_t(l)].shape() != sh) throw ShapeError("coverage_sets: sources differ in shape");
        const OccupancyTables occ =
            occupancy(sources[std::size_t(l)], behaviors[std::size_t(l)], inits[std::size_t(l)]);
        for (std::size_t i = 0; i < sh.sa_size(); ++i) {
            out.occupancy[i * L + l] = occ.state_action[i];
            if (occ.state_action[i] > kOccupancyFloor) out.sets[i].push_back(l);
        }
    }
    return out;
}

CoverageSets coverage_sets(std::span<const ZeroSumGame> sources, std::span<const Policy> behaviors,
                           std::span<const InitDist> inits) {
    std::vector<EpisodicMdp> joint;
    joint.reserve(sources.size());
    for (const auto& g : sources) joint.push_back(g.joint());
    return coverage_sets(std::span<const EpisodicMdp>(joint), behaviors, inits);
}

namespace {

/// Fills l_dagger, c_dagger and d_min from `required` and `reference_occupancy`.
void finish_report(CoverageReport& r, const CoverageSets& sets) {
    if (sets.shape != r.shape) throw ShapeError("coverage: sets do not match the target");
    const int L = sets.num_sources;
    r.num_sources = L;
    r.sets = sets.sets;
    r.l_dagger = L;
    r.c_dagger = 0.0;
    r.d_min = std::numeric_limits<double>::infinity();
    bool any_required = false;
    for (std::size_t i = 0; i < r.shape.sa_size(); ++i) {
        const double d_ref = r.reference_occupancy[i];
        if (r.required[i]) {
            any_required = true;
            r.l_dagger = std::min(r.l_dagger, int(sets.sets[i].size()));
            if (d_ref > kOccupancyFloor) r.d_min = std::min(r.d_min, d_ref);
        }
        if (!(d_ref > kOccupancyFloor)) continue; // 0/0 counts as 0
        const auto& cover = sets.sets[i];
        if (cover.empty()) {
            r.c_dagger = std::numeric_limits<double>::infinity();
            continue;
        }
        double ratio = 0.0;
        for (int l : cover) ratio += std::min(d_ref, r.clip) / sets.occupancy[i * L + l];
        r.c_dagger = std::max(r.c_dagger, ratio / double(cover.size()));
    }
    if (!any_required) r.l_dagger = 0;
    if (!std::isfinite(r.d_min)) r.d_min = 0.0;
    if (r.l_dagger == 0) r.c_dagger = std::numeric_limits<double>::infinity();
}

CoverageReport mdp_report(const char* kind, const EpisodicMdp& mdp, const DeterministicPolicy& policy,
                          const InitDist& xi, const CoverageSets& sets) {
    const Shape& sh = mdp.shape();
    const OccupancyTables occ = occupancy(mdp, policy, xi);
    CoverageReport r;
    r.kind = kind;
    r.shape = sh;
    r.clip = 1.0 / sh.num_states;
    r.reference_occupancy = occ.state_action;
    r.required.resize(sh.sa_size());
    for (std::size_t i = 0; i < sh.sa_size(); ++i) r.required[i] = occ.state_action[i] > kOccupancyFloor;
    finish_report(r, sets);
    return r;
}

} // namespace

CoverageReport coverage_params(const EpisodicMdp& target, const InitDist& xi, const CoverageSets& sets) {
    return mdp_report("mdp", target, optimal_policy(target).policy, xi, sets);
}

CoverageReport coverage_params_robust(const RobustSpec& target, const InitDist& xi,
                                      const CoverageSets& sets) {
    CoverageReport r = mdp_report("robust", target.nominal(), robust_optimal_policy(target).policy, xi, sets);
    r.c_dagger_lower_bound = true;
    return r;
}

CoverageReport coverage_params_game(const ZeroSumGame& target, const InitDist& xi,
                                    const CoverageSets& sets) {
    const int H = target.horizon(), S = target.num_states();
    const int A1 = target.max_actions(), A2 = target.min_actions();
    const Shape sh = target.joint().shape();
    const MixedPolicy mu = solve_game(target).policy.max_player;

    // P(s' | s, a2) once mu* is fixed
    const EpisodicMdp induced = fix_max_player(target, mu);

    // states some nu can reach: union over a2, which a full-support nu attains
    std::vector<char> reach(std::size_t(H) * S, 0);
    for (int s = 0; s < S; ++s) reach[sh.hs(0, s)] = xi[s] > 0.0;
    for (int h = 0; h + 1 < H; ++h)
        for (int s = 0; s < S; ++s) {
            if (!reach[sh.hs(h, s)]) continue;
            for (int b = 0; b < A2; ++b)
                for (int n = 0; n < S; ++n)
                    if (induced.transition(h, s, b, n) > kSupportFloor) reach[sh.hs(h + 1, n)] = 1;
        }

    // max over nu of d_h(s): backward DP on the probability of hitting s at step h
    numvec best_state(std::size_t(H) * S, 0.0);
    numvec w(static_cast<std::size_t>(S)), prev(static_cast<std::size_t>(S));
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            if (!reach[sh.hs(h, s)]) continue;
            std::fill(w.begin(), w.end(), 0.0);
            w[std::size_t(s)] = 1.0;
            for (int t = h - 1; t >= 0; --t) {
                for (int x = 0; x < S; ++x) {
                    double top = 0.0;
                    for (int b = 0; b < A2; ++b) top = std::max(top, expect(induced.transition_row(t, x, b), w));
                    prev[std::size_t(x)] = top;
                }
                std::swap(w, prev);
            }
            double d = 0.0;
            for (int x = 0; x < S; ++x) d += xi[x] * w[std::size_t(x)];
            best_state[sh.hs(h, s)] = d;
        }

    CoverageReport r;
    r.kind = "game";
    r.shape = sh;
    r.clip = 1.0 / (double(S) * A1);
    r.reference_occupancy.assign(sh.sa_size(), 0.0);
    r.required.assign(sh.sa_size(), 0);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
            for (int a1 = 0; a1 < A1; ++a1) {
                const double m = mu.prob(h, s, a1);
                if (!reach[sh.hs(h, s)] || !(m > kSupportFloor)) continue;
                for (int a2 = 0; a2 < A2; ++a2) {
                    const std::size_t i = sh.sa(h, s, target.joint_action(a1, a2));
                    r.required[i] = 1;
                    r.reference_occupancy[i] = best_state[sh.hs(h, s)] * m;
                }
            }
    finish_report(r, sets);
    return r;
}

double gap(const EpisodicMdp& target, const Policy& policy, const InitDist& xi) {
    const OptimalSolution opt = optimal_policy(target);
    return opt.values.expected(0, xi) - evaluate_policy(target, policy, xi);
}

double mg_gap(const ZeroSumGame& game, const MixedPolicy& max_policy, const InitDist& xi) {
    const GameSolution ne = solve_game(game);
    return ne.values.expected(0, xi) - best_response(game, max_policy, xi).value;
}

double r_gap(const RobustSpec& spec, const Policy& policy, const InitDist& xi) {
    const OptimalSolution opt = robust_optimal_policy(spec);
    return opt.values.expected(0, xi) - robust_policy_value(spec, policy, xi);
}

nlohmann::json to_json(const CoverageReport& report) {
    auto finite_or_null = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return "inf";
    };
    nlohmann::json sets = nlohmann::json::array();
    for (const auto& s : report.sets) sets.push_back(s);
    return {{"kind", report.kind},
            {"num_sources", report.num_sources},
            {"l_dagger", report.l_dagger},
            {"c_dagger", finite_or_null(report.c_dagger)},
            {"c_dagger_lower_bound", report.c_dagger_lower_bound},
            {"d_min", report.d_min},
            {"clip", report.clip},
            {"reference_occupancy", report.reference_occupancy},
            {"sets", sets}};
}

} // namespace hetrl
