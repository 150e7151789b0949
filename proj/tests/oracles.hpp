#pragma once

// Independent reference computations for the tests: Monte-Carlo rollouts,
// grid searches over simplices and KL balls, and brute-force enumeration.
// Nothing here calls the library's solvers, so agreement is a real check.

#include "hetrl/mdp.hpp"
#include "hetrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using hetrl::EpisodicMdp;
using hetrl::InitDist;
using hetrl::MixedPolicy;
using hetrl::numvec;

inline int draw(std::mt19937& rng, const numvec& probs) {
    std::discrete_distribution<int> d(probs.begin(), probs.end());
    return d(rng);
}

inline numvec row_of(const EpisodicMdp& m, int h, int s, int a) {
    numvec r(std::size_t(m.num_states()));
    for (int n = 0; n < m.num_states(); ++n) r[std::size_t(n)] = m.transition(h, s, a, n);
    return r;
}

struct Rollouts {
    numvec returns;         ///< one per episode
    numvec visit_frequency; ///< empirical d_h(s, a), indexed like Shape::sa
    double mean() const {
        double m = 0.0;
        for (double r : returns) m += r;
        return m / double(returns.size());
    }
    double stderr_mean() const {
        const double m = mean();
        double ss = 0.0;
        for (double r : returns) ss += (r - m) * (r - m);
        return std::sqrt(ss / double(returns.size() - 1) / double(returns.size()));
    }
};

/// Plain simulation with std::discrete_distribution.
inline Rollouts rollout(const EpisodicMdp& m, const MixedPolicy& pi, const InitDist& xi, int episodes,
                        unsigned seed) {
    std::mt19937 rng(seed);
    const auto& sh = m.shape();
    Rollouts out{numvec(std::size_t(episodes)), numvec(sh.sa_size(), 0.0)};
    std::vector<std::discrete_distribution<int>> act(std::size_t(sh.horizon) * sh.num_states);
    std::vector<std::discrete_distribution<int>> step(sh.sa_size());
    for (int h = 0; h < sh.horizon; ++h)
        for (int s = 0; s < sh.num_states; ++s) {
            numvec p(std::size_t(sh.num_actions));
            for (int a = 0; a < sh.num_actions; ++a) {
                p[std::size_t(a)] = pi.prob(h, s, a);
                const numvec r = row_of(m, h, s, a);
                step[sh.sa(h, s, a)] = std::discrete_distribution<int>(r.begin(), r.end());
            }
            act[sh.hs(h, s)] = std::discrete_distribution<int>(p.begin(), p.end());
        }
    std::discrete_distribution<int> init(xi.probs().begin(), xi.probs().end());
    for (int e = 0; e < episodes; ++e) {
        int s = init(rng);
        double ret = 0.0;
        for (int h = 0; h < sh.horizon; ++h) {
            const int a = act[sh.hs(h, s)](rng);
            out.visit_frequency[sh.sa(h, s, a)] += 1.0;
            ret += m.reward(h, s, a);
            s = step[sh.sa(h, s, a)](rng);
        }
        out.returns[std::size_t(e)] = ret;
    }
    for (double& f : out.visit_frequency) f /= episodes;
    return out;
}

inline double kl(const numvec& q, const numvec& p) {
    double d = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] <= 0.0) continue;
        if (p[i] <= 0.0) return std::numeric_limits<double>::infinity();
        d += q[i] * std::log(q[i] / p[i]);
    }
    return d;
}

/// min q.V over grid points of the KL ball. S = 2 and S = 3 are exhaustive
/// at `step`; S = 4 scans the simplex at 1e-2, then zooms to `step` around the incumbent
/// (valid because the objective is linear and the ball convex).
inline double kl_ball_min(const numvec& v, const numvec& p, double sigma, double step = 1e-4) {
    const std::size_t S = v.size();
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](const numvec& q) {
        if (kl(q, p) <= sigma) {
            double val = 0.0;
            for (std::size_t i = 0; i < S; ++i) val += q[i] * v[i];
            best = std::min(best, val);
            return val;
        }
        return std::numeric_limits<double>::infinity();
    };
    numvec q(S);
    if (S == 1) return v[0];
    if (S == 2) {
        const int n = int(std::lround(1.0 / step));
        for (int i = 0; i <= n; ++i) {
            q[0] = double(i) / n;
            q[1] = 1.0 - q[0];
            consider(q);
        }
        return best;
    }
    if (S == 3) {
        const int n = int(std::lround(1.0 / step));
        for (int i = 0; i <= n; ++i)
            for (int j = 0; i + j <= n; ++j) {
                q[0] = double(i) / n;
                q[1] = double(j) / n;
                q[2] = std::max(0.0, 1.0 - q[0] - q[1]);
                consider(q);
            }
        return best;
    }
    // S == 4
    // first pass covers the whole simplex; later passes zoom in
    numvec centre{0.0, 0.0, 0.0};
    double h = 1e-2;
    int lo = 0, n = 100;
    while (true) {
        numvec incumbent = centre;
        double inc_val = std::numeric_limits<double>::infinity();
        for (int i = lo; i <= n; ++i)
            for (int j = lo; j <= n; ++j)
                for (int k = lo; k <= n; ++k) {
                    q[0] = centre[0] + i * h;
                    q[1] = centre[1] + j * h;
                    q[2] = centre[2] + k * h;
                    if (q[0] < -1e-15 || q[1] < -1e-15 || q[2] < -1e-15) continue;
                    q[3] = 1.0 - q[0] - q[1] - q[2];
                    if (q[3] < -1e-15) continue;
                    for (auto& x : q) x = std::max(x, 0.0);
                    const double val = consider(q);
                    if (val < inc_val) {
                        inc_val = val;
                        incumbent = {q[0], q[1], q[2]};
                    }
                }
        if (h <= step * 1.0001) break;
        centre = incumbent;
        h /= 10;
        lo = -20;
        n = 20;
    }
    return best;
}

/// max_x min_j (x^T A)_j with x on a `step` grid of the row simplex (rows <= 3).
inline double grid_maxmin(const numvec& a, int rows, int cols, double step) {
    const int n = int(std::lround(1.0 / step));
    double best = -std::numeric_limits<double>::infinity();
    auto eval = [&](const numvec& x) {
        double worst = std::numeric_limits<double>::infinity();
        for (int j = 0; j < cols; ++j) {
            double v = 0.0;
            for (int i = 0; i < rows; ++i) v += x[std::size_t(i)] * a[std::size_t(i) * cols + j];
            worst = std::min(worst, v);
        }
        best = std::max(best, worst);
    };
    numvec x(static_cast<std::size_t>(rows));
    if (rows == 1) {
        x[0] = 1;
        eval(x);
    } else if (rows == 2) {
        for (int i = 0; i <= n; ++i) {
            x[0] = double(i) / n;
            x[1] = 1 - x[0];
            eval(x);
        }
    } else {
        for (int i = 0; i <= n; ++i)
            for (int j = 0; i + j <= n; ++j) {
                x[0] = double(i) / n;
                x[1] = double(j) / n;
                x[2] = 1 - x[0] - x[1];
                eval(x);
            }
    }
    return best;
}

/// Transposed and negated: min_y max_i (A y)_i.
inline double grid_minmax(const numvec& a, int rows, int cols, double step) {
    numvec t(a.size());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t[std::size_t(j) * rows + i] = -a[std::size_t(i) * cols + j];
    return -grid_maxmin(t, cols, rows, step);
}

/// Calls fn(actions) for every deterministic policy table of length `cells`
/// over `num_actions` actions.
inline void for_each_deterministic(int cells, int num_actions, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> a(std::size_t(cells), 0);
    while (true) {
        fn(a);
        int i = 0;
        while (i < cells && ++a[std::size_t(i)] == num_actions) a[std::size_t(i++)] = 0;
        if (i == cells) return;
    }
}

/// Random mixed policy with Dirichlet(1) rows.
inline MixedPolicy random_mixed(int H, int S, int A, std::mt19937& rng) {
    std::gamma_distribution<double> g(1.0, 1.0);
    numvec p(std::size_t(H) * S * A);
    for (std::size_t r = 0; r < p.size(); r += std::size_t(A)) {
        double sum = 0.0;
        for (int a = 0; a < A; ++a) sum += p[r + a] = g(rng) + 1e-12;
        for (int a = 0; a < A; ++a) p[r + a] /= sum;
    }
    return MixedPolicy(H, S, A, std::move(p));
}

/// V^{mu x nu}_1(xi) by a direct backward recursion over (a1, a2).
inline double game_value(const hetrl::ZeroSumGame& g, const MixedPolicy& mu, const MixedPolicy& nu,
                         const InitDist& xi) {
    const int H = g.horizon(), S = g.num_states();
    numvec v(std::size_t(S), 0.0), next(std::size_t(S), 0.0);
    for (int h = H - 1; h >= 0; --h) {
        for (int s = 0; s < S; ++s) {
            double acc = 0.0;
            for (int a1 = 0; a1 < g.max_actions(); ++a1)
                for (int a2 = 0; a2 < g.min_actions(); ++a2) {
                    double q = g.reward(h, s, a1, a2);
                    for (int n = 0; n < S; ++n) q += g.transition(h, s, a1, a2, n) * next[std::size_t(n)];
                    acc += mu.prob(h, s, a1) * nu.prob(h, s, a2) * q;
                }
            v[std::size_t(s)] = acc;
        }
        next = v;
    }
    double out = 0.0;
    for (int s = 0; s < S; ++s) out += xi[s] * next[std::size_t(s)];
    return out;
}

} // namespace oracle
