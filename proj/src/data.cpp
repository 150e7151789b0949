#include "hetrl/data.hpp"

#include "hetrl/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>

namespace hetrl {

SourceDataset sample_dataset(const EpisodicMdp& source, const Policy& behavior, const InitDist& xi,
                             int num_trajectories, std::uint64_t seed, int source_id) {
    if (num_trajectories < 1) throw InputError("sample_dataset: K must be at least 1");
    const Shape& sh = source.shape();
    check_policy_shape(behavior, sh);
    if (xi.num_states() != sh.num_states) throw ShapeError("sample_dataset: InitDist size mismatch");
    const MixedPolicy rho = to_mixed(behavior, sh.num_actions);

    SourceDataset out{source_id, sh, num_trajectories, {}};
    out.steps.reserve(std::size_t(num_trajectories) * sh.horizon);
    Rng rng(seed);
    for (int k = 0; k < num_trajectories; ++k) {
        int s = sample_categorical(rng, xi.probs());
        for (int h = 0; h < sh.horizon; ++h) {
            const int a = sample_categorical(rng, rho.row(h, s));
            const int next = sample_categorical(rng, source.transition_row(h, s, a));
            out.steps.push_back({s, a, source.reward(h, s, a), next});
            s = next;
        }
    }
    return out;
}

TransitionSet two_fold_subsample(const SourceDataset& dataset, const SubsampleConfig& cfg,
                                 std::uint64_t seed) {
    const int K = dataset.num_trajectories;
    if (K < 2) throw InputError("two_fold_subsample: K must be at least 2");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
        throw InputError("two_fold_subsample: delta must lie in (0, 1)");
    if (cfg.num_sources < 1) throw InputError("two_fold_subsample: num_sources must be >= 1");
    if (!(cfg.trim_constant >= 0.0)) throw InputError("two_fold_subsample: negative trim constant");

    const Shape& sh = dataset.shape;
    Rng rng(seed);
    std::vector<char> is_main(static_cast<std::size_t>(K));
    for (auto& m : is_main) m = uniform01(rng) < 0.5;

    std::vector<std::int64_t> n_aux(sh.sa_size(), 0);
    for (int k = 0; k < K; ++k) {
        if (is_main[std::size_t(k)]) continue;
        for (int h = 0; h < sh.horizon; ++h) {
            const Step& st = dataset.at(k, h);
            ++n_aux[sh.sa(h, st.state, st.action)];
        }
    }

    const double log_term = std::log(double(K) * sh.horizon * cfg.num_sources / cfg.delta);
    std::vector<std::int64_t> budget(sh.sa_size());
    for (std::size_t i = 0; i < budget.size(); ++i) {
        const double n = double(n_aux[i]);
        const double trimmed = n - cfg.trim_constant * std::sqrt(n * log_term);
        budget[i] = trimmed > 0.0 ? std::int64_t(std::floor(trimmed)) : 0;
    }

    TransitionSet out{dataset.source_id, sh, {}};
    for (int k = 0; k < K; ++k) {
        if (!is_main[std::size_t(k)]) continue;
        for (int h = 0; h < sh.horizon; ++h) {
            const Step& st = dataset.at(k, h);
            auto& left = budget[sh.sa(h, st.state, st.action)];
            if (left <= 0) continue;
            --left;
            out.samples.push_back({h, st});
        }
    }
    return out;
}

TransitionSet flatten(const SourceDataset& dataset) {
    TransitionSet out{dataset.source_id, dataset.shape, {}};
    out.samples.reserve(dataset.steps.size());
    for (int k = 0; k < dataset.num_trajectories; ++k)
        for (int h = 0; h < dataset.shape.horizon; ++h) out.samples.push_back({h, dataset.at(k, h)});
    return out;
}

VisitCounts::VisitCounts(Shape shape_)
    : shape(shape_), sa(shape_.sa_size(), 0), sas(shape_.sas_size(), 0),
      reward_lo(shape_.sa_size(), std::numeric_limits<double>::infinity()),
      reward_hi(shape_.sa_size(), -std::numeric_limits<double>::infinity()),
      reward_sum(shape_.sa_size(), 0.0) {}

namespace {

void add_visit(VisitCounts& c, int h, const Step& st) {
    const std::size_t i = c.shape.sa(h, st.state, st.action);
    ++c.sa[i];
    ++c.sas[c.shape.sas(h, st.state, st.action, st.next_state)];
    c.reward_lo[i] = std::min(c.reward_lo[i], st.reward);
    c.reward_hi[i] = std::max(c.reward_hi[i], st.reward);
    c.reward_sum[i] += st.reward;
}

} // namespace

VisitCounts count_visits(const TransitionSet& samples) {
    VisitCounts c(samples.shape);
    for (const auto& t : samples.samples) add_visit(c, t.step, t.data);
    return c;
}

VisitCounts count_visits(const SourceDataset& dataset) {
    VisitCounts c(dataset.shape);
    for (int k = 0; k < dataset.num_trajectories; ++k)
        for (int h = 0; h < dataset.shape.horizon; ++h) add_visit(c, h, dataset.at(k, h));
    return c;
}

AggregatedModel aggregate_model(std::span<const VisitCounts> counts) {
    if (counts.empty()) throw InputError("aggregate_model: need at least one source");
    const Shape sh = counts[0].shape;
    for (const auto& c : counts)
        if (c.shape != sh) throw ShapeError("aggregate_model: sources disagree on shape");

    const int L = int(counts.size());
    const int S = sh.num_states;
    AggregatedModel m{sh,
                      L,
                      numvec(sh.sa_size(), 0.0),
                      numvec(sh.sas_size(), 0.0),
                      std::vector<int>(sh.sa_size(), 0),
                      std::vector<std::int64_t>(sh.sa_size() * L, 0),
                      numvec(sh.sa_size(), 0.0)};

    for (int h = 0; h < sh.horizon; ++h)
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < sh.num_actions; ++a) {
                const std::size_t i = sh.sa(h, s, a);
                double* row = m.transition.data() + sh.sas(h, s, a, 0);
                int active = 0;
                for (int l = 0; l < L; ++l) {
                    const VisitCounts& c = counts[std::size_t(l)];
                    const std::int64_t n = c.sa[i];
                    m.visits[i * L + l] = n;
                    if (n == 0) continue;
                    if (c.reward_lo[i] != c.reward_hi[i])
                        throw DataIntegrityError(
                            "aggregate_model: source " + std::to_string(l) +
                            " logged different rewards at (h=" + std::to_string(h) +
                            ", s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
                    ++active;
                    m.reward[i] += c.reward_lo[i];
                    for (int n2 = 0; n2 < S; ++n2) row[n2] += double(c.sas[sh.sas(h, s, a, n2)]) / double(n);
                }
                m.num_active[i] = active;
                if (active == 0) {
                    std::fill(row, row + S, 1.0 / S);
                    continue;
                }
                m.reward[i] /= active;
                double p_min = 1.0;
                for (int n2 = 0; n2 < S; ++n2) {
                    row[n2] /= active;
                    if (row[n2] > kSupportFloor) p_min = std::min(p_min, row[n2]);
                }
                m.p_min[i] = p_min;
            }
    return m;
}

// ---------------------------------------------------------------------------

void write_dataset_csv(const std::filesystem::path& path, std::span<const SourceDataset> datasets,
                       int min_actions) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << (min_actions > 0 ? "source_id,trajectory,step,s,a1,a2,r,s_next\n"
                            : "source_id,trajectory,step,s,a,r,s_next\n");
    char buf[64];
    for (const auto& d : datasets)
        for (int k = 0; k < d.num_trajectories; ++k)
            for (int h = 0; h < d.shape.horizon; ++h) {
                const Step& st = d.at(k, h);
                out << d.source_id << ',' << k << ',' << h << ',' << st.state << ',';
                if (min_actions > 0)
                    out << st.action / min_actions << ',' << st.action % min_actions << ',';
                else
                    out << st.action << ',';
                auto res = std::to_chars(buf, buf + sizeof buf, st.reward);
                out.write(buf, res.ptr - buf);
                out << ',' << st.next_state << '\n';
            }
}

namespace {

template <class T>
T parse_field(const std::string& text, std::size_t line_no, const char* name) {
    T value{};
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw InputError("dataset line " + std::to_string(line_no) + ": bad " + name + " '" + text + "'");
    return value;
}

} // namespace

std::vector<SourceDataset> read_dataset_csv(const std::filesystem::path& path, const Shape& shape,
                                            int min_actions) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    const std::string expected = min_actions > 0 ? "source_id,trajectory,step,s,a1,a2,r,s_next"
                                                 : "source_id,trajectory,step,s,a,r,s_next";
    std::string line;
    if (!std::getline(in, line) || line != expected)
        throw InputError(path.string() + ": header must be '" + expected + "'");
    if (min_actions > 0 && shape.num_actions % min_actions != 0)
        throw ShapeError("read_dataset_csv: joint action count is not a multiple of A2");

    // source -> trajectory -> H steps, with a presence mask
    struct Partial {
        std::map<int, std::vector<Step>> trajectories;
        std::map<int, std::vector<char>> seen;
    };
    std::map<int, Partial> by_source;
    const std::size_t columns = min_actions > 0 ? 8 : 7;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (f.size() != columns)
            throw InputError("dataset line " + std::to_string(line_no) + ": expected " +
                             std::to_string(columns) + " fields");
        std::size_t c = 0;
        const int l = parse_field<int>(f[c++], line_no, "source_id");
        const int k = parse_field<int>(f[c++], line_no, "trajectory");
        const int h = parse_field<int>(f[c++], line_no, "step");
        Step st;
        st.state = parse_field<int>(f[c++], line_no, "s");
        if (min_actions > 0) {
            const int a1 = parse_field<int>(f[c++], line_no, "a1");
            const int a2 = parse_field<int>(f[c++], line_no, "a2");
            if (a1 < 0 || a2 < 0 || a2 >= min_actions || a1 >= shape.num_actions / min_actions)
                throw ShapeError("dataset line " + std::to_string(line_no) + ": action out of range");
            st.action = a1 * min_actions + a2;
        } else {
            st.action = parse_field<int>(f[c++], line_no, "a");
        }
        st.reward = parse_field<double>(f[c++], line_no, "r");
        st.next_state = parse_field<int>(f[c++], line_no, "s_next");

        const std::string where = "dataset line " + std::to_string(line_no) + ": ";
        if (l < 0 || k < 0) throw InputError(where + "negative source or trajectory id");
        if (h < 0 || h >= shape.horizon) throw ShapeError(where + "step out of range");
        if (st.state < 0 || st.state >= shape.num_states || st.next_state < 0 ||
            st.next_state >= shape.num_states)
            throw ShapeError(where + "state out of range");
        if (st.action < 0 || st.action >= shape.num_actions) throw ShapeError(where + "action out of range");
        if (!(st.reward >= 0.0 && st.reward <= 1.0)) throw InputError(where + "reward outside [0, 1]");

        Partial& p = by_source[l];
        auto& traj = p.trajectories[k];
        auto& seen = p.seen[k];
        if (traj.empty()) {
            traj.resize(std::size_t(shape.horizon));
            seen.assign(std::size_t(shape.horizon), 0);
        }
        if (seen[std::size_t(h)]) throw InputError(where + "duplicate step");
        seen[std::size_t(h)] = 1;
        traj[std::size_t(h)] = st;
    }

    std::vector<SourceDataset> out;
    for (auto& [l, p] : by_source) {
        SourceDataset d{l, shape, int(p.trajectories.size()), {}};
        int expected_k = 0;
        for (auto& [k, traj] : p.trajectories) {
            if (k != expected_k++)
                throw InputError("source " + std::to_string(l) + ": trajectory ids must be 0..K-1");
            const auto& seen = p.seen[k];
            if (std::find(seen.begin(), seen.end(), 0) != seen.end())
                throw InputError("source " + std::to_string(l) + ", trajectory " + std::to_string(k) +
                                 ": missing steps");
            for (int h = 0; h + 1 < shape.horizon; ++h)
                if (traj[std::size_t(h)].next_state != traj[std::size_t(h) + 1].state)
                    throw InputError("source " + std::to_string(l) + ", trajectory " +
                                     std::to_string(k) + ": s_next does not match the next step");
            d.steps.insert(d.steps.end(), traj.begin(), traj.end());
        }
        out.push_back(std::move(d));
    }
    return out;
}

} // namespace hetrl
