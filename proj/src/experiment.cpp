#include "hetrl/experiment.hpp"

#include "hetrl/evaluation.hpp"
#include "hetrl/robust.hpp"
#include "hetrl/serialize.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

namespace hetrl {

const char* setting_name(Setting s) {
    switch (s) {
    case Setting::Mdp: return "mdp";
    case Setting::Game: return "game";
    case Setting::Robust: return "robust";
    case Setting::LowerBound: return "lower_bound";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

template <class T>
T field(const json& j, const char* name, T fallback) {
    if (!j.contains(name)) return fallback;
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string("config field '") + name + "': " + e.what());
    }
}

[[noreturn]] void bad_field(const std::string& name, const std::string& why) {
    throw InputError("config field '" + name + "': " + why);
}

Setting parse_setting(const std::string& s) {
    if (s == "mdp") return Setting::Mdp;
    if (s == "game") return Setting::Game;
    if (s == "robust") return Setting::Robust;
    if (s == "lower_bound" || s == "lower-bound") return Setting::LowerBound;
    bad_field("setting", "unknown value '" + s + "'");
}

GeneratorKind parse_generator(const std::string& s) {
    if (s == "degenerate") return GeneratorKind::Degenerate;
    if (s == "dirichlet_bernoulli") return GeneratorKind::DirichletBernoulli;
    if (s == "sub_gaussian") return GeneratorKind::SubGaussian;
    bad_field("generator.kind", "unknown value '" + s + "'");
}

const char* generator_name(GeneratorKind k) {
    switch (k) {
    case GeneratorKind::Degenerate: return "degenerate";
    case GeneratorKind::DirichletBernoulli: return "dirichlet_bernoulli";
    case GeneratorKind::SubGaussian: return "sub_gaussian";
    }
    return "?";
}

} // namespace

void ExperimentConfig::validate() const {
    if (k_list.empty()) bad_field("K_list", "must not be empty");
    if (l_list.empty()) bad_field("L_list", "must not be empty");
    for (int k : k_list)
        if (k < 1) bad_field("K_list", "entries must be >= 1");
    for (int l : l_list)
        if (l < 1) bad_field("L_list", "entries must be >= 1");
    if (subsample)
        for (int k : k_list)
            if (k < 2) bad_field("K_list", "subsampling needs K >= 2");
    if (replications < 1) bad_field("replications", "must be >= 1");
    if (target.kind == TargetSpec::Kind::Fig2 && (target.fig2_special_action < 0 || target.fig2_special_action >= 20))
        bad_field("target.fig2.special_action", "must lie in [0, 20)");
    if (!(trim_constant >= 0.0)) bad_field("trim_constant", "must be >= 0");
    if (algorithms.empty()) bad_field("algorithms", "must not be empty");
    for (const auto& a : algorithms) {
        if (a != "hetpevi" && a != "avg_pevi" && a != "pevi_pooled")
            bad_field("algorithms", "unknown algorithm '" + a + "'");
        if (setting != Setting::Mdp && a != "hetpevi")
            bad_field("algorithms", std::string("only hetpevi is available for setting ") + setting_name(setting));
    }
    try {
        penalty.validate();
    } catch (const InputError& e) {
        bad_field("penalty", e.what());
    }
    try {
        generator.validate();
        if (setting == Setting::Robust) bounded.validate();
    } catch (const InputError& e) {
        bad_field("generator", e.what());
    }
    if (setting == Setting::Robust && !(sigma > 0.0)) bad_field("robust.sigma", "must be positive");
    if (setting == Setting::LowerBound) {
        if (lb_bad_sources < 0) bad_field("lower_bound.bad_sources", "must be >= 0");
        // surfaces the construction's own precondition messages
        try {
            build_hard_instance(lb_horizon, lb_states, lb_coverage, lb_epsilon, lb_regime);
        } catch (const InputError& e) {
            bad_field("lower_bound", e.what());
        }
    }
    if (target.kind == TargetSpec::Kind::Random) {
        if (target.horizon < 1 || target.num_states < 1 || target.num_actions < 1)
            bad_field("target.random", "dimensions must be positive");
        if (setting == Setting::Game && target.min_actions < 1)
            bad_field("target.random.min_actions", "must be positive for games");
    }
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw InputError("config must be a JSON object");
    ExperimentConfig c;
    c.setting = parse_setting(field<std::string>(j, "setting", "mdp"));
    c.tag = field<std::string>(j, "tag", c.tag);
    c.base_seed = field<std::uint64_t>(j, "base_seed", c.base_seed);
    c.behavior = field<std::string>(j, "behavior", c.behavior);
    c.k_list = field<std::vector<int>>(j, "K_list", c.k_list);
    c.l_list = field<std::vector<int>>(j, "L_list", c.l_list);
    c.replications = field<int>(j, "replications", c.replications);
    if (c.setting != Setting::Mdp) c.algorithms = {"hetpevi"}; // the only solver outside plain MDPs
    c.algorithms = field<std::vector<std::string>>(j, "algorithms", c.algorithms);
    c.subsample = field<bool>(j, "subsample", c.subsample);
    c.trim_constant = field<double>(j, "trim_constant", c.trim_constant);
    c.timing = field<bool>(j, "timing", c.timing);

    if (j.contains("target")) {
        const json& t = j.at("target");
        if (t.is_string()) {
            const auto name = t.get<std::string>();
            if (name == "fig2") {
                c.target.kind = TargetSpec::Kind::Fig2;
                c.target.fig2_special_action = 0;
            } else {
                c.target.kind = TargetSpec::Kind::File;
                c.target.path = name;
            }
        } else if (t.is_object() && t.contains("fig2")) {
            c.target.kind = TargetSpec::Kind::Fig2;
            c.target.fig2_special_action = field<int>(t.at("fig2"), "special_action", 0);
        } else if (t.is_object() && t.contains("file")) {
            c.target.kind = TargetSpec::Kind::File;
            c.target.path = field<std::string>(t, "file", "");
        } else if (t.is_object() && t.contains("random")) {
            const json& r = t.at("random");
            c.target.kind = TargetSpec::Kind::Random;
            c.target.horizon = field<int>(r, "horizon", 0);
            c.target.num_states = field<int>(r, "num_states", 0);
            c.target.num_actions = field<int>(r, "num_actions", 0);
            c.target.min_actions = field<int>(r, "min_actions", 0);
            c.target.seed = field<std::uint64_t>(r, "seed", 0);
        } else {
            bad_field("target", "expected \"fig2\", {\"fig2\": {...}}, a file path, {\"file\": ...} or {\"random\": {...}}");
        }
    }
    if (j.contains("generator")) {
        const json& g = j.at("generator");
        c.generator.kind = parse_generator(field<std::string>(g, "kind", generator_name(c.generator.kind)));
        c.generator.concentration = field<double>(g, "concentration", c.generator.concentration);
        c.generator.sigma_g = field<double>(g, "sigma_g", c.generator.sigma_g);
    }
    if (j.contains("penalty")) {
        const json& p = j.at("penalty");
        c.penalty.c = field<double>(p, "c", c.penalty.c);
        c.penalty.delta = field<double>(p, "delta", c.penalty.delta);
        const auto mode = field<std::string>(p, "mode", "worst_case");
        if (mode == "worst_case")
            c.penalty.mode = VarianceMode::WorstCase;
        else if (mode == "adaptive")
            c.penalty.mode = VarianceMode::Adaptive;
        else
            bad_field("penalty.mode", "unknown value '" + mode + "'");
        c.penalty.sigma_g = field<double>(p, "sigma_g", c.generator.sigma_g);
    }
    if (j.contains("robust")) {
        const json& r = j.at("robust");
        c.sigma = field<double>(r, "sigma", c.sigma);
        c.bounded.lower = field<double>(r, "lower", c.bounded.lower);
        c.bounded.upper = field<double>(r, "upper", c.bounded.upper);
        c.bounded.max_attempts = field<int>(r, "max_attempts", c.bounded.max_attempts);
    }
    c.bounded.base = c.generator;
    if (j.contains("lower_bound")) {
        const json& lb = j.at("lower_bound");
        c.lb_horizon = field<int>(lb, "horizon", c.lb_horizon);
        c.lb_states = field<int>(lb, "num_states", c.lb_states);
        c.lb_coverage = field<double>(lb, "coverage", c.lb_coverage);
        c.lb_epsilon = field<double>(lb, "epsilon", c.lb_epsilon);
        c.lb_bad_sources = field<int>(lb, "bad_sources", c.lb_bad_sources);
        const auto regime = field<std::string>(lb, "regime", "source_limited");
        if (regime == "source_limited")
            c.lb_regime = HardRegime::SourceLimited;
        else if (regime == "sample_limited")
            c.lb_regime = HardRegime::SampleLimited;
        else
            bad_field("lower_bound.regime", "unknown value '" + regime + "'");
    }
    c.validate();
    return c;
}

json to_json(const ExperimentConfig& c) {
    json target;
    switch (c.target.kind) {
    case TargetSpec::Kind::Fig2:
        target = "fig2";
        if (c.target.fig2_special_action != 0)
            target = {{"fig2", {{"special_action", c.target.fig2_special_action}}}};
        break;
    case TargetSpec::Kind::File: target = {{"file", c.target.path.string()}}; break;
    case TargetSpec::Kind::Random:
        target = {{"random",
                   {{"horizon", c.target.horizon},
                    {"num_states", c.target.num_states},
                    {"num_actions", c.target.num_actions},
                    {"min_actions", c.target.min_actions},
                    {"seed", c.target.seed}}}};
        break;
    }
    return {{"setting", setting_name(c.setting)},
            {"tag", c.tag},
            {"base_seed", c.base_seed},
            {"target", target},
            {"behavior", c.behavior},
            {"generator",
             {{"kind", generator_name(c.generator.kind)},
              {"concentration", c.generator.concentration},
              {"sigma_g", c.generator.sigma_g}}},
            {"K_list", c.k_list},
            {"L_list", c.l_list},
            {"replications", c.replications},
            {"algorithms", c.algorithms},
            {"penalty",
             {{"c", c.penalty.c},
              {"delta", c.penalty.delta},
              {"mode", c.penalty.mode == VarianceMode::Adaptive ? "adaptive" : "worst_case"},
              {"sigma_g", c.penalty.sigma_g}}},
            {"subsample", c.subsample},
            {"trim_constant", c.trim_constant},
            {"robust",
             {{"sigma", c.sigma},
              {"lower", c.bounded.lower},
              {"upper", c.bounded.upper},
              {"max_attempts", c.bounded.max_attempts}}},
            {"lower_bound",
             {{"horizon", c.lb_horizon},
              {"num_states", c.lb_states},
              {"coverage", c.lb_coverage},
              {"epsilon", c.lb_epsilon},
              {"regime", c.lb_regime == HardRegime::SourceLimited ? "source_limited" : "sample_limited"},
              {"bad_sources", c.lb_bad_sources}}},
            {"timing", c.timing}};
}

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

BuiltinTarget builtin_fig2_target(int special_action) {
    const Shape sh{20, 2, 20};
    if (special_action < 0 || special_action >= sh.num_actions)
        throw InputError("fig2: special_action must lie in [0, 20)");
    numvec trans(sh.sas_size()), rew(sh.sa_size());
    numvec probs(std::size_t(sh.horizon) * sh.num_states * sh.num_actions);
    for (int h = 0; h < sh.horizon; ++h)
        for (int s = 0; s < sh.num_states; ++s)
            for (int a = 0; a < sh.num_actions; ++a) {
                const bool special = s == 0 && a == special_action;
                rew[sh.sa(h, s, a)] = special ? 0.9 : 0.1;
                trans[sh.sas(h, s, a, 0)] = special ? 0.9 : 0.5;
                trans[sh.sas(h, s, a, 1)] = special ? 0.1 : 0.5;
                probs[sh.sa(h, s, a)] = a == special_action ? 0.2 : 0.8 / (sh.num_actions - 1);
            }
    return {EpisodicMdp(sh, std::move(trans), std::move(rew)),
            MixedPolicy(sh.horizon, sh.num_states, sh.num_actions, std::move(probs)),
            InitDist::uniform(sh.num_states)};
}

std::uint64_t cell_seed(std::uint64_t base, int k, int l, int rep) {
    return mix_seed(base, {std::uint64_t(k), std::uint64_t(l), std::uint64_t(rep)});
}

namespace {

/// Everything a replication needs that does not depend on (K, L, rep).
struct Problem {
    Setting setting;
    std::optional<EpisodicMdp> mdp;      // Mdp: the target; Robust: the nominal
    std::optional<ZeroSumGame> game;
    std::optional<RobustSpec> robust;
    std::optional<Policy> behavior;
    std::optional<InitDist> init;
    double reference = 0.0; // V*, NE value or robust-optimal value at the start state
};

Problem load_problem(const ExperimentConfig& cfg) {
    Problem p;
    p.setting = cfg.setting;
    std::optional<MixedPolicy> fig2_behavior;
    switch (cfg.target.kind) {
    case TargetSpec::Kind::Fig2: {
        if (cfg.setting == Setting::Game) bad_field("target", "fig2 is an MDP; games need a game target");
        BuiltinTarget t = builtin_fig2_target(cfg.target.fig2_special_action);
        p.mdp = std::move(t.mdp);
        fig2_behavior = std::move(t.behavior);
        break;
    }
    case TargetSpec::Kind::File: {
        Instance inst = instance_from_json(read_json_file(cfg.target.path));
        if (cfg.setting == Setting::Game) {
            if (!std::holds_alternative<ZeroSumGame>(inst)) bad_field("target", "file is not a game");
            p.game = std::get<ZeroSumGame>(inst);
        } else if (auto* r = std::get_if<RobustSpec>(&inst)) {
            p.mdp = r->nominal();
        } else if (auto* m = std::get_if<EpisodicMdp>(&inst)) {
            p.mdp = *m;
        } else {
            bad_field("target", "file holds a game but the setting is not 'game'");
        }
        break;
    }
    case TargetSpec::Kind::Random:
        if (cfg.setting == Setting::Game)
            p.game = random_game(cfg.target.horizon, cfg.target.num_states, cfg.target.num_actions,
                                 cfg.target.min_actions, cfg.target.seed);
        else
            p.mdp = random_mdp(Shape{cfg.target.horizon, cfg.target.num_states, cfg.target.num_actions},
                               cfg.target.seed);
        break;
    }

    const Shape sh = p.game ? p.game->joint().shape() : p.mdp->shape();
    p.init = InitDist::uniform(sh.num_states);
    if (cfg.behavior == "default") {
        if (fig2_behavior)
            p.behavior = *fig2_behavior;
        else
            p.behavior = MixedPolicy::uniform(sh.horizon, sh.num_states, sh.num_actions);
    } else if (cfg.behavior == "uniform") {
        p.behavior = MixedPolicy::uniform(sh.horizon, sh.num_states, sh.num_actions);
    } else {
        p.behavior = policy_from_json(read_json_file(cfg.behavior));
    }
    check_policy_shape(*p.behavior, sh);

    switch (cfg.setting) {
    case Setting::Mdp:
        p.reference = optimal_policy(*p.mdp).values.expected(0, *p.init);
        break;
    case Setting::Game:
        p.reference = solve_game(*p.game).values.expected(0, *p.init);
        break;
    case Setting::Robust:
        p.robust = RobustSpec(*p.mdp, cfg.sigma);
        p.reference = robust_optimal_policy(*p.robust).values.expected(0, *p.init);
        break;
    case Setting::LowerBound:
        break;
    }
    return p;
}

std::vector<EpisodicMdp> draw_sources(const ExperimentConfig& cfg, const Problem& p, int l,
                                      std::uint64_t seed) {
    const std::uint64_t s = mix_seed(seed, {0});
    switch (cfg.setting) {
    case Setting::Game: {
        std::vector<EpisodicMdp> out;
        for (auto& g : generate_game_sources(*p.game, l, cfg.generator, s)) out.push_back(g.joint());
        return out;
    }
    case Setting::Robust:
        return generate_bounded_sources(*p.mdp, l, cfg.bounded, s);
    default:
        return generate_sources(*p.mdp, l, cfg.generator, s);
    }
}

std::vector<VisitCounts> count_sources(const ExperimentConfig& cfg,
                                       const std::vector<SourceDataset>& datasets,
                                       std::uint64_t seed) {
    std::vector<VisitCounts> counts;
    counts.reserve(datasets.size());
    const SubsampleConfig sub{cfg.trim_constant, cfg.penalty.delta, int(datasets.size())};
    for (const auto& d : datasets) {
        if (cfg.subsample)
            counts.push_back(count_visits(two_fold_subsample(d, sub, mix_seed(seed, {2, std::uint64_t(d.source_id)}))));
        else
            counts.push_back(count_visits(d));
    }
    return counts;
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0, bool timing) {
    if (!timing) return 0.0;
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<ResultRecord> run_cell(const ExperimentConfig& cfg, const Problem& p, int k, int l, int rep) {
    const std::uint64_t seed = cell_seed(cfg.base_seed, k, l, rep);
    const auto sources = draw_sources(cfg, p, l, seed);
    std::vector<SourceDataset> datasets;
    datasets.reserve(sources.size());
    for (int i = 0; i < l; ++i)
        datasets.push_back(sample_dataset(sources[std::size_t(i)], *p.behavior, *p.init, k,
                                          mix_seed(seed, {1, std::uint64_t(i)}), i));
    const auto counts = count_sources(cfg, datasets, seed);
    datasets.clear();

    std::vector<ResultRecord> out;
    const char* setting = setting_name(cfg.setting);
    for (const auto& alg : cfg.algorithms) {
        const auto t0 = Clock::now();
        double value = 0.0;
        if (alg == "hetpevi") {
            const AggregatedModel model = aggregate_model(counts);
            switch (cfg.setting) {
            case Setting::Game: {
                const SolverOutput o =
                    hetpevi_game(model, p.game->max_actions(), p.game->min_actions(), cfg.penalty);
                value = best_response(*p.game, std::get<ProductPolicy>(o.policy).max_player, *p.init).value;
                break;
            }
            case Setting::Robust:
                value = robust_policy_value(*p.robust, hetpevi_robust(model, cfg.sigma, cfg.penalty).policy,
                                            *p.init);
                break;
            default:
                value = evaluate_policy(*p.mdp, hetpevi(model, cfg.penalty).policy, *p.init);
            }
        } else if (alg == "avg_pevi") {
            std::vector<DeterministicPolicy> policies;
            for (const auto& c : counts)
                policies.push_back(std::get<DeterministicPolicy>(pevi_single(c, cfg.penalty).policy));
            value = evaluate_policy(*p.mdp, avg_pevi(policies, p.mdp->num_actions()), *p.init);
        } else {
            value = evaluate_policy(*p.mdp, pevi_pooled(counts, cfg.penalty).policy, *p.init);
        }
        out.push_back({setting, alg, k, l, rep, p.reference - value, ms_since(t0, cfg.timing), seed});
    }
    return out;
}

/// Runs fn(i) for i in [0, n) on `jobs` threads. The first failure by index
/// is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(jobs, int(n)));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Cell {
    int k, l, rep;
};

std::vector<Cell> grid(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    for (int k : cfg.k_list)
        for (int l : cfg.l_list)
            for (int rep = 0; rep < cfg.replications; ++rep) cells.push_back({k, l, rep});
    return cells;
}

std::string cell_context(const Cell& c) {
    return "(K=" + std::to_string(c.k) + ", L=" + std::to_string(c.l) + ", rep=" + std::to_string(c.rep) + ")";
}

} // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg, int jobs) {
    cfg.validate();
    if (cfg.setting == Setting::LowerBound) return run_lower_bound(cfg, jobs).records;
    const Problem p = load_problem(cfg);
    const auto cells = grid(cfg);
    std::vector<std::vector<ResultRecord>> results(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const Cell& c = cells[i];
        try {
            results[i] = run_cell(cfg, p, c.k, c.l, c.rep);
        } catch (const GenerationError& e) {
            throw GenerationError(cell_context(c) + ": " + e.what());
        }
    });
    std::vector<ResultRecord> out;
    for (auto& r : results) out.insert(out.end(), r.begin(), r.end());
    return out;
}

std::vector<SourceDataset> cell_datasets(const ExperimentConfig& cfg, int k, int l, int rep) {
    cfg.validate();
    const std::uint64_t seed = cell_seed(cfg.base_seed, k, l, rep);
    std::vector<SourceDataset> datasets;
    if (cfg.setting == Setting::LowerBound) {
        const HardInstance inst =
            build_hard_instance(cfg.lb_horizon, cfg.lb_states, cfg.lb_coverage, cfg.lb_epsilon, cfg.lb_regime, l);
        const HardSourceDraw draw = draw_hard_sources(inst, 0, l + cfg.lb_bad_sources, mix_seed(seed, {0}));
        for (int i = 0; i < l + cfg.lb_bad_sources; ++i) {
            const Policy behavior = i < l ? Policy(inst.good_behavior) : Policy(inst.bad_behavior);
            datasets.push_back(sample_dataset(draw.sources[std::size_t(i)], behavior, inst.data_init, k,
                                              mix_seed(seed, {1, std::uint64_t(i)}), i));
        }
        return datasets;
    }
    const Problem p = load_problem(cfg);
    const auto sources = draw_sources(cfg, p, l, seed);
    for (int i = 0; i < l; ++i)
        datasets.push_back(sample_dataset(sources[std::size_t(i)], *p.behavior, *p.init, k,
                                          mix_seed(seed, {1, std::uint64_t(i)}), i));
    return datasets;
}

SourceDataset mirror_actions(const SourceDataset& dataset) {
    SourceDataset out = dataset;
    for (auto& st : out.steps)
        if (st.action == 0 || st.action == 1) st.action = 1 - st.action;
    return out;
}

LowerBoundResult run_lower_bound(const ExperimentConfig& cfg, int jobs) {
    cfg.validate();
    if (cfg.setting != Setting::LowerBound) bad_field("setting", "run_lower_bound needs lower_bound");
    const HardInstance base =
        build_hard_instance(cfg.lb_horizon, cfg.lb_states, cfg.lb_coverage, cfg.lb_epsilon, cfg.lb_regime);
    const double v_star[2] = {optimal_policy(base.targets[0]).values.expected(0, base.test_init),
                              optimal_policy(base.targets[1]).values.expected(0, base.test_init)};

    const auto cells = grid(cfg);
    std::vector<std::vector<ResultRecord>> results(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const Cell& c = cells[i];
        const std::uint64_t seed = cell_seed(cfg.base_seed, c.k, c.l, c.rep);
        auto datasets = cell_datasets(cfg, c.k, c.l, c.rep);
        for (int phi = 0; phi < 2; ++phi) {
            const auto t0 = Clock::now();
            if (phi == 1)
                for (auto& d : datasets) d = mirror_actions(d);
            const auto counts = count_sources(cfg, datasets, seed);
            const SolverOutput o = hetpevi(aggregate_model(counts), cfg.penalty);
            const double g = v_star[phi] - evaluate_policy(base.targets[std::size_t(phi)], o.policy, base.test_init);
            results[i].push_back({setting_name(cfg.setting), phi == 0 ? "hetpevi_phi0" : "hetpevi_phi1", c.k, c.l,
                                  c.rep, g, ms_since(t0, cfg.timing), seed});
        }
    });

    LowerBoundResult out;
    out.epsilon = cfg.lb_epsilon;
    for (auto& r : results) out.records.insert(out.records.end(), r.begin(), r.end());
    for (int k : cfg.k_list)
        for (int l : cfg.l_list) {
            LowerBoundCell cell{k, l, {0, 0}, {0, 0}};
            for (const auto& s : summarize(out.records)) {
                if (s.k != k || s.l != l) continue;
                const int phi = s.algorithm == "hetpevi_phi0" ? 0 : 1;
                cell.mean_gap[phi] = s.mean;
                cell.stderr_gap[phi] = s.stderr_mean();
            }
            out.cells.push_back(cell);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

double CellSummary::stderr_mean() const { return n > 0 ? stddev / std::sqrt(double(n)) : 0.0; }

std::vector<CellSummary> summarize(const std::vector<ResultRecord>& records) {
    std::map<std::tuple<std::string, int, int>, std::size_t> index;
    std::vector<CellSummary> out;
    std::vector<numvec> gaps;
    for (const auto& r : records) {
        auto [it, fresh] = index.try_emplace({r.algorithm, r.k, r.l}, out.size());
        if (fresh) {
            out.push_back({r.algorithm, r.k, r.l});
            gaps.emplace_back();
        }
        gaps[it->second].push_back(r.gap);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const numvec& g = gaps[i];
        double mean = 0.0;
        for (double x : g) mean += x;
        mean /= double(g.size());
        double ss = 0.0;
        for (double x : g) ss += (x - mean) * (x - mean);
        out[i].n = int(g.size());
        out[i].mean = mean;
        out[i].stddev = g.size() > 1 ? std::sqrt(ss / double(g.size() - 1)) : 0.0;
    }
    return out;
}

namespace {

void put_double(std::ostream& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

} // namespace

void write_results_csv(std::ostream& out, const std::vector<ResultRecord>& records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.setting << ',' << r.algorithm << ',' << r.k << ',' << r.l << ',' << r.rep << ',';
        put_double(out, r.gap);
        out << ',';
        put_double(out, r.elapsed_ms);
        out << ',' << r.seed << '\n';
    }
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    write_results_csv(out, records);
}

json coverage_snapshot(const ExperimentConfig& cfg) {
    cfg.validate();
    json out = json::array();
    if (cfg.setting == Setting::LowerBound) {
        for (int l : cfg.l_list) {
            const HardInstance inst =
                build_hard_instance(cfg.lb_horizon, cfg.lb_states, cfg.lb_coverage, cfg.lb_epsilon, cfg.lb_regime, l);
            const std::uint64_t seed = cell_seed(cfg.base_seed, cfg.k_list[0], l, 0);
            const HardSourceDraw draw = draw_hard_sources(inst, 0, l + cfg.lb_bad_sources, mix_seed(seed, {0}));
            std::vector<Policy> behaviors;
            for (int i = 0; i < l + cfg.lb_bad_sources; ++i)
                behaviors.push_back(i < l ? Policy(inst.good_behavior) : Policy(inst.bad_behavior));
            const std::vector<InitDist> inits(behaviors.size(), inst.data_init);
            const CoverageSets sets = coverage_sets(std::span<const EpisodicMdp>(draw.sources), behaviors, inits);
            json r = to_json(coverage_params(inst.targets[0], inst.test_init, sets));
            r["L"] = l;
            out.push_back(std::move(r));
        }
        return out;
    }
    const Problem p = load_problem(cfg);
    for (int l : cfg.l_list) {
        const auto sources = draw_sources(cfg, p, l, cell_seed(cfg.base_seed, cfg.k_list[0], l, 0));
        const std::vector<Policy> behaviors(sources.size(), *p.behavior);
        const std::vector<InitDist> inits(sources.size(), *p.init);
        const CoverageSets sets = coverage_sets(std::span<const EpisodicMdp>(sources), behaviors, inits);
        json r;
        switch (cfg.setting) {
        case Setting::Game: r = to_json(coverage_params_game(*p.game, *p.init, sets)); break;
        case Setting::Robust: r = to_json(coverage_params_robust(*p.robust, *p.init, sets)); break;
        default: r = to_json(coverage_params(*p.mdp, *p.init, sets));
        }
        r["L"] = l;
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace hetrl
