// Command-line front end: experiment sweeps, coverage reports and policy
// evaluation. Run `hetrl --help` for the subcommands.

#include "hetrl/diagnostics.hpp"
#include "hetrl/experiment.hpp"
#include "hetrl/robust.hpp"
#include "hetrl/serialize.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

using namespace hetrl;
namespace fs = std::filesystem;

namespace {

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool no_subsample = false;
    int jobs = 1;
    bool save_datasets = false;
};

ExperimentConfig load_config(const RunOptions& o, const char* setting) {
    json j = read_json_file(o.config);
    if (!j.is_object()) throw InputError("config must be a JSON object");
    if (!j.contains("setting")) j["setting"] = setting;
    if (o.seed) j["base_seed"] = *o.seed;
    if (o.no_subsample) j["subsample"] = false;
    ExperimentConfig cfg = config_from_json(j);
    if (std::string(setting_name(cfg.setting)) != setting)
        throw InputError(std::string("config setting '") + setting_name(cfg.setting) +
                         "' does not match the subcommand (" + setting + ")");
    return cfg;
}

void print_summary(const std::vector<ResultRecord>& records) {
    std::printf("%-14s %8s %6s %5s %12s %12s\n", "algorithm", "K", "L", "n", "mean_gap", "stderr");
    for (const auto& s : summarize(records))
        std::printf("%-14s %8d %6d %5d %12.6f %12.6f\n", s.algorithm.c_str(), s.k, s.l, s.n, s.mean,
                    s.stderr_mean());
}

int run(const RunOptions& o, const char* setting) {
    const ExperimentConfig cfg = load_config(o, setting);
    fs::create_directories(o.out_dir);
    const std::string stem = std::string(setting) + "_" + cfg.tag;
    const fs::path csv = fs::path(o.out_dir) / (stem + ".csv");

    std::vector<ResultRecord> records;
    if (cfg.setting == Setting::LowerBound) {
        const LowerBoundResult r = run_lower_bound(cfg, o.jobs);
        records = r.records;
        print_summary(records);
        std::printf("\n%8s %6s %14s %8s\n", "K", "L", "max_phi_mean", "eps");
        for (const auto& c : r.cells)
            std::printf("%8d %6d %14.6f %8.4f\n", c.k, c.l, c.max_mean_gap(), r.epsilon);
    } else {
        records = run_experiment(cfg, o.jobs);
        print_summary(records);
    }
    write_results_csv(csv, records);
    write_json_file(fs::path(o.out_dir) / (stem + ".json"),
                    {{"config", to_json(cfg)}, {"coverage", coverage_snapshot(cfg)}});
    if (o.save_datasets) {
        const auto datasets = cell_datasets(cfg, cfg.k_list[0], cfg.l_list[0], 0);
        int min_actions = 0;
        if (cfg.setting == Setting::Game) min_actions = cfg.target.min_actions;
        write_dataset_csv(fs::path(o.out_dir) / (stem + "_datasets.csv"), datasets, min_actions);
    }
    std::printf("\nwrote %s (%zu records)\n", csv.string().c_str(), records.size());
    return 0;
}

int run_eval(const std::string& instance_path, const std::string& policy_path, const std::string& init_path) {
    const Instance inst = instance_from_json(read_json_file(instance_path));
    const Policy policy = policy_from_json(read_json_file(policy_path));
    auto init_for = [&](int states) {
        return init_path.empty() ? InitDist::uniform(states) : init_dist_from_json(read_json_file(init_path));
    };
    json out;
    if (const auto* mdp = std::get_if<EpisodicMdp>(&inst)) {
        const InitDist xi = init_for(mdp->num_states());
        out = {{"value", evaluate_policy(*mdp, policy, xi)},
               {"optimal_value", optimal_policy(*mdp).values.expected(0, xi)},
               {"gap", gap(*mdp, policy, xi)}};
    } else if (const auto* game = std::get_if<ZeroSumGame>(&inst)) {
        const InitDist xi = init_for(game->num_states());
        MixedPolicy mu = std::holds_alternative<ProductPolicy>(policy)
                             ? std::get<ProductPolicy>(policy).max_player
                             : to_mixed(policy, game->max_actions());
        const BestResponse br = best_response(*game, mu, xi);
        out = {{"best_response_value", br.value},
               {"ne_value", solve_game(*game).values.expected(0, xi)},
               {"mg_gap", mg_gap(*game, mu, xi)},
               {"best_response", to_json(Policy(br.policy))}};
    } else {
        const auto& spec = std::get<RobustSpec>(inst);
        const InitDist xi = init_for(spec.nominal().num_states());
        out = {{"robust_value", robust_policy_value(spec, policy, xi)},
               {"nominal_value", evaluate_policy(spec.nominal(), policy, xi)},
               {"robust_optimal_value", robust_optimal_policy(spec).values.expected(0, xi)},
               {"r_gap", r_gap(spec, policy, xi)}};
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
    cmd->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "override base_seed");
    cmd->add_option("--out-dir", o.out_dir, "directory for the CSV and its sidecar")->capture_default_str();
    cmd->add_flag("--no-subsample", o.no_subsample, "use every logged transition");
    cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_flag("--save-datasets", o.save_datasets, "also write the datasets of the first grid cell");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline RL from heterogeneous data sources: sweeps, coverage, evaluation"};
    app.require_subcommand(1);

    RunOptions opts;
    struct Sub {
        const char* name;
        const char* setting;
        const char* help;
    };
    const Sub subs[] = {{"simulate", "mdp", "MDP sweep over (K, L)"},
                        {"game", "game", "Markov game sweep over (K, L)"},
                        {"robust", "robust", "KL-robust MDP sweep over (K, L)"},
                        {"lower-bound", "lower_bound", "hard-instance sweep over (K, good sources)"}};
    std::vector<std::pair<CLI::App*, const char*>> run_cmds;
    for (const auto& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        add_run_options(cmd, opts);
        run_cmds.emplace_back(cmd, s.setting);
    }

    std::string cov_config;
    std::optional<std::uint64_t> cov_seed;
    CLI::App* cov = app.add_subcommand("coverage", "coverage report for the sources of a config");
    cov->add_option("--config", cov_config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cov->add_option("--seed", cov_seed, "override base_seed");

    std::string instance, policy, init;
    CLI::App* ev = app.add_subcommand("eval", "evaluate a policy on an instance file");
    ev->add_option("--instance", instance, "instance (JSON)")->required()->check(CLI::ExistingFile);
    ev->add_option("--policy", policy, "policy (JSON)")->required()->check(CLI::ExistingFile);
    ev->add_option("--init", init, "initial distribution (JSON array); uniform if omitted")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& [cmd, setting] : run_cmds)
            if (cmd->parsed()) return run(opts, setting);
        if (cov->parsed()) {
            json j = read_json_file(cov_config);
            if (cov_seed) j["base_seed"] = *cov_seed;
            std::cout << coverage_snapshot(config_from_json(j)).dump(2) << '\n';
            return 0;
        }
        if (ev->parsed()) return run_eval(instance, policy, init);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
