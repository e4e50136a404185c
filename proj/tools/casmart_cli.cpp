// Command-line experiment harness.
//
//   casmart run-benchmark --objective six-hump --method cas --n-runs 30 --budget 60 --n-init 5 --out res/
//   casmart run-dataset   --synthetic --n-init 25 --budget 125 --out res/
//   casmart compare       --objective six-hump --method cas --method ei --out res/
//
// Exit status: 0 success, 1 runtime or I/O failure, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "casmart/casmart.hpp"

namespace {

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> objective;
    std::vector<std::string> methods;
    std::optional<std::size_t> n_runs, budget, n_init, refit_every, jobs;
    std::optional<int> restarts;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, kernel, table, direction;
    std::optional<double> sigma_perturb, credible_level, noise_variance, kappa;
    bool synthetic = false;
    std::vector<std::size_t> sweep_n_init, sweep_budget;
};

void add_common(CLI::App* cmd, Flags& f, bool many_methods)
{
    cmd->add_option("--config", f.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
    cmd->add_option("--objective", f.objective, "six-hump | griewank | demo-1d");
    if (many_methods)
        cmd->add_option("--method,--methods", f.methods, "methods to compare (repeatable)")->delimiter(',');
    else
        cmd->add_option("--method", f.methods, "cas | shannon | bayesian | ei | pi | ucb | mv")->expected(1);
    cmd->add_option("--n-runs", f.n_runs, "number of seeded replications");
    cmd->add_option("--budget", f.budget, "evaluations after the initial design");
    cmd->add_option("--n-init", f.n_init, "size of the initial design");
    cmd->add_option("--seed", f.seed, "base seed; run i uses seed + i");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--sigma-perturb", f.sigma_perturb, "perturbation scale in unit-cube coordinates");
    cmd->add_option("--credible-level", f.credible_level, "credible level of the surprise threshold");
    cmd->add_option("--kernel", f.kernel, "kernel family, e.g. rq*constant, matern32, rbf");
    cmd->add_option("--kappa", f.kappa, "UCB exploration weight");
    cmd->add_option("--direction", f.direction, "maximize | minimize (acquisition baselines)");
    cmd->add_option("--noise-variance", f.noise_variance, "fix the GP noise variance instead of learning it");
    cmd->add_option("--refit-every", f.refit_every, "re-optimize hyperparameters every k steps");
    cmd->add_option("--restarts", f.restarts, "hyperparameter optimizer restarts");
    cmd->add_option("--jobs", f.jobs, "replications run in parallel");
    cmd->add_option("--table", f.table, "CSV table for pool-based runs");
    cmd->add_flag("--synthetic", f.synthetic, "use the built-in synthetic table");
    cmd->add_option("--sweep-n-init", f.sweep_n_init, "run one summary per initial design size")->delimiter(',');
    cmd->add_option("--sweep-budget", f.sweep_budget, "run one summary per budget")->delimiter(',');
}

casmart::ExperimentConfig build_config(const Flags& f)
{
    using namespace casmart;
    ExperimentConfig cfg;
    if (f.config)
        apply_config_json(load_json_file(*f.config), cfg);
    if (f.objective)
        cfg.objective = *f.objective;
    if (!f.methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : f.methods)
            cfg.methods.push_back(parse_method(m));
    }
    if (f.n_runs)
        cfg.n_runs = *f.n_runs;
    if (f.budget) {
        cfg.engine.budget = *f.budget;
        cfg.budget_set = true;
    }
    if (f.n_init) {
        cfg.engine.n_init = *f.n_init;
        cfg.n_init_set = true;
    }
    if (f.seed)
        cfg.base_seed = *f.seed;
    if (f.out)
        cfg.output_dir = *f.out;
    if (f.sigma_perturb)
        cfg.engine.sigma_perturb = *f.sigma_perturb;
    if (f.credible_level)
        cfg.engine.credible_level = *f.credible_level;
    if (f.kernel) {
        cfg.engine.kernel_family = parse_kernel(*f.kernel);
        cfg.kernel_set = true;
    }
    if (f.kappa)
        cfg.engine.kappa = *f.kappa;
    if (f.direction) {
        cfg.engine.direction = parse_direction(*f.direction);
        cfg.direction_set = true;
    }
    if (f.noise_variance)
        cfg.engine.fixed_noise_variance = *f.noise_variance;
    if (f.refit_every)
        cfg.engine.refit_every = *f.refit_every;
    if (f.restarts)
        cfg.engine.restarts = *f.restarts;
    if (f.jobs)
        cfg.jobs = *f.jobs;
    if (f.table)
        cfg.dataset.table_path = *f.table;
    if (f.synthetic)
        cfg.dataset.synthetic = true;
    if (!f.sweep_n_init.empty())
        cfg.dataset.sweep_n_init = f.sweep_n_init;
    if (!f.sweep_budget.empty())
        cfg.dataset.sweep_budget = f.sweep_budget;
    return cfg;
}

bool is_dataset(const casmart::ExperimentConfig& cfg)
{
    return cfg.dataset.table_path || cfg.dataset.synthetic || cfg.objective == "dataset";
}

void print_results(const std::vector<casmart::MethodResult>& results)
{
    for (const auto& r : results)
        std::printf("%-9s final RMSE %.6g  final CRPS %.6g\n", std::string(casmart::to_string(r.method)).c_str(),
                    r.curves.final_rmse.mean, r.curves.final_crps.mean);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Surprise-driven active learning with Gaussian-process surrogates"};
    app.require_subcommand(1);

    Flags bench_flags, data_flags, cmp_flags;
    auto* bench = app.add_subcommand("run-benchmark", "replicate a synthetic benchmark");
    add_common(bench, bench_flags, false);
    auto* data = app.add_subcommand("run-dataset", "pool-based runs on a data table");
    add_common(data, data_flags, false);
    auto* cmp = app.add_subcommand("compare", "run several methods under shared seeds");
    add_common(cmp, cmp_flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (bench->parsed()) {
            auto cfg = build_config(bench_flags);
            casmart::apply_presets(cfg, false);
            if (cfg.methods.size() != 1)
                throw casmart::ConfigError("run-benchmark takes exactly one --method");
            print_results(casmart::run_benchmark_methods(cfg, cfg.output_dir, false));
        } else if (data->parsed()) {
            auto cfg = build_config(data_flags);
            casmart::apply_presets(cfg, true);
            if (!cfg.dataset.table_path && !cfg.dataset.synthetic)
                throw casmart::ConfigError("run-dataset needs --table or --synthetic");
            if (cfg.methods.size() != 1)
                throw casmart::ConfigError("run-dataset takes exactly one --method");
            cfg.objective = cfg.dataset.table_path ? *cfg.dataset.table_path : "synthetic-table";
            print_results(casmart::run_dataset_methods(cfg, cfg.output_dir, false));
        } else if (cmp->parsed()) {
            auto cfg = build_config(cmp_flags);
            casmart::apply_presets(cfg, is_dataset(cfg));
            if (cfg.methods.size() < 2)
                throw casmart::ConfigError("compare needs at least two methods");
            std::vector<casmart::MethodResult> results;
            if (is_dataset(cfg)) {
                if (casmart::sweep_points(cfg).size() > 1)
                    throw casmart::ConfigError("compare runs a single design; use run-dataset for sweeps");
                cfg.objective = cfg.dataset.table_path ? *cfg.dataset.table_path : "synthetic-table";
                results = casmart::run_dataset_methods(cfg, cfg.output_dir, true);
            } else {
                results = casmart::run_benchmark_methods(cfg, cfg.output_dir, true);
            }
            casmart::write_comparison(cfg.output_dir, results, cfg);
            print_results(results);
        }
    } catch (const casmart::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const casmart::SchemaError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const casmart::CapacityError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
