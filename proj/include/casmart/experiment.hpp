#pragma once

// Replication harness: configuration (JSON), seeded replications, trace and
// summary files, dataset protocol with sweeps, and method comparisons.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "casmart/engine.hpp"
#include "casmart/errors.hpp"
#include "casmart/kernels.hpp"
#include "casmart/metrics.hpp"
#include "casmart/objectives.hpp"

namespace casmart {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Kernel <-> JSON. A kernel is either its compact name ("rq*constant") or an
// object {"type": ..., hyperparameters..., "factors": [...]}.

inline json kernel_to_json(const KernelSpec& k)
{
    json j;
    switch (k.kind) {
    case KernelKind::rbf:
        j["type"] = "rbf";
        j["signal_variance"] = k.signal_variance;
        j["length_scale"] = k.length_scale;
        break;
    case KernelKind::matern:
        j["type"] = "matern";
        j["nu"] = k.nu;
        j["signal_variance"] = k.signal_variance;
        j["length_scale"] = k.length_scale;
        break;
    case KernelKind::rational_quadratic:
        j["type"] = "rq";
        j["signal_variance"] = k.signal_variance;
        j["length_scale"] = k.length_scale;
        j["alpha"] = k.alpha;
        break;
    case KernelKind::constant:
        j["type"] = "constant";
        j["constant_value"] = k.constant_value;
        break;
    case KernelKind::product:
        j["type"] = "product";
        j["factors"] = json::array();
        for (const auto& f : k.factors)
            j["factors"].push_back(kernel_to_json(f));
        break;
    }
    return j;
}

inline KernelSpec kernel_from_json(const json& j)
{
    if (j.is_string())
        return parse_kernel(j.get<std::string>());
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError("kernel: expected a name or an object with a \"type\"");
    const auto type = j.at("type").get<std::string>();
    auto num = [&](const char* key, double fallback) { return j.contains(key) ? j.at(key).get<double>() : fallback; };
    try {
        if (type == "rbf")
            return KernelSpec::rbf(num("signal_variance", 1.0), num("length_scale", 1.0));
        if (type == "matern")
            return KernelSpec::matern(num("nu", 2.5), num("signal_variance", 1.0), num("length_scale", 1.0));
        if (type == "rq")
            return KernelSpec::rational_quadratic(num("signal_variance", 1.0), num("length_scale", 1.0),
                                                  num("alpha", 1.0));
        if (type == "constant")
            return KernelSpec::constant(num("constant_value", 1.0));
        if (type == "product") {
            std::vector<KernelSpec> factors;
            for (const auto& f : j.at("factors"))
                factors.push_back(kernel_from_json(f));
            return KernelSpec::product(std::move(factors));
        }
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("kernel: unknown type '" + type + "'");
}

// ---------------------------------------------------------------------------

inline Direction parse_direction(std::string_view s)
{
    if (s == "maximize")
        return Direction::maximize;
    if (s == "minimize")
        return Direction::minimize;
    throw ConfigError("direction must be 'maximize' or 'minimize'");
}

/// The two global-optimization benchmarks are minimization problems; tables
/// of material properties are searched for high values.
inline Direction default_direction(std::string_view objective)
{
    return (objective == "six-hump" || objective == "griewank") ? Direction::minimize : Direction::maximize;
}

struct DatasetOptions {
    std::optional<std::string> table_path;
    bool synthetic = false;
    std::size_t synthetic_rows = 437;
    std::uint64_t synthetic_seed = 20240601;
    std::size_t pool_size = 350;
    TableSchema schema;
    std::vector<std::size_t> sweep_n_init;
    std::vector<std::size_t> sweep_budget;
};

struct ExperimentConfig {
    std::string objective = "six-hump";
    std::vector<Method> methods{Method::cas};
    EngineConfig engine;
    bool kernel_set = false; // whether the kernel was chosen explicitly
    bool direction_set = false;
    bool n_init_set = false;
    bool budget_set = false;
    std::size_t n_runs = 30;
    std::uint64_t base_seed = 0;
    std::string output_dir = "results";
    std::size_t jobs = 1;
    DatasetOptions dataset;

    void validate() const
    {
        if (n_runs < 1)
            throw ConfigError("n_runs must be >= 1");
        if (methods.empty())
            throw ConfigError("at least one method is required");
        if (jobs < 1)
            throw ConfigError("jobs must be >= 1");
    }
};

namespace detail {

template <class T>
void read_if(const json& j, const char* key, T& out)
{
    if (j.contains(key) && !j.at(key).is_null())
        out = j.at(key).get<T>();
}

} // namespace detail

/// Overlays the settings present in `j` onto `cfg`. Unknown keys are rejected
/// so that typos in archived configs do not pass silently.
inline void apply_config_json(const json& j, ExperimentConfig& cfg)
{
    static const std::vector<std::string> top{"objective", "method", "methods", "n_runs", "seed",
                                              "out",       "jobs",   "engine",  "dataset"};
    static const std::vector<std::string> eng{"n_init",       "budget",        "credible_level", "sigma_perturb",
                                              "n_candidates", "kappa",         "kernel",         "restarts",
                                              "max_evaluations", "refit_every", "noise_variance", "flat_prior",
                                              "crps_include_noise", "initial_points", "direction"};
    static const std::vector<std::string> ds{"table",     "synthetic",   "synthetic_rows", "synthetic_seed",
                                             "pool_size", "features",    "target",         "sweep_n_init",
                                             "sweep_budget"};
    auto check_keys = [](const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
        if (!obj.is_object())
            throw ConfigError("config: '" + where + "' must be an object");
        for (const auto& [key, value] : obj.items())
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
                throw ConfigError("config: unknown key '" + key + "' in " + where);
    };

    try {
        check_keys(j, top, "top level");
        detail::read_if(j, "objective", cfg.objective);
        if (j.contains("method"))
            cfg.methods = {parse_method(j.at("method").get<std::string>())};
        if (j.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : j.at("methods"))
                cfg.methods.push_back(parse_method(m.get<std::string>()));
        }
        detail::read_if(j, "n_runs", cfg.n_runs);
        detail::read_if(j, "seed", cfg.base_seed);
        detail::read_if(j, "out", cfg.output_dir);
        detail::read_if(j, "jobs", cfg.jobs);

        if (j.contains("engine")) {
            const json& e = j.at("engine");
            check_keys(e, eng, "engine");
            auto& c = cfg.engine;
            detail::read_if(e, "n_init", c.n_init);
            detail::read_if(e, "budget", c.budget);
            cfg.n_init_set = cfg.n_init_set || e.contains("n_init");
            cfg.budget_set = cfg.budget_set || e.contains("budget");
            detail::read_if(e, "credible_level", c.credible_level);
            detail::read_if(e, "sigma_perturb", c.sigma_perturb);
            detail::read_if(e, "n_candidates", c.n_candidates);
            detail::read_if(e, "kappa", c.kappa);
            detail::read_if(e, "restarts", c.restarts);
            detail::read_if(e, "max_evaluations", c.max_evaluations);
            detail::read_if(e, "refit_every", c.refit_every);
            detail::read_if(e, "crps_include_noise", c.crps_include_noise);
            if (e.contains("direction")) {
                c.direction = parse_direction(e.at("direction").get<std::string>());
                cfg.direction_set = true;
            }
            if (e.contains("kernel")) {
                c.kernel_family = kernel_from_json(e.at("kernel"));
                cfg.kernel_set = true;
            }
            if (e.contains("noise_variance") && !e.at("noise_variance").is_null())
                c.fixed_noise_variance = e.at("noise_variance").get<double>();
            if (e.contains("flat_prior")) {
                detail::read_if(e.at("flat_prior"), "mean", c.flat.mean);
                detail::read_if(e.at("flat_prior"), "std", c.flat.std);
            }
            if (e.contains("initial_points")) {
                const auto rows = e.at("initial_points").get<std::vector<std::vector<double>>>();
                if (rows.empty())
                    throw ConfigError("config: initial_points is empty");
                Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    if (rows[i].size() != rows[0].size())
                        throw ConfigError("config: ragged initial_points");
                    for (std::size_t k = 0; k < rows[i].size(); ++k)
                        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
                }
                c.initial_points = m;
            }
        }
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            check_keys(d, ds, "dataset");
            auto& o = cfg.dataset;
            if (d.contains("table") && !d.at("table").is_null())
                o.table_path = d.at("table").get<std::string>();
            detail::read_if(d, "synthetic", o.synthetic);
            detail::read_if(d, "synthetic_rows", o.synthetic_rows);
            detail::read_if(d, "synthetic_seed", o.synthetic_seed);
            detail::read_if(d, "pool_size", o.pool_size);
            detail::read_if(d, "features", o.schema.features);
            detail::read_if(d, "target", o.schema.target);
            detail::read_if(d, "sweep_n_init", o.sweep_n_init);
            detail::read_if(d, "sweep_budget", o.sweep_budget);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

inline json engine_to_json(const EngineConfig& c)
{
    json e;
    e["n_init"] = c.initial_count();
    e["budget"] = c.budget;
    e["credible_level"] = c.credible_level;
    e["sigma_perturb"] = c.sigma_perturb;
    e["n_candidates"] = c.n_candidates;
    e["kappa"] = c.kappa;
    e["direction"] = c.direction == Direction::maximize ? "maximize" : "minimize";
    e["kernel"] = kernel_to_json(c.kernel_family);
    e["restarts"] = c.restarts;
    e["max_evaluations"] = c.max_evaluations;
    e["refit_every"] = c.refit_every;
    e["noise_variance"] = c.fixed_noise_variance ? json(*c.fixed_noise_variance) : json(nullptr);
    e["flat_prior"] = {{"mean", c.flat.mean}, {"std", c.flat.std}};
    e["crps_include_noise"] = c.crps_include_noise;
    if (c.initial_points) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < c.initial_points->rows(); ++i) {
            json r = json::array();
            for (Eigen::Index k = 0; k < c.initial_points->cols(); ++k)
                r.push_back((*c.initial_points)(i, k));
            rows.push_back(r);
        }
        e["initial_points"] = rows;
    }
    return e;
}

/// Protocol defaults for settings the user left unset: 5 initial points for
/// six-hump, 10 for griewank, the two fixed points {-1, 2} for the 1D demo, and
/// 25 initial / 125 sequential samples for pool-based runs.
inline void apply_presets(ExperimentConfig& cfg, bool dataset)
{
    if (dataset) {
        if (!cfg.n_init_set)
            cfg.engine.n_init = 25;
        if (!cfg.budget_set)
            cfg.engine.budget = 125;
        return;
    }
    if (cfg.objective == "griewank" && !cfg.n_init_set)
        cfg.engine.n_init = 10;
    if (cfg.objective == "demo-1d") {
        if (!cfg.n_init_set && !cfg.engine.initial_points) {
            Eigen::MatrixXd init(2, 1);
            init << -1.0, 2.0;
            cfg.engine.initial_points = init;
        }
        if (!cfg.budget_set)
            cfg.engine.budget = 12;
    }
}

// ---------------------------------------------------------------------------
// Replications

/// What one replication needs besides the engine configuration.
struct RunSetup {
    EngineConfig engine;
    Objective objective;
    std::optional<TestSet> test;
};

/// Runs `n_runs` replications with seeds base_seed + i on up to `jobs`
/// threads. Results are ordered by run index whatever the scheduling.
template <class MakeSetup>
std::vector<RunTrace> run_replications(std::size_t n_runs, std::uint64_t base_seed, std::size_t jobs,
                                       MakeSetup&& make_setup)
{
    std::vector<RunTrace> traces(n_runs);
    std::vector<std::exception_ptr> errors(n_runs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n_runs; i = next++) {
            try {
                RunSetup s = make_setup(base_seed + i);
                traces[i] = run(s.engine, s.objective, s.test);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, n_runs));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return traces;
}

/// Benchmark replication setup: run seed -> engine config + objective + test grid.
inline auto benchmark_setup(const ExperimentConfig& cfg, Method method)
{
    Objective objective = make_benchmark(cfg.objective);
    TestSet test = benchmark_test_set(objective);
    EngineConfig engine = cfg.engine;
    engine.method = method;
    if (!cfg.kernel_set)
        engine.kernel_family = KernelSpec::product({KernelSpec::rational_quadratic(), KernelSpec::constant()});
    if (!cfg.direction_set)
        engine.direction = default_direction(cfg.objective);
    return [objective = std::move(objective), test = std::move(test), engine](std::uint64_t seed) {
        RunSetup s{engine, objective, test};
        s.engine.seed = seed;
        return s;
    };
}

inline TablePool load_dataset_table(const DatasetOptions& opt)
{
    if (opt.table_path)
        return load_table(*opt.table_path, opt.schema);
    if (!opt.synthetic)
        throw ConfigError("run-dataset: provide --table or --synthetic");
    TablePool pool = synth_table(opt.synthetic_rows, opt.synthetic_seed);
    pool.schema = opt.schema;
    if (pool.schema.features.size() != 6)
        throw SchemaError("synthetic table has exactly six features");
    return pool;
}

/// Pool-based replication: each run seed draws its own split of the table
/// into initial design, selectable pool and held-out test rows.
inline RunSetup dataset_run_setup(const TablePool& table, const EngineConfig& base, std::size_t pool_size,
                                  std::uint64_t seed)
{
    EngineConfig engine = base;
    engine.seed = seed;
    const std::size_t n_init = base.n_init;
    const TableSplits splits = table.split(n_init, pool_size, stream_seed(seed, stream::splits));
    if (splits.test.empty())
        throw CapacityError("table: no rows left for the test split");

    const Eigen::MatrixXd init = table.rows(splits.initial);
    const Eigen::MatrixXd cand = table.rows(splits.candidates);
    const Eigen::VectorXd init_y = table.targets(splits.initial);
    const Eigen::VectorXd cand_y = table.targets(splits.candidates);
    Eigen::MatrixXd both(init.rows() + cand.rows(), cand.cols());
    both << init, cand;
    const Eigen::VectorXd lo = both.colwise().minCoeff().transpose();
    const Eigen::VectorXd hi = both.colwise().maxCoeff().transpose();

    engine.initial_points = init;
    Objective objective{"table", SearchSpace::pool(cand, lo, hi), 0.0,
                        [both, by = Eigen::VectorXd((Eigen::VectorXd(both.rows()) << init_y, cand_y).finished())](
                            const Eigen::VectorXd& x, std::mt19937_64&) {
                            for (Eigen::Index i = 0; i < both.rows(); ++i)
                                if (both.row(i).transpose() == x)
                                    return by[i];
                            throw InputError("table objective: point is not a table row");
                        }};
    TestSet test{table.rows(splits.test), table.targets(splits.test)};
    return RunSetup{std::move(engine), std::move(objective), std::move(test)};
}

// ---------------------------------------------------------------------------
// Output files

namespace detail {

inline std::string fmt(double v)
{
    if (!std::isfinite(v))
        return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw IoError("cannot write '" + p.string() + "'");
    return out;
}

inline void close_out(std::ofstream& out, const std::filesystem::path& p)
{
    out.close();
    if (!out)
        throw IoError("write failed for '" + p.string() + "'");
}

} // namespace detail

inline std::string trace_header(Eigen::Index dim)
{
    std::string h = "run_id,iteration,mode,decision,evaluations_used";
    for (Eigen::Index k = 1; k <= dim; ++k)
        h += ",x" + std::to_string(k);
    h += ",y,shannon,bayesian_flat,confidence_C,adjustment_A,cas,threshold,test_rmse,test_crps,measure,measure_value";
    for (Eigen::Index k = 1; k <= dim; ++k)
        h += ",xp" + std::to_string(k);
    h += ",yp,measure_value_perturbed,threshold_perturbed";
    return h;
}

/// One row per initial point (iteration 0, decision "init") followed by one
/// row per step. Surprise columns are empty for baseline methods.
inline void write_trace_csv(std::ostream& out, const RunTrace& trace, std::size_t run_id, Eigen::Index dim)
{
    using detail::fmt;
    out << trace_header(dim) << '\n';
    const bool surprise = is_surprise_method(trace.method);
    const std::string measure = surprise ? std::string(to_string(surprise_measure_of(trace.method))) : "";
    auto xs = [&](const Eigen::VectorXd* x) {
        std::string s;
        for (Eigen::Index k = 0; k < dim; ++k)
            s += "," + (x ? fmt((*x)[k]) : std::string());
        return s;
    };
    for (const auto& o : trace.initial) {
        out << run_id << ",0,init,init,0" << xs(&o.x) << ',' << fmt(o.y) << ",,,,,,," << fmt(trace.initial_rmse)
            << ',' << fmt(trace.initial_crps) << ",," << xs(nullptr) << ",,,\n";
    }
    for (const auto& r : trace.records) {
        out << run_id << ',' << r.iteration << ',' << to_string(r.mode) << ',' << to_string(r.decision) << ','
            << r.evaluations_used << xs(&r.probe.x) << ',' << fmt(r.probe.y);
        if (r.probe.surprise) {
            const auto& s = *r.probe.surprise;
            out << ',' << fmt(s.breakdown.shannon) << ',' << fmt(s.breakdown.bayesian_flat) << ','
                << fmt(s.breakdown.confidence_correction) << ',' << fmt(s.breakdown.adjustment) << ','
                << fmt(s.breakdown.cas) << ',' << fmt(s.threshold);
        } else {
            out << ",,,,,,";
        }
        out << ',' << fmt(r.test_rmse) << ',' << fmt(r.test_crps) << ',' << measure << ','
            << (r.probe.surprise ? fmt(r.probe.surprise->value) : "");
        if (r.perturbed) {
            out << xs(&r.perturbed->x) << ',' << fmt(r.perturbed->y) << ','
                << fmt(r.perturbed->surprise->value) << ',' << fmt(r.perturbed->surprise->threshold);
        } else {
            out << xs(nullptr) << ",,,";
        }
        out << '\n';
    }
}

struct MetricCurves {
    std::vector<MeanCi> rmse; // per evaluation
    std::vector<MeanCi> crps;
    MeanCi final_rmse;
    MeanCi final_crps;
    std::vector<double> final_rmse_values;
    std::vector<double> final_crps_values;
};

inline MeanCi mean_ci_or_mean(const std::vector<double>& v, double level = 0.95)
{
    if (v.size() >= 2)
        return mean_ci(v, level);
    return {v.empty() ? std::numeric_limits<double>::quiet_NaN() : v.front(), std::numeric_limits<double>::quiet_NaN()};
}

inline MetricCurves summarize(const std::vector<RunTrace>& traces)
{
    MetricCurves c;
    if (traces.empty())
        return c;
    std::vector<std::vector<double>> rmse_curves, crps_curves;
    for (const auto& t : traces) {
        rmse_curves.push_back(t.per_evaluation(false));
        crps_curves.push_back(t.per_evaluation(true));
        c.final_rmse_values.push_back(t.final_rmse());
        c.final_crps_values.push_back(t.final_crps());
    }
    const std::size_t len = rmse_curves.front().size();
    for (std::size_t e = 0; e < len; ++e) {
        std::vector<double> r, q;
        for (std::size_t i = 0; i < traces.size(); ++i) {
            r.push_back(rmse_curves[i].at(e));
            q.push_back(crps_curves[i].at(e));
        }
        c.rmse.push_back(mean_ci_or_mean(r));
        c.crps.push_back(mean_ci_or_mean(q));
    }
    c.final_rmse = mean_ci_or_mean(c.final_rmse_values);
    c.final_crps = mean_ci_or_mean(c.final_crps_values);
    return c;
}

inline json summary_json(const ExperimentConfig& cfg, Method method, const EngineConfig& engine,
                         const std::vector<RunTrace>& traces)
{
    const MetricCurves c = summarize(traces);
    const bool with_ci = traces.size() >= 2;
    json s;
    s["objective"] = cfg.objective;
    s["method"] = std::string(to_string(method));
    s["n_runs"] = traces.size();
    s["base_seed"] = cfg.base_seed;
    s["seeds"] = json::array();
    for (const auto& t : traces)
        s["seeds"].push_back(t.seed);
    s["ci_level"] = 0.95;
    s["engine"] = engine_to_json(engine);

    json per;
    per["evaluations"] = json::array();
    per["rmse_mean"] = json::array();
    per["crps_mean"] = json::array();
    if (with_ci) {
        per["rmse_ci_half_width"] = json::array();
        per["crps_ci_half_width"] = json::array();
    }
    for (std::size_t e = 0; e < c.rmse.size(); ++e) {
        per["evaluations"].push_back(e);
        per["rmse_mean"].push_back(c.rmse[e].mean);
        per["crps_mean"].push_back(c.crps[e].mean);
        if (with_ci) {
            per["rmse_ci_half_width"].push_back(c.rmse[e].half_width);
            per["crps_ci_half_width"].push_back(c.crps[e].half_width);
        }
    }
    s["per_evaluation"] = per;

    auto final_block = [&](const MeanCi& m, const std::vector<double>& values) {
        json f;
        f["mean"] = m.mean;
        if (with_ci)
            f["ci_half_width"] = m.half_width;
        f["values"] = values;
        return f;
    };
    s["final"] = {{"rmse", final_block(c.final_rmse, c.final_rmse_values)},
                  {"crps", final_block(c.final_crps, c.final_crps_values)}};
    return s;
}

/// Writes traces/, summary.json, final_distribution.csv and curves.csv under `dir`.
inline MetricCurves write_method_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, Method method,
                                         const EngineConfig& engine, const std::vector<RunTrace>& traces,
                                         Eigen::Index dim)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "traces", ec);
    if (ec)
        throw IoError("cannot create '" + (dir / "traces").string() + "': " + ec.message());

    for (std::size_t i = 0; i < traces.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%03zu.csv", i);
        const fs::path p = dir / "traces" / name;
        auto out = detail::open_out(p);
        write_trace_csv(out, traces[i], i, dim);
        detail::close_out(out, p);
    }

    {
        const fs::path p = dir / "summary.json";
        auto out = detail::open_out(p);
        out << summary_json(cfg, method, engine, traces).dump(2) << '\n';
        detail::close_out(out, p);
    }
    {
        const fs::path p = dir / "final_distribution.csv";
        auto out = detail::open_out(p);
        out << "method,run_id,seed,final_rmse,final_crps\n";
        for (std::size_t i = 0; i < traces.size(); ++i)
            out << to_string(method) << ',' << i << ',' << traces[i].seed << ',' << detail::fmt(traces[i].final_rmse())
                << ',' << detail::fmt(traces[i].final_crps()) << '\n';
        detail::close_out(out, p);
    }
    {
        const fs::path p = dir / "curves.csv";
        auto out = detail::open_out(p);
        out << "method,run_id,evaluation,metric,value\n";
        for (std::size_t i = 0; i < traces.size(); ++i) {
            for (const bool crps : {false, true}) {
                const auto curve = traces[i].per_evaluation(crps);
                for (std::size_t e = 0; e < curve.size(); ++e)
                    out << to_string(method) << ',' << i << ',' << e << ',' << (crps ? "crps" : "rmse") << ','
                        << detail::fmt(curve[e]) << '\n';
            }
        }
        detail::close_out(out, p);
    }
    return summarize(traces);
}

// ---------------------------------------------------------------------------
// Commands

struct MethodResult {
    Method method;
    MetricCurves curves;
};

inline std::vector<MethodResult> run_benchmark_methods(const ExperimentConfig& cfg, const std::filesystem::path& out,
                                                       bool per_method_subdir)
{
    if (cfg.objective != "six-hump" && cfg.objective != "griewank" && cfg.objective != "demo-1d")
        throw ConfigError("unknown objective '" + cfg.objective + "' (expected six-hump, griewank or demo-1d)");
    cfg.validate();
    std::vector<MethodResult> results;
    for (const Method m : cfg.methods) {
        auto setup = benchmark_setup(cfg, m);
        const RunSetup probe = setup(cfg.base_seed);
        probe.engine.validate();
        auto traces = run_replications(cfg.n_runs, cfg.base_seed, cfg.jobs, setup);
        const auto dir = per_method_subdir ? out / std::string(to_string(m)) : out;
        results.push_back({m, write_method_outputs(dir, cfg, m, probe.engine, traces, probe.objective.space.dim())});
    }
    return results;
}

struct SweepPoint {
    std::size_t n_init;
    std::size_t budget;
};

inline std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg)
{
    const auto& d = cfg.dataset;
    const std::vector<std::size_t> inits = d.sweep_n_init.empty() ? std::vector<std::size_t>{cfg.engine.n_init}
                                                                  : d.sweep_n_init;
    const std::vector<std::size_t> budgets = d.sweep_budget.empty() ? std::vector<std::size_t>{cfg.engine.budget}
                                                                     : d.sweep_budget;
    std::vector<SweepPoint> pts;
    for (auto n : inits)
        for (auto b : budgets)
            pts.push_back({n, b});
    return pts;
}

inline std::vector<MethodResult> run_dataset_methods(const ExperimentConfig& cfg, const std::filesystem::path& out,
                                                     bool per_method_subdir)
{
    cfg.validate();
    const TablePool table = load_dataset_table(cfg.dataset);
    const auto points = sweep_points(cfg);
    const bool sweeping = points.size() > 1;
    std::vector<MethodResult> results;

    std::ofstream sweep_csv;
    if (sweeping) {
        std::error_code ec;
        std::filesystem::create_directories(out, ec);
        sweep_csv = detail::open_out(out / "sweep.csv");
        sweep_csv << "n_init,budget,method,metric,mean,ci_half_width,n_runs\n";
    }

    for (const auto& pt : points) {
        for (const Method m : cfg.methods) {
            EngineConfig base = cfg.engine;
            base.method = m;
            base.n_init = pt.n_init;
            base.budget = pt.budget;
            if (!cfg.kernel_set)
                base.kernel_family = KernelSpec::matern(1.5);
            if (pt.n_init + cfg.dataset.pool_size > static_cast<std::size_t>(table.size()))
                throw CapacityError("table: " + std::to_string(table.size()) + " rows cannot supply " +
                                    std::to_string(pt.n_init) + " initial + " + std::to_string(cfg.dataset.pool_size) +
                                    " candidate rows");
            auto setup = [&](std::uint64_t seed) { return dataset_run_setup(table, base, cfg.dataset.pool_size, seed); };
            const RunSetup probe = setup(cfg.base_seed);
            probe.engine.validate();
            auto traces = run_replications(cfg.n_runs, cfg.base_seed, cfg.jobs, setup);

            std::filesystem::path dir = out;
            if (sweeping)
                dir /= "n_init_" + std::to_string(pt.n_init) + "_budget_" + std::to_string(pt.budget);
            if (per_method_subdir)
                dir /= std::string(to_string(m));
            EngineConfig echoed = base;
            echoed.initial_points.reset(); // differs per run; the split seed is recorded instead
            auto curves = write_method_outputs(dir, cfg, m, echoed, traces, table.X.cols());
            if (sweeping) {
                for (const bool crps : {false, true}) {
                    const MeanCi& v = crps ? curves.final_crps : curves.final_rmse;
                    sweep_csv << pt.n_init << ',' << pt.budget << ',' << to_string(m) << ','
                              << (crps ? "crps" : "rmse") << ',' << detail::fmt(v.mean) << ','
                              << detail::fmt(v.half_width) << ',' << cfg.n_runs << '\n';
                }
            }
            results.push_back({m, std::move(curves)});
        }
    }
    if (sweeping)
        detail::close_out(sweep_csv, out / "sweep.csv");
    return results;
}

inline void write_comparison(const std::filesystem::path& out, const std::vector<MethodResult>& results,
                             const ExperimentConfig& cfg)
{
    {
        const auto p = out / "comparison.csv";
        auto f = detail::open_out(p);
        f << "method,metric,mean,ci_half_width,n_runs\n";
        for (const auto& r : results)
            for (const bool crps : {false, true}) {
                const MeanCi& v = crps ? r.curves.final_crps : r.curves.final_rmse;
                f << to_string(r.method) << ',' << (crps ? "crps" : "rmse") << ',' << detail::fmt(v.mean) << ','
                  << detail::fmt(v.half_width) << ',' << cfg.n_runs << '\n';
            }
        detail::close_out(f, p);
    }
    {
        const auto p = out / "comparison.txt";
        auto f = detail::open_out(p);
        f << "Final test-set error after the sequential budget, mean +/- 95% t confidence half-width\n";
        f << "over " << cfg.n_runs << " runs (seeds " << cfg.base_seed << ".." << cfg.base_seed + cfg.n_runs - 1
          << "). Units: original response units of objective '" << cfg.objective << "'.\n\n";
        char line[160];
        std::snprintf(line, sizeof line, "%-10s  %-28s  %-28s\n", "method", "RMSE", "CRPS");
        f << line;
        auto cell = [&](const MeanCi& v) {
            char buf[64];
            if (std::isfinite(v.half_width))
                std::snprintf(buf, sizeof buf, "%.4g +/- %.3g", v.mean, v.half_width);
            else
                std::snprintf(buf, sizeof buf, "%.4g", v.mean);
            return std::string(buf);
        };
        for (const auto& r : results) {
            std::snprintf(line, sizeof line, "%-10s  %-28s  %-28s\n", std::string(to_string(r.method)).c_str(),
                          cell(r.curves.final_rmse).c_str(), cell(r.curves.final_crps).c_str());
            f << line;
        }
        detail::close_out(f, p);
    }
}

} // namespace casmart
