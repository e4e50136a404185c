#pragma once

// The sequential design loop. A Session owns one run: it stages the next
// experiment (`ask`), absorbs its outcome (`tell`) and emits one
// IterationRecord per completed step. `run` drives a Session against an
// Objective.
//
// Surprise-driven methods alternate between exploration (maximin over fresh
// Sobol candidates or the remaining pool) and exploitation. A surprising probe
// is verified by a perturbed second draw before it is trusted; a confirmed
// surprise keeps sampling near the most recent surprising point until a draw
// stops being surprising. Acquisition-function baselines pick argmax of their
// score over the same candidate sets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "casmart/acquisition.hpp"
#include "casmart/errors.hpp"
#include "casmart/gp.hpp"
#include "casmart/kernels.hpp"
#include "casmart/metrics.hpp"
#include "casmart/objectives.hpp"
#include "casmart/sampling.hpp"
#include "casmart/sobol.hpp"
#include "casmart/surprise.hpp"

namespace casmart {

enum class Method { cas, shannon, bayesian, ei, pi, ucb, mv };

inline Method parse_method(std::string_view name)
{
    if (name == "cas")
        return Method::cas;
    if (name == "shannon")
        return Method::shannon;
    if (name == "bayesian")
        return Method::bayesian;
    if (name == "ei")
        return Method::ei;
    if (name == "pi")
        return Method::pi;
    if (name == "ucb")
        return Method::ucb;
    if (name == "mv")
        return Method::mv;
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

inline std::string_view to_string(Method m) noexcept
{
    switch (m) {
    case Method::cas:
        return "cas";
    case Method::shannon:
        return "shannon";
    case Method::bayesian:
        return "bayesian";
    case Method::ei:
        return "ei";
    case Method::pi:
        return "pi";
    case Method::ucb:
        return "ucb";
    case Method::mv:
        return "mv";
    }
    return "?";
}

inline bool is_surprise_method(Method m) noexcept
{
    return m == Method::cas || m == Method::shannon || m == Method::bayesian;
}

inline SurpriseMeasure surprise_measure_of(Method m)
{
    switch (m) {
    case Method::cas:
        return SurpriseMeasure::cas;
    case Method::shannon:
        return SurpriseMeasure::shannon;
    case Method::bayesian:
        return SurpriseMeasure::bayesian;
    default:
        throw InputError("method has no surprise measure");
    }
}

inline AcquisitionKind acquisition_of(Method m)
{
    switch (m) {
    case Method::ei:
        return AcquisitionKind::ei;
    case Method::pi:
        return AcquisitionKind::pi;
    case Method::ucb:
        return AcquisitionKind::ucb;
    case Method::mv:
        return AcquisitionKind::mv;
    default:
        throw InputError("method is not an acquisition baseline");
    }
}

inline const std::vector<Method>& all_methods()
{
    static const std::vector<Method> m{Method::cas, Method::shannon, Method::bayesian, Method::ei,
                                       Method::pi,  Method::ucb,     Method::mv};
    return m;
}

// ---------------------------------------------------------------------------
// Random streams. Every stochastic component of a run draws from its own
// generator, seeded from (run seed, stream id) through std::seed_seq.

namespace stream {
inline constexpr std::uint32_t sobol_offset = 1;
inline constexpr std::uint32_t perturbation = 2;
inline constexpr std::uint32_t noise = 3;
inline constexpr std::uint32_t splits = 4;
inline constexpr std::uint32_t hyperparameters = 1000; // + fit counter
} // namespace stream

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t id)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), id};
    return std::mt19937_64(seq);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint32_t id) { return make_stream(seed, id)(); }

// ---------------------------------------------------------------------------

struct EngineConfig {
    std::size_t n_init = 5;
    std::size_t budget = 60; // evaluations after the initial design
    double credible_level = 0.95;
    double sigma_perturb = 0.02; // unit-cube coordinates
    std::size_t n_candidates = 256;
    Method method = Method::cas;
    double kappa = 2.0;
    /// Optimization sense of the objective, used by the acquisition baselines.
    Direction direction = Direction::maximize;
    KernelSpec kernel_family = KernelSpec::product({KernelSpec::rational_quadratic(), KernelSpec::constant()});
    int restarts = 5;
    int max_evaluations = 400;
    std::uint64_t seed = 0;
    std::size_t refit_every = 1;
    std::optional<double> fixed_noise_variance;
    FlatPrior flat;
    bool crps_include_noise = false;
    /// Explicit initial design in original units (overrides the Sobol design).
    std::optional<Eigen::MatrixXd> initial_points;

    void validate() const
    {
        if (n_init < 1 && !initial_points)
            throw ConfigError("engine: n_init must be >= 1");
        if (initial_points && initial_points->rows() < 1)
            throw ConfigError("engine: explicit initial design is empty");
        if (budget < 1)
            throw ConfigError("engine: budget must be >= 1");
        if (!(credible_level > 0.0 && credible_level < 1.0))
            throw ConfigError("engine: credible level must lie in (0, 1)");
        if (!(sigma_perturb >= 0.0) || !std::isfinite(sigma_perturb))
            throw ConfigError("engine: sigma_perturb must be finite and non-negative");
        if (n_candidates < 1)
            throw ConfigError("engine: n_candidates must be >= 1");
        if (restarts < 1)
            throw ConfigError("engine: restarts must be >= 1");
        if (refit_every < 1)
            throw ConfigError("engine: refit_every must be >= 1");
        if (method == Method::ucb && !(kappa > 0.0))
            throw ConfigError("engine: UCB kappa must be positive");
        if (fixed_noise_variance && !(*fixed_noise_variance >= 0.0))
            throw ConfigError("engine: fixed noise variance must be non-negative");
        try {
            kernel_family.validate();
        } catch (const InputError& e) {
            throw ConfigError(e.what());
        }
        if (is_surprise_method(method))
            (void)FlatPrior::checked(flat.mean, flat.std, prior_variance_upper_bound(kernel_family));
    }

    std::size_t initial_count() const
    {
        return initial_points ? static_cast<std::size_t>(initial_points->rows()) : n_init;
    }
};

/// Held-out points (original units) with noise-free responses.
struct TestSet {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

inline constexpr std::uint64_t test_set_sobol_offset = std::uint64_t{1} << 24;

/// Sobol grid far past any design or candidate index, evaluated without noise.
inline TestSet benchmark_test_set(const Objective& objective)
{
    const auto f = noise_free(objective.name);
    const std::size_t n = objective.space.dim() >= 5 ? 4096 : 1024;
    TestSet t;
    t.X = sobol(objective.space, n, test_set_sobol_offset);
    t.y.resize(t.X.rows());
    for (Eigen::Index i = 0; i < t.X.rows(); ++i)
        t.y[i] = f(t.X.row(i).transpose());
    return t;
}

enum class SearchMode { explore, exploit, baseline };

inline std::string_view to_string(SearchMode m) noexcept
{
    switch (m) {
    case SearchMode::explore:
        return "explore";
    case SearchMode::exploit:
        return "exploit";
    case SearchMode::baseline:
        return "baseline";
    }
    return "?";
}

enum class Decision {
    no_surprise,        // probe inside its credible band; explore next
    surprise_confirmed, // probe and verification both surprising; exploit next
    surprise_refuted,   // verification not surprising; probe discarded, explore next
    exploit_continue,   // exploitation draw; stays in exploit while surprising
    surprise_unverified,// surprising probe with no budget left to verify it
    baseline_acquisition,
};

inline std::string_view to_string(Decision d) noexcept
{
    switch (d) {
    case Decision::no_surprise:
        return "no-surprise-explore";
    case Decision::surprise_confirmed:
        return "surprise-confirmed-exploit";
    case Decision::surprise_refuted:
        return "surprise-refuted-explore";
    case Decision::exploit_continue:
        return "exploit-continue";
    case Decision::surprise_unverified:
        return "surprise-unverified";
    case Decision::baseline_acquisition:
        return "baseline-acquisition";
    }
    return "?";
}

struct Observation {
    Eigen::VectorXd x; // original units
    double y = 0.0;    // original units
    std::optional<Eigen::Index> pool_index;
    std::optional<SurpriseEvaluation> surprise; // standardized space, pre-update model
};

struct IterationRecord {
    std::size_t iteration = 0;
    SearchMode mode = SearchMode::explore; // mode the step was taken in
    Decision decision = Decision::no_surprise;
    int evaluations_used = 1;
    Observation probe;
    std::optional<Observation> perturbed;
    bool probe_added = true;
    double test_rmse = std::numeric_limits<double>::quiet_NaN();
    double test_crps = std::numeric_limits<double>::quiet_NaN();
};

struct RunTrace {
    std::uint64_t seed = 0;
    Method method = Method::cas;
    std::vector<Observation> initial;
    double initial_rmse = std::numeric_limits<double>::quiet_NaN();
    double initial_crps = std::numeric_limits<double>::quiet_NaN();
    std::vector<IterationRecord> records;

    std::size_t evaluations() const
    {
        std::size_t n = 0;
        for (const auto& r : records)
            n += static_cast<std::size_t>(r.evaluations_used);
        return n;
    }

    double final_rmse() const { return records.empty() ? initial_rmse : records.back().test_rmse; }
    double final_crps() const { return records.empty() ? initial_crps : records.back().test_crps; }

    /// Metric after each evaluation (entry 0 = initial design). A two-draw step
    /// updates the model once, so its first draw repeats the previous value.
    std::vector<double> per_evaluation(bool crps) const
    {
        std::vector<double> out{crps ? initial_crps : initial_rmse};
        for (const auto& r : records) {
            for (int k = 1; k < r.evaluations_used; ++k)
                out.push_back(out.back());
            out.push_back(crps ? r.test_crps : r.test_rmse);
        }
        return out;
    }
};

class Session {
public:
    enum class Phase { initializing, probe, verify, done };

    Session(EngineConfig config, SearchSpace space, std::optional<TestSet> test = std::nullopt)
        : config_(std::move(config)), space_(std::move(space)), test_(std::move(test)),
          perturb_rng_(make_stream(config_.seed, stream::perturbation))
    {
        config_.validate();
        if (config_.initial_points && config_.initial_points->cols() != space_.dim())
            throw ConfigError("engine: initial design dimension differs from the search space");
        if (test_) {
            if (test_->X.rows() == 0 || test_->X.rows() != test_->y.size() || test_->X.cols() != space_.dim())
                throw InputError("engine: malformed test set");
            test_unit_ = space_.to_unit_rows(test_->X);
        }
        trace_.seed = config_.seed;
        trace_.method = config_.method;
        mode_ = is_surprise_method(config_.method) ? SearchMode::explore : SearchMode::baseline;

        auto offset = make_stream(config_.seed, stream::sobol_offset);
        init_skip_ = 1 + (offset() % 1024) * 1024;
        stage_initial_design();
    }

    const EngineConfig& config() const noexcept { return config_; }
    const SearchSpace& space() const noexcept { return space_; }
    Phase phase() const noexcept { return phase_; }
    SearchMode mode() const noexcept { return mode_; }
    bool done() const noexcept { return phase_ == Phase::done; }
    std::size_t evaluations_used() const noexcept { return used_; }
    const RunTrace& trace() const noexcept { return trace_; }
    const GpModel& model() const
    {
        if (!model_)
            throw PreconditionError("session: no model before the initial design is complete");
        return *model_;
    }
    const ResponseScaler& scaler() const noexcept { return scaler_; }
    std::uint64_t initial_sobol_skip() const noexcept { return init_skip_; }
    /// Training inputs (unit cube) and responses (original units).
    const Eigen::MatrixXd& train_unit() const noexcept { return train_unit_; }
    const std::vector<double>& train_y() const noexcept { return train_y_; }

    /// The point the caller should evaluate next, in original units.
    Eigen::VectorXd ask() const
    {
        if (phase_ == Phase::done)
            throw ProtocolError("ask: the run is complete");
        return staged_.x;
    }

    /// Reports the response at the last asked point. Returns the completed
    /// step's record when this observation finishes a step.
    std::optional<IterationRecord> tell(const Eigen::VectorXd& x, double y)
    {
        if (phase_ == Phase::done)
            throw ProtocolError("tell: the run is complete");
        if (x.size() != space_.dim())
            throw ProtocolError("tell: point dimension differs from the asked point");
        if (!std::isfinite(y))
            throw InputError("tell: response must be finite");
        const Eigen::VectorXd du = space_.to_unit(x) - space_.to_unit(staged_.x);
        if (!(du.cwiseAbs().maxCoeff() <= 1e-12))
            throw ProtocolError("tell: point differs from the last asked point");

        Observation obs;
        obs.x = staged_.x;
        obs.y = y;
        obs.pool_index = staged_.pool_index;
        if (obs.pool_index)
            space_.mark_used(*obs.pool_index);

        switch (phase_) {
        case Phase::initializing:
            tell_initial(std::move(obs));
            return std::nullopt;
        case Phase::probe:
            return tell_probe(std::move(obs));
        case Phase::verify:
            return tell_verification(std::move(obs));
        case Phase::done:
            break;
        }
        return std::nullopt;
    }

private:
    struct Staged {
        Eigen::VectorXd x;
        std::optional<Eigen::Index> pool_index;
    };

    // -- initial design -----------------------------------------------------

    void stage_initial_design()
    {
        const std::size_t n = config_.initial_count();
        if (space_.is_pool() && space_.available_count() < static_cast<Eigen::Index>(config_.budget))
            throw ConfigError("engine: pool has " + std::to_string(space_.available_count()) +
                              " points but the budget is " + std::to_string(config_.budget));

        if (config_.initial_points) {
            for (Eigen::Index i = 0; i < config_.initial_points->rows(); ++i) {
                Staged s;
                s.x = config_.initial_points->row(i).transpose();
                if (!space_.is_pool() && !space_.contains(s.x))
                    throw ConfigError("engine: initial point outside the search space");
                if (space_.is_pool())
                    s.pool_index = space_.find_point(s.x);
                initial_queue_.push_back(std::move(s));
            }
        } else if (!space_.is_pool()) {
            const Eigen::MatrixXd u = sobol_unit(static_cast<int>(space_.dim()), n, init_skip_);
            for (Eigen::Index i = 0; i < u.rows(); ++i)
                initial_queue_.push_back({space_.from_unit(u.row(i).transpose()), std::nullopt});
        } else {
            // Greedy one-to-one assignment of pool points to Sobol locations.
            if (space_.available_count() < static_cast<Eigen::Index>(n + config_.budget))
                throw ConfigError("engine: pool too small for the initial design plus budget");
            SearchSpace scratch = space_;
            const Eigen::MatrixXd u = sobol_unit(static_cast<int>(space_.dim()), n, init_skip_);
            for (Eigen::Index i = 0; i < u.rows(); ++i) {
                const Eigen::Index idx = scratch.nearest_available(u.row(i).transpose());
                scratch.mark_used(idx);
                initial_queue_.push_back({space_.points().row(idx).transpose(), idx});
            }
        }
        // Pool points named in the design are not selectable later.
        for (const auto& s : initial_queue_)
            if (s.pool_index)
                space_.mark_used(*s.pool_index);
        if (space_.is_pool() && space_.available_count() < static_cast<Eigen::Index>(config_.budget))
            throw ConfigError("engine: pool too small for the initial design plus budget");

        phase_ = Phase::initializing;
        staged_ = initial_queue_.front();
    }

    void tell_initial(Observation obs)
    {
        add_training(obs.x, obs.y);
        trace_.initial.push_back(std::move(obs));
        if (trace_.initial.size() < initial_queue_.size()) {
            staged_ = initial_queue_[trace_.initial.size()];
            return;
        }
        refresh_model(true);
        const auto [rmse_value, crps_value] = test_metrics();
        trace_.initial_rmse = rmse_value;
        trace_.initial_crps = crps_value;

        if (is_surprise_method(config_.method)) {
            // First probe: the next Sobol point after the initial block.
            const Eigen::VectorXd u =
                sobol_unit(static_cast<int>(space_.dim()), 1, init_skip_ + config_.initial_count())
                    .row(0)
                    .transpose();
            if (space_.is_pool()) {
                const Eigen::Index idx = space_.nearest_available(u);
                staged_ = {space_.points().row(idx).transpose(), idx};
            } else {
                staged_ = {space_.from_unit(u), std::nullopt};
            }
        } else {
            stage_baseline();
        }
        phase_ = Phase::probe;
    }

    // -- sequential steps ---------------------------------------------------

    double standardized(double y) const { return scaler_.to_standard(y); }

    SurpriseEvaluation judge(const Observation& obs) const
    {
        return evaluate_surprise(surprise_measure_of(config_.method), *model_, space_.to_unit(obs.x),
                                 standardized(obs.y), config_.flat, config_.credible_level);
    }

    std::optional<IterationRecord> tell_probe(Observation obs)
    {
        ++used_;
        IterationRecord rec;
        rec.iteration = trace_.records.size() + 1;
        rec.mode = mode_;

        if (mode_ == SearchMode::baseline) {
            rec.decision = Decision::baseline_acquisition;
            add_training(obs.x, obs.y);
            rec.probe = std::move(obs);
            return finish_step(std::move(rec));
        }

        obs.surprise = judge(obs);
        if (mode_ == SearchMode::exploit) {
            rec.decision = Decision::exploit_continue;
            add_training(obs.x, obs.y);
            if (obs.surprise->flagged) {
                exploit_center_ = obs.x;
            } else {
                mode_ = SearchMode::explore;
            }
            rec.probe = std::move(obs);
            return finish_step(std::move(rec));
        }

        if (!obs.surprise->flagged) {
            rec.decision = Decision::no_surprise;
            add_training(obs.x, obs.y);
            rec.probe = std::move(obs);
            return finish_step(std::move(rec));
        }

        if (used_ >= config_.budget) {
            // No evaluation left for the verification draw.
            rec.decision = Decision::surprise_unverified;
            add_training(obs.x, obs.y);
            rec.probe = std::move(obs);
            return finish_step(std::move(rec));
        }

        pending_ = std::move(rec);
        pending_->probe = std::move(obs);
        const PerturbedPoint p = perturb(pending_->probe.x, config_.sigma_perturb, space_, perturb_rng_);
        staged_ = {p.x, p.pool_index};
        phase_ = Phase::verify;
        return std::nullopt;
    }

    std::optional<IterationRecord> tell_verification(Observation obs)
    {
        ++used_;
        IterationRecord rec = std::move(*pending_);
        pending_.reset();
        rec.evaluations_used = 2;
        // Judged against the same model as the probe it verifies.
        obs.surprise = judge(obs);
        if (obs.surprise->flagged) {
            rec.decision = Decision::surprise_confirmed;
            add_training(rec.probe.x, rec.probe.y);
            add_training(obs.x, obs.y);
            mode_ = SearchMode::exploit;
            exploit_center_ = obs.x;
        } else {
            rec.decision = Decision::surprise_refuted;
            rec.probe_added = false;
            add_training(obs.x, obs.y);
            mode_ = SearchMode::explore;
        }
        rec.perturbed = std::move(obs);
        return finish_step(std::move(rec));
    }

    IterationRecord finish_step(IterationRecord rec)
    {
        const bool refit = rec.iteration % config_.refit_every == 0;
        refresh_model(refit);
        const auto [rmse_value, crps_value] = test_metrics();
        rec.test_rmse = rmse_value;
        rec.test_crps = crps_value;
        trace_.records.push_back(rec);

        if (used_ >= config_.budget) {
            phase_ = Phase::done;
            return rec;
        }
        phase_ = Phase::probe;
        switch (mode_) {
        case SearchMode::explore:
            stage_exploration();
            break;
        case SearchMode::exploit: {
            const PerturbedPoint p = perturb(exploit_center_, config_.sigma_perturb, space_, perturb_rng_);
            staged_ = {p.x, p.pool_index};
            break;
        }
        case SearchMode::baseline:
            stage_baseline();
            break;
        }
        return rec;
    }

    /// Candidate rows in unit coordinates for the step about to be staged,
    /// with their pool indices in pool mode.
    Eigen::MatrixXd candidates(std::vector<Eigen::Index>& pool_indices) const
    {
        pool_indices.clear();
        if (space_.is_pool()) {
            pool_indices = space_.available_indices();
            if (pool_indices.empty())
                throw ExhaustionError("engine: candidate pool exhausted");
            Eigen::MatrixXd rows(static_cast<Eigen::Index>(pool_indices.size()), space_.dim());
            for (std::size_t i = 0; i < pool_indices.size(); ++i)
                rows.row(static_cast<Eigen::Index>(i)) = space_.points().row(pool_indices[i]);
            return space_.to_unit_rows(rows);
        }
        const std::uint64_t step = trace_.records.size(); // 0 for the first sequential step
        const std::uint64_t skip = init_skip_ + config_.initial_count() + 1 + step * config_.n_candidates;
        return sobol_unit(static_cast<int>(space_.dim()), config_.n_candidates, skip);
    }

    void stage_from_candidate(const Eigen::MatrixXd& cand, const std::vector<Eigen::Index>& pool_indices,
                              Eigen::Index row)
    {
        if (space_.is_pool()) {
            const Eigen::Index idx = pool_indices[static_cast<std::size_t>(row)];
            staged_ = {space_.points().row(idx).transpose(), idx};
        } else {
            staged_ = {space_.from_unit(cand.row(row).transpose()), std::nullopt};
        }
    }

    void stage_exploration()
    {
        std::vector<Eigen::Index> idx;
        const Eigen::MatrixXd cand = candidates(idx);
        stage_from_candidate(cand, idx, maximin_index(cand, train_unit_));
    }

    void stage_baseline()
    {
        std::vector<Eigen::Index> idx;
        const Eigen::MatrixXd cand = candidates(idx);
        AcquisitionStrategy strategy;
        strategy.kind = acquisition_of(config_.method);
        strategy.kappa = config_.kappa;
        strategy.direction = config_.direction;
        const auto& y = model_->train().y;
        const double f_best = config_.direction == Direction::maximize ? y.maxCoeff() : y.minCoeff();
        stage_from_candidate(cand, idx, argmax_acquisition(*model_, cand, strategy, f_best).index);
    }

    // -- model --------------------------------------------------------------

    void add_training(const Eigen::VectorXd& x, double y)
    {
        const Eigen::VectorXd u = space_.to_unit(x);
        train_unit_.conservativeResize(train_unit_.rows() + 1, u.size());
        train_unit_.row(train_unit_.rows() - 1) = u.transpose();
        train_y_.push_back(y);
    }

    void refresh_model(bool reoptimize)
    {
        const Eigen::VectorXd y_orig = Eigen::Map<const Eigen::VectorXd>(train_y_.data(),
                                                                          static_cast<Eigen::Index>(train_y_.size()));
        scaler_ = ResponseScaler::fit(y_orig);
        Dataset data{train_unit_, scaler_.to_standard(y_orig)};

        if (data.size() < 2) {
            model_ = fit(std::move(data), config_.kernel_family, config_.fixed_noise_variance.value_or(1e-6));
            return;
        }
        if (reoptimize || !model_) {
            HyperparameterOptions opts;
            opts.restarts = config_.restarts;
            opts.max_evaluations = config_.max_evaluations;
            opts.seed = stream_seed(config_.seed, stream::hyperparameters + static_cast<std::uint32_t>(fits_++));
            opts.fixed_noise_variance = config_.fixed_noise_variance;
            if (model_ && model_->train().size() >= 2) {
                opts.warm_kernel = model_->kernel();
                opts.warm_noise_variance = model_->noise_variance();
            }
            model_ = optimize_hyperparameters(data, config_.kernel_family, opts);
        } else {
            model_ = fit(std::move(data), model_->kernel(), model_->noise_variance());
        }
    }

    std::pair<double, double> test_metrics() const
    {
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        if (!test_)
            return {nan, nan};
        auto preds = model_->predict(test_unit_);
        Eigen::VectorXd mean(static_cast<Eigen::Index>(preds.size()));
        for (std::size_t i = 0; i < preds.size(); ++i) {
            auto& p = preds[i];
            double sd = p.std;
            if (config_.crps_include_noise)
                sd = std::sqrt(sd * sd + model_->noise_variance());
            p.mean = scaler_.from_standard(p.mean);
            p.std = sd * scaler_.scale;
            mean[static_cast<Eigen::Index>(i)] = p.mean;
        }
        return {rmse(mean, test_->y), mean_crps(preds, test_->y)};
    }

    EngineConfig config_;
    SearchSpace space_;
    std::optional<TestSet> test_;
    Eigen::MatrixXd test_unit_;
    std::mt19937_64 perturb_rng_;
    std::uint64_t init_skip_ = 1;

    Phase phase_ = Phase::initializing;
    SearchMode mode_ = SearchMode::explore;
    Eigen::VectorXd exploit_center_;
    std::vector<Staged> initial_queue_;
    Staged staged_;
    std::optional<IterationRecord> pending_;
    std::size_t used_ = 0;
    std::size_t fits_ = 0;

    Eigen::MatrixXd train_unit_;
    std::vector<double> train_y_;
    ResponseScaler scaler_;
    std::optional<GpModel> model_;
    RunTrace trace_;
};

/// Runs a full session against `objective`, drawing observation noise from
/// the run's noise stream.
inline RunTrace run(const EngineConfig& config, const Objective& objective,
                    const std::optional<TestSet>& test = std::nullopt)
{
    Session session(config, objective.space, test);
    auto noise = make_stream(config.seed, stream::noise);
    while (!session.done()) {
        const Eigen::VectorXd x = session.ask();
        session.tell(x, objective(x, noise));
    }
    return session.trace();
}

} // namespace casmart
