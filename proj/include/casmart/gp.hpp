#pragma once

// Gaussian-process regression with a zero prior mean: exact Cholesky fit,
// posterior prediction, marginal-likelihood hyperparameter search and
// incremental rank-one extension of the training set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "casmart/detail/nelder_mead.hpp"
#include "casmart/errors.hpp"
#include "casmart/kernels.hpp"

namespace casmart {

/// Training inputs as rows of `X` with responses `y`.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    Eigen::Index size() const noexcept { return y.size(); }
    Eigen::Index dim() const noexcept { return X.cols(); }

    void validate() const
    {
        if (X.rows() != y.size())
            throw InputError("dataset: row count of X differs from length of y");
        if (!X.allFinite() || !y.allFinite())
            throw InputError("dataset: non-finite entry");
    }

    Dataset with_point(const Eigen::VectorXd& x, double value) const
    {
        Dataset out;
        out.X.resize(X.rows() + 1, x.size());
        if (X.rows() > 0)
            out.X.topRows(X.rows()) = X;
        out.X.row(X.rows()) = x.transpose();
        out.y.resize(y.size() + 1);
        out.y.head(y.size()) = y;
        out.y[y.size()] = value;
        return out;
    }
};

struct Prediction {
    double mean = 0.0;
    double std = 0.0;
};

/// Affine map that standardizes responses to zero mean and unit variance.
/// A constant response vector maps to zeros with unit scale.
struct ResponseScaler {
    double mean = 0.0;
    double scale = 1.0;

    static ResponseScaler fit(const Eigen::VectorXd& y)
    {
        ResponseScaler s;
        if (y.size() == 0)
            return s;
        s.mean = y.mean();
        const double var = (y.array() - s.mean).square().mean();
        const double sd = std::sqrt(var);
        s.scale = (sd > 1e-12 * (1.0 + std::abs(s.mean))) ? sd : 1.0;
        return s;
    }

    double to_standard(double v) const noexcept { return (v - mean) / scale; }
    double from_standard(double v) const noexcept { return v * scale + mean; }
    Eigen::VectorXd to_standard(const Eigen::VectorXd& v) const
    {
        return ((v.array() - mean) / scale).matrix();
    }
};

class GpModel {
public:
    const KernelSpec& kernel() const noexcept { return kernel_; }
    double noise_variance() const noexcept { return noise_variance_; }
    /// Diagonal jitter that was needed on top of the noise to factorize.
    double jitter() const noexcept { return jitter_; }
    const Dataset& train() const noexcept { return train_; }
    /// Lower-triangular factor of K(X, X) + (noise + jitter) I.
    const Eigen::MatrixXd& chol() const noexcept { return chol_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    double log_marginal_likelihood() const noexcept { return log_marginal_likelihood_; }
    Eigen::Index dim() const noexcept { return train_.dim(); }

    /// Latent posterior at each row of `Xq`.
    std::vector<Prediction> predict(const Eigen::MatrixXd& Xq) const
    {
        if (Xq.rows() > 0 && Xq.cols() != train_.dim())
            throw InputError("predict: query dimension differs from training dimension");
        std::vector<Prediction> out(static_cast<std::size_t>(Xq.rows()));
        if (Xq.rows() == 0)
            return out;
        const Eigen::MatrixXd cross = kernel_matrix(kernel_, train_.X, Xq); // n x m
        const Eigen::VectorXd mean = cross.transpose() * weights_;
        const Eigen::MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(cross);
        const double prior = kernel_.prior_variance();
        for (Eigen::Index j = 0; j < Xq.rows(); ++j) {
            const double var = prior - v.col(j).squaredNorm();
            out[static_cast<std::size_t>(j)] = {mean[j], std::sqrt(std::max(var, 0.0))};
        }
        return out;
    }

    Prediction predict(const Eigen::VectorXd& x) const
    {
        if (x.size() != train_.dim())
            throw InputError("predict: query dimension differs from training dimension");
        return predict(Eigen::MatrixXd(x.transpose())).front();
    }

    // Eigen expressions convert to both overloads above; a column vector type
    // means one point.
    template <class Derived>
    auto predict(const Eigen::MatrixBase<Derived>& e) const
    {
        if constexpr (Derived::ColsAtCompileTime == 1)
            return predict(Eigen::VectorXd(e));
        else
            return predict(Eigen::MatrixXd(e));
    }

private:
    friend GpModel fit(Dataset, const KernelSpec&, double);
    friend GpModel update_with_observation_fixed(const GpModel&, const Eigen::VectorXd&, double);
    friend GpModel fit_with_gram(Dataset, const KernelSpec&, double, Eigen::MatrixXd);

    void finish()
    {
        weights_ = chol_.triangularView<Eigen::Lower>().solve(train_.y);
        chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(weights_);
        const auto n = static_cast<double>(train_.size());
        log_marginal_likelihood_ = -0.5 * train_.y.dot(weights_) -
                                   chol_.diagonal().array().log().sum() -
                                   0.5 * n * std::log(2.0 * std::numbers::pi);
    }

    KernelSpec kernel_;
    double noise_variance_ = 0.0;
    double jitter_ = 0.0;
    Dataset train_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd weights_;
    double log_marginal_likelihood_ = 0.0;
};

namespace detail {

inline constexpr double jitter_start = 1e-10;
inline constexpr double jitter_limit = 1e-4;

/// Cholesky of `gram` + (noise + jitter) I with the jitter escalation schedule
/// 0, 1e-10, 1e-9, ..., 1e-4. Returns the jitter that succeeded.
inline std::optional<double> factorize(const Eigen::MatrixXd& gram, double noise_variance,
                                       Eigen::MatrixXd& chol, std::vector<double>* attempted = nullptr)
{
    const Eigen::Index n = gram.rows();
    double jitter = 0.0;
    while (true) {
        if (attempted)
            attempted->push_back(jitter);
        Eigen::MatrixXd a = gram;
        a.diagonal().array() += noise_variance + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success && llt.matrixLLT().diagonal().allFinite() &&
            (n == 0 || llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
            chol = llt.matrixL();
            return jitter;
        }
        if (jitter >= jitter_limit * (1.0 - 1e-12))
            return std::nullopt;
        jitter = (jitter == 0.0) ? jitter_start : jitter * 10.0;
    }
}

} // namespace detail

inline GpModel fit_with_gram(Dataset train, const KernelSpec& kernel, double noise_variance,
                             Eigen::MatrixXd gram)
{
    GpModel m;
    std::vector<double> attempted;
    const auto jitter = detail::factorize(gram, noise_variance, m.chol_, &attempted);
    if (!jitter)
        throw FitError("fit: covariance matrix is not positive definite after jitter escalation",
                       std::move(attempted));
    m.kernel_ = kernel;
    m.noise_variance_ = noise_variance;
    m.jitter_ = *jitter;
    m.train_ = std::move(train);
    m.finish();
    return m;
}

inline GpModel fit(Dataset train, const KernelSpec& kernel, double noise_variance)
{
    train.validate();
    if (train.size() < 1)
        throw PreconditionError("fit: at least one training point is required");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw InputError("fit: noise variance must be finite and non-negative");
    kernel.validate();
    Eigen::MatrixXd gram = kernel_matrix(kernel, train.X);
    return fit_with_gram(std::move(train), kernel, noise_variance, std::move(gram));
}

/// Appends one observation keeping hyperparameters fixed. The factor is
/// extended by one row when the new pivot is positive; otherwise the model is
/// refit from scratch.
inline GpModel update_with_observation_fixed(const GpModel& model, const Eigen::VectorXd& x, double y)
{
    if (x.size() != model.dim())
        throw InputError("update_with_observation: dimension mismatch");
    if (!std::isfinite(y) || !x.allFinite())
        throw InputError("update_with_observation: non-finite observation");

    const Eigen::Index n = model.train().size();
    const Eigen::MatrixXd xm = x.transpose();
    const Eigen::VectorXd cross = kernel_matrix(model.kernel(), model.train().X, xm).col(0);
    const Eigen::VectorXd l = model.chol().triangularView<Eigen::Lower>().solve(cross);
    const double pivot =
        model.kernel().prior_variance() + model.noise_variance() + model.jitter() - l.squaredNorm();

    Dataset extended = model.train().with_point(x, y);
    if (!(pivot > 1e-14 * (model.kernel().prior_variance() + model.noise_variance())))
        return fit(std::move(extended), model.kernel(), model.noise_variance());

    GpModel m;
    m.kernel_ = model.kernel();
    m.noise_variance_ = model.noise_variance();
    m.jitter_ = model.jitter();
    m.train_ = std::move(extended);
    m.chol_ = Eigen::MatrixXd::Zero(n + 1, n + 1);
    m.chol_.topLeftCorner(n, n) = model.chol();
    m.chol_.block(n, 0, 1, n) = l.transpose();
    m.chol_(n, n) = std::sqrt(pivot);
    m.finish();
    return m;
}

struct HyperparameterOptions {
    int restarts = 5;
    std::uint64_t seed = 0;
    /// When set, the noise variance is held at this value instead of being learned.
    std::optional<double> fixed_noise_variance;
    int max_evaluations = 400; // per local search
    /// Replaces the random start of the first restart (log-space warm start).
    std::optional<KernelSpec> warm_kernel;
    std::optional<double> warm_noise_variance;
};

/// Multi-restart Nelder-Mead over log hyperparameters maximizing the log
/// marginal likelihood. Starting points are log-uniform in [1e-2, 1e2]
/// (noise: log-uniform inside its bounds). Deterministic for a given seed.
inline GpModel optimize_hyperparameters(const Dataset& train, const KernelSpec& family,
                                        const HyperparameterOptions& options)
{
    train.validate();
    family.validate();
    if (train.size() < 2)
        throw PreconditionError("optimize_hyperparameters: at least two training points are required");
    if (options.restarts < 1)
        throw PreconditionError("optimize_hyperparameters: restarts must be >= 1");

    const bool learn_noise = !options.fixed_noise_variance.has_value();
    if (!learn_noise && !(*options.fixed_noise_variance >= 0.0))
        throw InputError("optimize_hyperparameters: fixed noise variance must be non-negative");

    std::vector<double> lower, upper;
    for (const auto& b : hyperparameter_bounds(family)) {
        lower.push_back(std::log(b.lower));
        upper.push_back(std::log(b.upper));
    }
    const std::size_t n_kernel = lower.size();
    if (learn_noise) {
        lower.push_back(std::log(hyper_bounds::noise_variance.lower));
        upper.push_back(std::log(hyper_bounds::noise_variance.upper));
    }
    if (lower.empty())
        return fit(train, family, options.fixed_noise_variance.value_or(0.0));

    const Eigen::MatrixXd sq_dist = squared_distances(train.X);
    const double n = static_cast<double>(train.size());
    Eigen::MatrixXd gram(train.size(), train.size());
    Eigen::MatrixXd chol;
    Eigen::VectorXd w;

    auto negative_lml = [&](const std::vector<double>& p) {
        const KernelSpec spec =
            with_log_hyperparameters(family, std::span<const double>(p.data(), n_kernel));
        const double noise = learn_noise ? std::exp(p[n_kernel]) : *options.fixed_noise_variance;
        // The factorization reads only the lower triangle.
        for (Eigen::Index j = 0; j < gram.cols(); ++j)
            for (Eigen::Index i = j; i < gram.rows(); ++i)
                gram(i, j) = spec(sq_dist(i, j));
        if (!detail::factorize(gram, noise, chol))
            return std::numeric_limits<double>::infinity();
        w = chol.triangularView<Eigen::Lower>().solve(train.y);
        // yT K^-1 y = |L^-1 y|^2
        const double lml = -0.5 * w.squaredNorm() - chol.diagonal().array().log().sum() -
                           0.5 * n * std::log(2.0 * std::numbers::pi);
        return -lml;
    };

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double lo = std::log(1e-2), hi = std::log(1e2);

    detail::NelderMeadOptions nm;
    nm.max_evaluations = options.max_evaluations;

    std::optional<detail::NelderMeadResult> best;
    for (int r = 0; r < options.restarts; ++r) {
        std::vector<double> start(lower.size());
        for (std::size_t i = 0; i < n_kernel; ++i)
            start[i] = std::clamp(lo + (hi - lo) * unit(rng), lower[i], upper[i]);
        if (learn_noise)
            start[n_kernel] = lower[n_kernel] + (upper[n_kernel] - lower[n_kernel]) * unit(rng);
        if (r == 0 && options.warm_kernel) {
            const auto warm = log_hyperparameters(*options.warm_kernel);
            if (warm.size() == n_kernel) {
                for (std::size_t i = 0; i < n_kernel; ++i)
                    start[i] = std::clamp(warm[i], lower[i], upper[i]);
                if (learn_noise && options.warm_noise_variance && *options.warm_noise_variance > 0.0)
                    start[n_kernel] = std::clamp(std::log(*options.warm_noise_variance),
                                                 lower[n_kernel], upper[n_kernel]);
            }
        }
        auto result = detail::nelder_mead(negative_lml, std::move(start), lower, upper, nm);
        if (std::isfinite(result.value) && (!best || result.value < best->value))
            best = std::move(result);
    }
    if (!best)
        throw OptimizationError("optimize_hyperparameters: every restart failed to factorize");

    const KernelSpec spec =
        with_log_hyperparameters(family, std::span<const double>(best->x.data(), n_kernel));
    const double noise = learn_noise ? std::exp(best->x[n_kernel]) : *options.fixed_noise_variance;
    return fit_with_gram(train, spec, noise, apply_kernel(spec, sq_dist));
}

inline GpModel optimize_hyperparameters(const Dataset& train, const KernelSpec& family, int restarts,
                                        std::uint64_t seed)
{
    HyperparameterOptions options;
    options.restarts = restarts;
    options.seed = seed;
    return optimize_hyperparameters(train, family, options);
}

/// Returns a new model whose training set is the old one plus (x, y). With
/// `refit_hyperparameters` the hyperparameters are re-optimized (warm-started
/// from the current ones) using `options`.
inline GpModel update_with_observation(const GpModel& model, const Eigen::VectorXd& x, double y,
                                       bool refit_hyperparameters,
                                       const HyperparameterOptions& options = {})
{
    if (!refit_hyperparameters)
        return update_with_observation_fixed(model, x, y);
    if (x.size() != model.dim())
        throw InputError("update_with_observation: dimension mismatch");
    if (!std::isfinite(y))
        throw InputError("update_with_observation: non-finite observation");
    HyperparameterOptions opts = options;
    if (!opts.warm_kernel) {
        opts.warm_kernel = model.kernel();
        opts.warm_noise_variance = model.noise_variance();
    }
    return optimize_hyperparameters(model.train().with_point(x, y), model.kernel(), opts);
}

} // namespace casmart
