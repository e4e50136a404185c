#pragma once

// Isotropic stationary covariance functions. Every kernel here depends on its
// inputs only through the Euclidean distance, so evaluation is split into a
// squared-distance pass and a scalar profile.

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "casmart/errors.hpp"

namespace casmart {

enum class KernelKind { rbf, matern, rational_quadratic, constant, product };

/// Box (in natural units) applied to each hyperparameter during marginal
/// likelihood optimization.
struct ParameterBounds {
    double lower;
    double upper;
};

namespace hyper_bounds {
inline constexpr ParameterBounds amplitude{1e-4, 1e2};
inline constexpr ParameterBounds length_scale{1e-3, 1e3};
inline constexpr ParameterBounds alpha{1e-3, 1e3};
inline constexpr ParameterBounds noise_variance{1e-6, 1e-1};
} // namespace hyper_bounds

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double signal_variance = 1.0; // theta^2
    double length_scale = 1.0;
    double alpha = 1.0;           // rational quadratic mixture weight
    double nu = 2.5;              // Matern smoothness, 1.5 or 2.5
    double constant_value = 1.0;
    std::vector<KernelSpec> factors;

    static KernelSpec rbf(double signal_variance = 1.0, double length_scale = 1.0)
    {
        KernelSpec k;
        k.kind = KernelKind::rbf;
        k.signal_variance = signal_variance;
        k.length_scale = length_scale;
        k.validate();
        return k;
    }

    static KernelSpec matern(double nu, double signal_variance = 1.0, double length_scale = 1.0)
    {
        KernelSpec k;
        k.kind = KernelKind::matern;
        k.nu = nu;
        k.signal_variance = signal_variance;
        k.length_scale = length_scale;
        k.validate();
        return k;
    }

    static KernelSpec rational_quadratic(double signal_variance = 1.0, double length_scale = 1.0,
                                         double alpha = 1.0)
    {
        KernelSpec k;
        k.kind = KernelKind::rational_quadratic;
        k.signal_variance = signal_variance;
        k.length_scale = length_scale;
        k.alpha = alpha;
        k.validate();
        return k;
    }

    static KernelSpec constant(double value = 1.0)
    {
        KernelSpec k;
        k.kind = KernelKind::constant;
        k.constant_value = value;
        k.validate();
        return k;
    }

    static KernelSpec product(std::vector<KernelSpec> factors)
    {
        KernelSpec k;
        k.kind = KernelKind::product;
        k.factors = std::move(factors);
        k.validate();
        return k;
    }

    void validate() const
    {
        auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
        switch (kind) {
        case KernelKind::rational_quadratic:
            if (!positive(alpha))
                throw InputError("kernel: alpha must be positive");
            [[fallthrough]];
        case KernelKind::rbf:
        case KernelKind::matern:
            if (!positive(signal_variance))
                throw InputError("kernel: signal variance must be positive");
            if (!positive(length_scale))
                throw InputError("kernel: length scale must be positive");
            if (kind == KernelKind::matern && nu != 1.5 && nu != 2.5)
                throw InputError("kernel: Matern nu must be 1.5 or 2.5");
            break;
        case KernelKind::constant:
            if (!positive(constant_value))
                throw InputError("kernel: constant value must be positive");
            break;
        case KernelKind::product:
            if (factors.size() < 2)
                throw InputError("kernel: a product needs at least two factors");
            for (const auto& f : factors)
                f.validate();
            break;
        }
    }

    /// Covariance as a function of squared distance.
    double operator()(double sq_dist) const noexcept
    {
        switch (kind) {
        case KernelKind::rbf:
            return signal_variance * std::exp(-0.5 * sq_dist / (length_scale * length_scale));
        case KernelKind::matern: {
            const double r = std::sqrt(sq_dist) / length_scale;
            if (nu == 1.5) {
                const double s = std::sqrt(3.0) * r;
                return signal_variance * (1.0 + s) * std::exp(-s);
            }
            const double s = std::sqrt(5.0) * r;
            return signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
        }
        case KernelKind::rational_quadratic:
            return signal_variance *
                   std::pow(1.0 + sq_dist / (2.0 * alpha * length_scale * length_scale), -alpha);
        case KernelKind::constant:
            return constant_value;
        case KernelKind::product: {
            double v = 1.0;
            for (const auto& f : factors)
                v *= f(sq_dist);
            return v;
        }
        }
        return 0.0;
    }

    /// k(x, x).
    double prior_variance() const noexcept { return (*this)(0.0); }

    bool operator==(const KernelSpec&) const = default;
};

inline double squared_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                               const Eigen::Ref<const Eigen::VectorXd>& b) noexcept
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double eval_kernel(const KernelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x,
                          const Eigen::Ref<const Eigen::VectorXd>& x2)
{
    if (x.size() != x2.size())
        throw InputError("eval_kernel: dimension mismatch");
    return spec(squared_distance(x, x2));
}

/// Pairwise squared distances between the rows of `a` and the rows of `b`.
inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    if (a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols())
        throw InputError("squared_distances: dimension mismatch");
    Eigen::MatrixXd d(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            d(i, j) = squared_distance(a.row(i).transpose(), b.row(j).transpose());
    return d;
}

/// Symmetric case: fills the upper triangle and mirrors it.
inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a)
{
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        d(j, j) = 0.0;
        for (Eigen::Index i = 0; i < j; ++i) {
            d(i, j) = squared_distance(a.row(i).transpose(), a.row(j).transpose());
            d(j, i) = d(i, j);
        }
    }
    return d;
}

inline Eigen::MatrixXd apply_kernel(const KernelSpec& spec, const Eigen::MatrixXd& sq_dist)
{
    return sq_dist.unaryExpr([&spec](double s) { return spec(s); });
}

/// Covariance matrix between point lists given as rows. An empty side yields an
/// empty matrix of the consistent shape.
inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x,
                                     const Eigen::MatrixXd& x2)
{
    return apply_kernel(spec, squared_distances(x, x2));
}

inline Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& x)
{
    return apply_kernel(spec, squared_distances(x));
}

// ---------------------------------------------------------------------------
// Hyperparameter vector view.
//
// Free hyperparameters are exposed in a fixed depth-first order. Inside a
// product that contains a Constant factor, the amplitude of the other factors
// is held at its template value: the constant already carries the scale and a
// second amplitude would be unidentifiable.

namespace detail {

template <class Spec, class Visit>
void visit_hyperparameters(Spec& spec, bool amplitude_elsewhere, Visit&& visit)
{
    switch (spec.kind) {
    case KernelKind::rbf:
    case KernelKind::matern:
        if (!amplitude_elsewhere)
            visit(spec.signal_variance, hyper_bounds::amplitude);
        visit(spec.length_scale, hyper_bounds::length_scale);
        break;
    case KernelKind::rational_quadratic:
        if (!amplitude_elsewhere)
            visit(spec.signal_variance, hyper_bounds::amplitude);
        visit(spec.length_scale, hyper_bounds::length_scale);
        visit(spec.alpha, hyper_bounds::alpha);
        break;
    case KernelKind::constant:
        visit(spec.constant_value, hyper_bounds::amplitude);
        break;
    case KernelKind::product: {
        bool has_constant = amplitude_elsewhere;
        for (const auto& f : spec.factors)
            has_constant = has_constant || f.kind == KernelKind::constant;
        for (auto& f : spec.factors)
            visit_hyperparameters(f, has_constant && f.kind != KernelKind::constant, visit);
        break;
    }
    }
}

} // namespace detail

inline std::vector<double> log_hyperparameters(const KernelSpec& spec)
{
    std::vector<double> out;
    detail::visit_hyperparameters(spec, false,
                                  [&](const double& v, ParameterBounds) { out.push_back(std::log(v)); });
    return out;
}

inline std::vector<ParameterBounds> hyperparameter_bounds(const KernelSpec& spec)
{
    std::vector<ParameterBounds> out;
    detail::visit_hyperparameters(spec, false,
                                  [&](const double&, ParameterBounds b) { out.push_back(b); });
    return out;
}

inline KernelSpec with_log_hyperparameters(KernelSpec spec, std::span<const double> log_values)
{
    std::size_t i = 0;
    detail::visit_hyperparameters(spec, false, [&](double& v, ParameterBounds) {
        if (i >= log_values.size())
            throw InputError("with_log_hyperparameters: too few values");
        v = std::exp(log_values[i++]);
    });
    if (i != log_values.size())
        throw InputError("with_log_hyperparameters: too many values");
    return spec;
}

/// Largest k(x, x) reachable while hyperparameters stay inside their bounds.
inline double prior_variance_upper_bound(const KernelSpec& spec)
{
    KernelSpec top = spec;
    // Only amplitudes influence k(x, x), so pushing everything to its upper bound is harmless.
    detail::visit_hyperparameters(top, false, [](double& v, ParameterBounds b) { v = b.upper; });
    return top.prior_variance();
}

// ---------------------------------------------------------------------------
// Compact textual form used by the command line: "rbf", "matern32", "matern52",
// "rq", "constant", and products joined with '*', e.g. "rq*constant".

inline KernelSpec parse_kernel(std::string_view text)
{
    std::vector<KernelSpec> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t star = text.find('*', start);
        const std::string_view token =
            text.substr(start, star == std::string_view::npos ? std::string_view::npos : star - start);
        if (token == "rbf")
            parts.push_back(KernelSpec::rbf());
        else if (token == "matern32")
            parts.push_back(KernelSpec::matern(1.5));
        else if (token == "matern52")
            parts.push_back(KernelSpec::matern(2.5));
        else if (token == "rq")
            parts.push_back(KernelSpec::rational_quadratic());
        else if (token == "constant")
            parts.push_back(KernelSpec::constant());
        else
            throw ConfigError("unknown kernel '" + std::string(token) + "'");
        if (star == std::string_view::npos)
            break;
        start = star + 1;
    }
    if (parts.size() == 1)
        return parts.front();
    return KernelSpec::product(std::move(parts));
}

inline std::string kernel_name(const KernelSpec& spec)
{
    switch (spec.kind) {
    case KernelKind::rbf:
        return "rbf";
    case KernelKind::matern:
        return spec.nu == 1.5 ? "matern32" : "matern52";
    case KernelKind::rational_quadratic:
        return "rq";
    case KernelKind::constant:
        return "constant";
    case KernelKind::product: {
        std::string s;
        for (const auto& f : spec.factors) {
            if (!s.empty())
                s += '*';
            s += kernel_name(f);
        }
        return s;
    }
    }
    return {};
}

} // namespace casmart
