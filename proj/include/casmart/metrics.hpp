#pragma once

// Accuracy metrics for probabilistic surrogates and the replication summary
// statistics (mean with a Student-t confidence interval).

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "casmart/errors.hpp"
#include "casmart/gp.hpp"
#include "casmart/normal.hpp"

namespace casmart {

inline double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual)
{
    if (predicted.size() != actual.size())
        throw InputError("rmse: length mismatch");
    if (predicted.size() == 0)
        throw InputError("rmse: empty input");
    return std::sqrt((predicted - actual).squaredNorm() / static_cast<double>(predicted.size()));
}

/// Closed-form CRPS of N(mu, sigma^2) against the outcome y.
inline double crps_gaussian(const Prediction& pred, double y)
{
    if (!(pred.std >= 0.0))
        throw InputError("crps_gaussian: negative standard deviation");
    if (pred.std == 0.0)
        return std::abs(y - pred.mean);
    const double z = (y - pred.mean) / pred.std;
    const double v = pred.std * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) -
                                 1.0 / std::sqrt(std::numbers::pi));
    return std::max(v, 0.0);
}

inline double mean_crps(const std::vector<Prediction>& preds, const Eigen::VectorXd& actual)
{
    if (static_cast<Eigen::Index>(preds.size()) != actual.size())
        throw InputError("mean_crps: length mismatch");
    if (preds.empty())
        throw InputError("mean_crps: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        s += crps_gaussian(preds[i], actual[static_cast<Eigen::Index>(i)]);
    return s / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// Student-t quantiles via the regularized incomplete beta function.

namespace detail {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
inline double beta_continued_fraction(double a, double b, double x)
{
    constexpr int max_iter = 500;
    constexpr double eps = 1e-15;
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps)
            break;
    }
    return h;
}

} // namespace detail

inline double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0))
        throw InputError("incomplete beta: parameters must be positive");
    if (!(x >= 0.0 && x <= 1.0))
        throw InputError("incomplete beta: x must lie in [0, 1]");
    if (x == 0.0 || x == 1.0)
        return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

inline double student_t_cdf(double t, double df)
{
    if (!(df > 0.0))
        throw InputError("student_t_cdf: degrees of freedom must be positive");
    if (std::isinf(t))
        return t > 0 ? 1.0 : 0.0;
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

/// Inverse of the Student-t CDF by bracketed bisection.
inline double student_t_quantile(double p, double df)
{
    if (!(p > 0.0 && p < 1.0))
        throw InputError("student_t_quantile: p must lie in (0, 1)");
    if (!(df > 0.0))
        throw InputError("student_t_quantile: degrees of freedom must be positive");
    if (p == 0.5)
        return 0.0;
    if (p < 0.5)
        return -student_t_quantile(1.0 - p, df);
    double lo = 0.0, hi = 1.0;
    while (student_t_cdf(hi, df) < p)
        hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct MeanCi {
    double mean = 0.0;
    double half_width = 0.0;
};

/// Sample mean and the half-width of its two-sided t confidence interval.
inline MeanCi mean_ci(const std::vector<double>& values, double level = 0.95)
{
    if (values.size() < 2)
        throw InputError("mean_ci: at least two values are required");
    if (!(level > 0.0 && level < 1.0))
        throw InputError("mean_ci: level must lie in (0, 1)");
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values)
        mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const double t = student_t_quantile(0.5 * (1.0 + level), n - 1.0);
    return {mean, t * sd / std::sqrt(n)};
}

} // namespace casmart
