#pragma once

// Reference implementations used only by the tests. They avoid the library's
// code paths on purpose: kernels are re-derived from their textbook formulas,
// the GP posterior uses an explicit LU inverse instead of a Cholesky solve,
// and integrals go through Boost's adaptive Gauss-Kronrod rule.

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "casmart/kernels.hpp"

namespace oracle {

inline double kernel(const casmart::KernelSpec& k, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    using casmart::KernelKind;
    const double d = (a - b).norm();
    switch (k.kind) {
    case KernelKind::rbf:
        return k.signal_variance * std::exp(-d * d / (2.0 * k.length_scale * k.length_scale));
    case KernelKind::matern:
        if (k.nu == 1.5)
            return k.signal_variance * (1.0 + std::sqrt(3.0) * d / k.length_scale) *
                   std::exp(-std::sqrt(3.0) * d / k.length_scale);
        return k.signal_variance *
               (1.0 + std::sqrt(5.0) * d / k.length_scale + 5.0 * d * d / (3.0 * k.length_scale * k.length_scale)) *
               std::exp(-std::sqrt(5.0) * d / k.length_scale);
    case KernelKind::rational_quadratic:
        return k.signal_variance * std::pow(1.0 + d * d / (2.0 * k.alpha * k.length_scale * k.length_scale), -k.alpha);
    case KernelKind::constant:
        return k.constant_value;
    case KernelKind::product: {
        double v = 1.0;
        for (const auto& f : k.factors)
            v *= kernel(f, a, b);
        return v;
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline Eigen::MatrixXd gram(const casmart::KernelSpec& k, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B)
{
    Eigen::MatrixXd g(A.rows(), B.rows());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j)
            g(i, j) = kernel(k, A.row(i).transpose(), B.row(j).transpose());
    return g;
}

struct Posterior {
    double mean;
    double var;
};

/// Posterior through an explicit inverse of K + noise I.
inline Posterior gp_posterior(const casmart::KernelSpec& k, double noise, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& xq)
{
    Eigen::MatrixXd K = gram(k, X, X);
    K.diagonal().array() += noise;
    const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
    const Eigen::MatrixXd q = xq.transpose();
    const Eigen::VectorXd ks = gram(k, X, q).col(0);
    return {ks.dot(Kinv * y), kernel(k, xq, xq) - ks.dot(Kinv * ks)};
}

inline double gaussian_pdf(double x, double mean, double sd)
{
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

inline double gaussian_cdf(double x, double mean, double sd)
{
    return 0.5 * std::erfc(-(x - mean) / (sd * std::numbers::sqrt2));
}

template <class F>
double integrate(F f, double a, double b)
{
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 6, 1e-12);
}

/// KL(p || q) by quadrature of p log(p / q) over p's effective support.
inline double kl_quadrature(double mp, double sp, double mq, double sq)
{
    auto f = [&](double x) {
        const double lp = -0.5 * std::pow((x - mp) / sp, 2) - std::log(sp);
        const double lq = -0.5 * std::pow((x - mq) / sq, 2) - std::log(sq);
        const double p = gaussian_pdf(x, mp, sp);
        return p * (lp - lq);
    };
    // Piecewise over the bulk of p keeps the adaptive rule honest.
    double total = 0.0;
    for (int k = -12; k < 12; ++k)
        total += integrate(f, mp + k * sp, mp + (k + 1) * sp);
    return total;
}

/// CRPS as the integral of (F(z) - 1{z >= y})^2.
inline double crps_quadrature(double mean, double sd, double y)
{
    auto below = [&](double z) { return std::pow(gaussian_cdf(z, mean, sd), 2); };
    auto above = [&](double z) { return std::pow(1.0 - gaussian_cdf(z, mean, sd), 2); };
    const double lo = std::min(y, mean) - 14.0 * sd;
    const double hi = std::max(y, mean) + 14.0 * sd;
    double total = 0.0;
    const int pieces = 32;
    for (int k = 0; k < pieces; ++k) {
        const double a = lo + (y - lo) * k / pieces, b = lo + (y - lo) * (k + 1) / pieces;
        total += integrate(below, a, b);
        const double c = y + (hi - y) * k / pieces, d = y + (hi - y) * (k + 1) / pieces;
        total += integrate(above, c, d);
    }
    return total;
}

inline Eigen::MatrixXd uniform_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = 0.0,
                                      double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = u(rng);
    return m;
}

/// A random kernel of every family in turn (index mod 8).
inline casmart::KernelSpec random_kernel(std::mt19937_64& rng, int which)
{
    using casmart::KernelSpec;
    std::uniform_real_distribution<double> amp(0.3, 3.0), len(0.2, 2.0), alpha(0.3, 5.0), c(0.3, 3.0);
    switch (which % 8) {
    case 0:
        return KernelSpec::rbf(amp(rng), len(rng));
    case 1:
        return KernelSpec::matern(1.5, amp(rng), len(rng));
    case 2:
        return KernelSpec::matern(2.5, amp(rng), len(rng));
    case 3:
        return KernelSpec::rational_quadratic(amp(rng), len(rng), alpha(rng));
    case 4:
        return KernelSpec::product({KernelSpec::rational_quadratic(amp(rng), len(rng), alpha(rng)),
                                    KernelSpec::constant(c(rng))});
    case 5:
        return KernelSpec::product({KernelSpec::matern(1.5, amp(rng), len(rng)), KernelSpec::rbf(amp(rng), len(rng))});
    case 6:
        return KernelSpec::product({KernelSpec::constant(c(rng)), KernelSpec::rbf(amp(rng), len(rng))});
    default:
        return KernelSpec::constant(c(rng));
    }
}

} // namespace oracle
