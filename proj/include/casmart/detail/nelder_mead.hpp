#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace casmart::detail {

struct NelderMeadOptions {
    double initial_step = 0.5;
    int max_evaluations = 400;
    double f_tolerance = 1e-6; // spread of simplex values, relative
    double x_tolerance = 1e-3; // simplex diameter (log hyperparameters)
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

/// Box-constrained Nelder-Mead minimizer. Trial points are clamped into
/// [lower, upper]. Non-finite objective values are treated as +inf, so a
/// failing evaluation simply loses every comparison.
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& opt = {})
{
    const std::size_t n = x0.size();
    NelderMeadResult result;

    auto clamp = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i)
            x[i] = std::clamp(x[i], lower[i], upper[i]);
    };
    auto evaluate = [&](const std::vector<double>& x) {
        ++result.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    clamp(x0);
    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = simplex[i + 1];
        // Step away from the nearer bound so the vertex stays distinct after clamping.
        v[i] += (v[i] + opt.initial_step <= upper[i]) ? opt.initial_step : -opt.initial_step;
        clamp(v);
    }
    for (std::size_t i = 0; i <= n; ++i)
        values[i] = evaluate(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);

    while (result.evaluations < opt.max_evaluations) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[n - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                diameter = std::max(diameter, std::abs(simplex[i][k] - simplex[best][k]));
        const double spread = values[worst] - values[best];
        if (std::isfinite(spread) && spread <= opt.f_tolerance * (1.0 + std::abs(values[best])) &&
            diameter <= opt.x_tolerance)
            break;
        if (std::isfinite(spread) && spread == 0.0 && diameter <= opt.x_tolerance)
            break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst)
                continue;
            for (std::size_t k = 0; k < n; ++k)
                centroid[k] += simplex[i][k] / static_cast<double>(n);
        }

        for (std::size_t k = 0; k < n; ++k)
            trial[k] = centroid[k] + (centroid[k] - simplex[worst][k]);
        clamp(trial);
        const double f_reflect = evaluate(trial);

        if (f_reflect < values[best]) {
            for (std::size_t k = 0; k < n; ++k)
                trial2[k] = centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]);
            clamp(trial2);
            const double f_expand = evaluate(trial2);
            if (f_expand < f_reflect) {
                simplex[worst] = trial2;
                values[worst] = f_expand;
            } else {
                simplex[worst] = trial;
                values[worst] = f_reflect;
            }
            continue;
        }
        if (f_reflect < values[second]) {
            simplex[worst] = trial;
            values[worst] = f_reflect;
            continue;
        }

        const bool outside = f_reflect < values[worst];
        for (std::size_t k = 0; k < n; ++k)
            trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k])
                                : centroid[k] + 0.5 * (simplex[worst][k] - centroid[k]);
        clamp(trial2);
        const double f_contract = evaluate(trial2);
        if (f_contract < std::min(f_reflect, values[worst])) {
            simplex[worst] = trial2;
            values[worst] = f_contract;
            continue;
        }

        // shrink toward the best vertex
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best)
                continue;
            for (std::size_t k = 0; k < n; ++k)
                simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
            values[i] = evaluate(simplex[i]);
        }
    }

    const auto it = std::min_element(values.begin(), values.end());
    result.value = *it;
    result.x = simplex[static_cast<std::size_t>(it - values.begin())];
    return result;
}

} // namespace casmart::detail
