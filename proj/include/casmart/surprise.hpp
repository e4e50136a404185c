#pragma once

// Surprise measures for a single observation (x, y) under a fitted GP:
// Shannon surprise, Bayesian surprise (prior-to-posterior KL), and the
// Confidence-Adjusted Surprise that combines Shannon surprise, a KL against a
// flat reference belief, a confidence correction and a flat-prior adjustment.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "casmart/errors.hpp"
#include "casmart/gp.hpp"
#include "casmart/normal.hpp"

namespace casmart {

struct GaussianBelief {
    double mean = 0.0;
    double std = 1.0;
};

/// Wide reference Gaussian in standardized response space.
struct FlatPrior {
    double mean = 0.0;
    double std = 10.0;

    void validate() const
    {
        if (!std::isfinite(mean) || !(std > 0.0) || !std::isfinite(std))
            throw InputError("flat prior: std must be positive and finite");
    }

    /// Builds a flat prior and checks it is at least as wide as any latent
    /// posterior the kernel can produce (posterior variance <= k(x, x)).
    static FlatPrior checked(double mean, double std, double max_prior_variance)
    {
        FlatPrior f{mean, std};
        f.validate();
        if (std * std < max_prior_variance)
            throw ConfigError("flat prior: std " + std::to_string(std) +
                              " is narrower than the kernel's largest prior std " +
                              std::to_string(std::sqrt(max_prior_variance)));
        return f;
    }
};

struct SurpriseBreakdown {
    double shannon = 0.0;
    double bayesian_flat = 0.0;
    double confidence_correction = 0.0;
    double adjustment = 0.0;
    double cas = 0.0;
};

/// Floor applied to predictive standard deviations before they enter a log.
inline constexpr double posterior_std_floor = 1e-8;

/// -log N(y; mu, sigma^2 + noise).
inline double shannon_surprise(const Prediction& pred, double noise_variance, double y)
{
    const double total = pred.std * pred.std + noise_variance;
    if (!(total > 0.0))
        throw DegenerateDistributionError("shannon_surprise: zero total predictive variance");
    const double r = y - pred.mean;
    return 0.5 * std::log(2.0 * std::numbers::pi * total) + r * r / (2.0 * total);
}

/// Closed-form Gaussian KL(posterior || prior).
inline double bayesian_surprise(const GaussianBelief& prior, const GaussianBelief& posterior)
{
    if (!(prior.std > 0.0) || !(posterior.std > 0.0))
        throw InputError("bayesian_surprise: standard deviations must be positive");
    const double dm = posterior.mean - prior.mean;
    const double value = std::log(prior.std / posterior.std) +
                         (posterior.std * posterior.std + dm * dm) / (2.0 * prior.std * prior.std) - 0.5;
    return std::max(value, 0.0);
}

inline double flat_bayesian_surprise(const GaussianBelief& posterior, const FlatPrior& flat)
{
    return bayesian_surprise(GaussianBelief{flat.mean, flat.std}, posterior);
}

/// Negative differential entropy of N(., sigma^2).
inline double confidence_correction(double sigma_prior)
{
    if (!(sigma_prior > 0.0))
        throw InputError("confidence_correction: sigma must be positive");
    return -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma_prior * sigma_prior);
}

inline double flat_adjustment(const FlatPrior& flat)
{
    flat.validate();
    const double tail = std_normal_sf(flat.mean / flat.std);
    if (!(tail > 0.0))
        throw DegenerateDistributionError("flat_adjustment: flat prior tail probability underflows");
    return -std::log(tail);
}

/// Latent predictive at x after absorbing (x, y) with hyperparameters frozen.
inline Prediction posterior_after(const GpModel& model, const Eigen::VectorXd& x, double y)
{
    return update_with_observation(model, x, y, false).predict(x);
}

inline SurpriseBreakdown cas(const GpModel& model, const Eigen::VectorXd& x, double y,
                             const FlatPrior& flat)
{
    if (!std::isfinite(y))
        throw InputError("cas: observation must be finite");
    const Prediction prior = model.predict(x);
    const Prediction post = posterior_after(model, x, y);

    SurpriseBreakdown b;
    b.shannon = shannon_surprise(prior, model.noise_variance(), y);
    b.bayesian_flat = flat_bayesian_surprise(
        GaussianBelief{post.mean, std::max(post.std, posterior_std_floor)}, flat);
    b.confidence_correction = confidence_correction(std::max(prior.std, posterior_std_floor));
    b.adjustment = flat_adjustment(flat);
    b.cas = b.shannon + b.bayesian_flat + b.confidence_correction - b.adjustment;
    return b;
}

enum class SurpriseMeasure { cas, shannon, bayesian };

inline SurpriseMeasure parse_surprise_measure(std::string_view name)
{
    if (name == "cas")
        return SurpriseMeasure::cas;
    if (name == "shannon")
        return SurpriseMeasure::shannon;
    if (name == "bayesian")
        return SurpriseMeasure::bayesian;
    throw ConfigError("unknown surprise measure '" + std::string(name) + "'");
}

inline std::string_view to_string(SurpriseMeasure m) noexcept
{
    switch (m) {
    case SurpriseMeasure::cas:
        return "cas";
    case SurpriseMeasure::shannon:
        return "shannon";
    case SurpriseMeasure::bayesian:
        return "bayesian";
    }
    return "?";
}

/// Value of `measure` for observing y at x. The Bayesian measure uses the
/// model's own pre-update predictive at x as the reference belief.
inline double surprise_value(SurpriseMeasure measure, const GpModel& model, const Eigen::VectorXd& x,
                             double y, const FlatPrior& flat)
{
    switch (measure) {
    case SurpriseMeasure::cas:
        return cas(model, x, y, flat).cas;
    case SurpriseMeasure::shannon:
        return shannon_surprise(model.predict(x), model.noise_variance(), y);
    case SurpriseMeasure::bayesian: {
        const Prediction prior = model.predict(x);
        const Prediction post = posterior_after(model, x, y);
        return bayesian_surprise(GaussianBelief{prior.mean, std::max(prior.std, posterior_std_floor)},
                                 GaussianBelief{post.mean, std::max(post.std, posterior_std_floor)});
    }
    }
    return 0.0;
}

/// Measure values at the two edges of the central credible interval of the
/// observable y at x (latent variance plus noise).
///
/// The CAS flat-prior term depends on the posterior mean's distance from the
/// flat mean, so CAS is not exactly symmetric about mu(x). Comparing y against
/// the edge on its own side keeps "value > threshold" equivalent to "y lies
/// outside the interval".
struct SurpriseThreshold {
    double center = 0.0;     // predictive mean at x
    double half_width = 0.0; // z * sigma_total
    double upper = 0.0;      // measure at center + half_width
    double lower = 0.0;      // measure at center - half_width

    double for_observation(double y) const noexcept { return y >= center ? upper : lower; }
};

inline SurpriseThreshold surprise_threshold(SurpriseMeasure measure, const GpModel& model,
                                            const Eigen::VectorXd& x, const FlatPrior& flat,
                                            double credible_level)
{
    if (!(credible_level > 0.0 && credible_level < 1.0))
        throw InputError("surprise_threshold: credible level must lie in (0, 1)");
    const Prediction pred = model.predict(x);
    const double z = std_normal_quantile(0.5 * (1.0 + credible_level));
    SurpriseThreshold t;
    t.center = pred.mean;
    t.half_width = z * std::sqrt(pred.std * pred.std + model.noise_variance());
    t.upper = surprise_value(measure, model, x, t.center + t.half_width, flat);
    t.lower = surprise_value(measure, model, x, t.center - t.half_width, flat);
    return t;
}

inline SurpriseThreshold cas_threshold(const GpModel& model, const Eigen::VectorXd& x,
                                       const FlatPrior& flat, double credible_level)
{
    return surprise_threshold(SurpriseMeasure::cas, model, x, flat, credible_level);
}

struct SurpriseEvaluation {
    SurpriseMeasure measure = SurpriseMeasure::cas;
    double value = 0.0;     // active measure
    double threshold = 0.0; // edge on the observation's side
    bool flagged = false;
    SurpriseBreakdown breakdown; // CAS components, always filled
};

inline SurpriseEvaluation evaluate_surprise(SurpriseMeasure measure, const GpModel& model,
                                            const Eigen::VectorXd& x, double y, const FlatPrior& flat,
                                            double credible_level)
{
    SurpriseEvaluation e;
    e.measure = measure;
    e.breakdown = cas(model, x, y, flat);
    e.value = measure == SurpriseMeasure::cas ? e.breakdown.cas
                                              : surprise_value(measure, model, x, y, flat);
    e.threshold = surprise_threshold(measure, model, x, flat, credible_level).for_observation(y);
    e.flagged = e.value > e.threshold;
    return e;
}

} // namespace casmart
