#pragma once

// Classical acquisition functions used as baselines. All scores are
// "larger is better" and computed on the standardized response scale.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "casmart/errors.hpp"
#include "casmart/gp.hpp"
#include "casmart/normal.hpp"

namespace casmart {

enum class AcquisitionKind { ei, pi, ucb, mv };
enum class Direction { maximize, minimize };

struct AcquisitionStrategy {
    AcquisitionKind kind = AcquisitionKind::ei;
    double kappa = 2.0; // UCB only
    Direction direction = Direction::maximize;

    void validate() const
    {
        if (kind == AcquisitionKind::ucb && !(kappa > 0.0))
            throw InputError("acquisition: UCB kappa must be positive");
    }
};

inline double expected_improvement(const Prediction& pred, double f_best) noexcept
{
    const double delta = pred.mean - f_best;
    if (pred.std <= 0.0)
        return std::max(0.0, delta);
    const double z = delta / pred.std;
    return std::max(0.0, delta * std_normal_cdf(z) + pred.std * std_normal_pdf(z));
}

inline double probability_of_improvement(const Prediction& pred, double f_best) noexcept
{
    if (pred.std <= 0.0)
        return pred.mean > f_best ? 1.0 : 0.0;
    return std_normal_cdf((pred.mean - f_best) / pred.std);
}

inline double upper_confidence_bound(const Prediction& pred, double kappa)
{
    if (!(kappa > 0.0))
        throw InputError("upper_confidence_bound: kappa must be positive");
    return pred.mean + kappa * pred.std;
}

/// Maximum variance: pure uncertainty sampling.
inline double max_variance(const Prediction& pred) noexcept { return pred.std * pred.std; }

inline double acquisition_score(const AcquisitionStrategy& s, Prediction pred, double f_best)
{
    if (s.direction == Direction::minimize) {
        pred.mean = -pred.mean;
        f_best = -f_best;
    }
    switch (s.kind) {
    case AcquisitionKind::ei:
        return expected_improvement(pred, f_best);
    case AcquisitionKind::pi:
        return probability_of_improvement(pred, f_best);
    case AcquisitionKind::ucb:
        return upper_confidence_bound(pred, s.kappa);
    case AcquisitionKind::mv:
        return max_variance(pred);
    }
    return 0.0;
}

/// Index of the largest score; ties go to the lowest index.
inline Eigen::Index argmax_first(const std::vector<double>& scores)
{
    if (scores.empty())
        throw InputError("argmax: empty score list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best])
            best = i;
    return static_cast<Eigen::Index>(best);
}

struct AcquisitionChoice {
    Eigen::Index index = 0;
    Eigen::VectorXd point;
    double score = 0.0;
};

/// Scores every candidate row (in the model's input space) and returns the best one.
inline AcquisitionChoice argmax_acquisition(const GpModel& model, const Eigen::MatrixXd& candidates,
                                            const AcquisitionStrategy& strategy, double f_best)
{
    if (candidates.rows() == 0)
        throw InputError("argmax_acquisition: empty candidate list");
    strategy.validate();
    const auto preds = model.predict(candidates);
    std::vector<double> scores(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        scores[i] = acquisition_score(strategy, preds[i], f_best);
    AcquisitionChoice c;
    c.index = argmax_first(scores);
    c.point = candidates.row(c.index).transpose();
    c.score = scores[static_cast<std::size_t>(c.index)];
    return c;
}

inline AcquisitionKind parse_acquisition(std::string_view name)
{
    if (name == "ei")
        return AcquisitionKind::ei;
    if (name == "pi")
        return AcquisitionKind::pi;
    if (name == "ucb")
        return AcquisitionKind::ucb;
    if (name == "mv")
        return AcquisitionKind::mv;
    throw ConfigError("unknown acquisition '" + std::string(name) + "'");
}

inline std::string_view to_string(AcquisitionKind k) noexcept
{
    switch (k) {
    case AcquisitionKind::ei:
        return "ei";
    case AcquisitionKind::pi:
        return "pi";
    case AcquisitionKind::ucb:
        return "ucb";
    case AcquisitionKind::mv:
        return "mv";
    }
    return "?";
}

} // namespace casmart
