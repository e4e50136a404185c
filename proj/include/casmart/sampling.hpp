#pragma once

// Search spaces, space-filling candidate generation, maximin selection and the
// local perturbation used to verify and exploit surprising observations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "casmart/errors.hpp"
#include "casmart/kernels.hpp"
#include "casmart/sobol.hpp"

namespace casmart {

/// A continuous box or a finite pool of candidate points. Points are always
/// given in original units; `to_unit` maps them onto the unit hypercube used
/// by the surrogate (pool ranges come from the pool's per-dimension min/max).
class SearchSpace {
public:
    enum class Mode { continuous, pool };

    static SearchSpace continuous(Eigen::VectorXd lower, Eigen::VectorXd upper)
    {
        if (lower.size() != upper.size() || lower.size() == 0)
            throw InputError("search space: bounds must be non-empty and of equal dimension");
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
                throw InputError("search space: lower bound must be below upper bound");
        SearchSpace s;
        s.mode_ = Mode::continuous;
        s.lower_ = std::move(lower);
        s.upper_ = std::move(upper);
        return s;
    }

    static SearchSpace pool(Eigen::MatrixXd points)
    {
        if (points.rows() == 0 || points.cols() == 0)
            throw InputError("search space: empty pool");
        Eigen::VectorXd lo = points.colwise().minCoeff().transpose();
        Eigen::VectorXd hi = points.colwise().maxCoeff().transpose();
        return pool(std::move(points), std::move(lo), std::move(hi));
    }

    /// Pool normalized with externally supplied per-dimension ranges, e.g. the
    /// range of the pool together with an initial design drawn from elsewhere.
    static SearchSpace pool(Eigen::MatrixXd points, Eigen::VectorXd lower, Eigen::VectorXd upper)
    {
        if (points.rows() == 0 || points.cols() == 0)
            throw InputError("search space: empty pool");
        if (!points.allFinite() || !lower.allFinite() || !upper.allFinite())
            throw InputError("search space: non-finite pool point or range");
        if (lower.size() != points.cols() || upper.size() != points.cols())
            throw InputError("search space: range dimension differs from the pool");
        SearchSpace s;
        s.mode_ = Mode::pool;
        s.lower_ = std::move(lower);
        s.upper_ = std::move(upper);
        s.points_ = std::move(points);
        s.available_.assign(static_cast<std::size_t>(s.points_.rows()), true);
        s.n_available_ = s.points_.rows();
        const Eigen::MatrixXd unit = s.to_unit_rows(s.points_);
        for (Eigen::Index i = 0; i < unit.rows(); ++i)
            for (Eigen::Index j = 0; j < i; ++j)
                if (squared_distance(unit.row(i).transpose(), unit.row(j).transpose()) == 0.0)
                    throw InputError("search space: pool points must be pairwise distinct");
        return s;
    }

    Mode mode() const noexcept { return mode_; }
    bool is_pool() const noexcept { return mode_ == Mode::pool; }
    Eigen::Index dim() const noexcept { return lower_.size(); }
    const Eigen::VectorXd& lower() const noexcept { return lower_; }
    const Eigen::VectorXd& upper() const noexcept { return upper_; }

    Eigen::VectorXd range() const
    {
        Eigen::VectorXd r = upper_ - lower_;
        for (Eigen::Index i = 0; i < r.size(); ++i)
            if (!(r[i] > 0.0))
                r[i] = 1.0;
        return r;
    }

    Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const
    {
        check_dim(x);
        return ((x - lower_).array() / range().array()).matrix();
    }

    Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const
    {
        check_dim(u);
        return lower_ + (u.array() * range().array()).matrix();
    }

    Eigen::MatrixXd to_unit_rows(const Eigen::MatrixXd& x) const
    {
        const Eigen::RowVectorXd lo = lower_.transpose();
        const Eigen::RowVectorXd r = range().transpose();
        return ((x.rowwise() - lo).array().rowwise() / r.array()).matrix();
    }

    Eigen::MatrixXd from_unit_rows(const Eigen::MatrixXd& u) const
    {
        const Eigen::RowVectorXd r = range().transpose();
        return (u.array().rowwise() * r.array()).matrix().rowwise() + lower_.transpose();
    }

    bool contains(const Eigen::VectorXd& x) const
    {
        if (x.size() != dim())
            return false;
        if (mode_ == Mode::pool)
            return find_point(x).has_value();
        return ((x - lower_).array() >= 0.0).all() && ((upper_ - x).array() >= 0.0).all();
    }

    // -- pool bookkeeping ---------------------------------------------------

    const Eigen::MatrixXd& points() const noexcept { return points_; }
    Eigen::Index available_count() const noexcept { return n_available_; }
    bool is_available(Eigen::Index i) const { return available_.at(static_cast<std::size_t>(i)); }

    std::vector<Eigen::Index> available_indices() const
    {
        std::vector<Eigen::Index> out;
        for (std::size_t i = 0; i < available_.size(); ++i)
            if (available_[i])
                out.push_back(static_cast<Eigen::Index>(i));
        return out;
    }

    void mark_used(Eigen::Index i)
    {
        auto&& slot = available_.at(static_cast<std::size_t>(i));
        if (slot) {
            slot = false;
            --n_available_;
        }
    }

    std::optional<Eigen::Index> find_point(const Eigen::VectorXd& x) const
    {
        for (Eigen::Index i = 0; i < points_.rows(); ++i)
            if (points_.row(i).transpose() == x)
                return i;
        return std::nullopt;
    }

    /// Nearest still-available pool point to a unit-cube location; ties go to
    /// the lowest index.
    Eigen::Index nearest_available(const Eigen::VectorXd& u) const
    {
        if (n_available_ == 0)
            throw ExhaustionError("search space: candidate pool exhausted");
        const Eigen::MatrixXd unit = to_unit_rows(points_);
        Eigen::Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < unit.rows(); ++i) {
            if (!available_[static_cast<std::size_t>(i)])
                continue;
            const double d = squared_distance(unit.row(i).transpose(), u);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

private:
    void check_dim(const Eigen::VectorXd& x) const
    {
        if (x.size() != dim())
            throw InputError("search space: dimension mismatch");
    }

    Mode mode_ = Mode::continuous;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    Eigen::MatrixXd points_;
    std::vector<bool> available_;
    Eigen::Index n_available_ = 0;
};

/// Sobol points skip..skip+n-1 mapped onto the bounds of a continuous space.
inline Eigen::MatrixXd sobol(const SearchSpace& space, std::size_t n, std::uint64_t skip)
{
    if (space.is_pool())
        throw InputError("sobol: requires a continuous search space");
    if (n < 1)
        throw InputError("sobol: n must be >= 1");
    return space.from_unit_rows(sobol_unit(static_cast<int>(space.dim()), n, skip));
}

// ---------------------------------------------------------------------------
// Exact nearest-neighbour distances via a ball tree.

class BallTree {
public:
    explicit BallTree(Eigen::MatrixXd points, Eigen::Index leaf_size = 8)
        : points_(std::move(points)), leaf_size_(std::max<Eigen::Index>(leaf_size, 1))
    {
        if (points_.rows() == 0)
            throw InputError("ball tree: no points");
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(points_.rows()));
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
        order_ = idx;
        root_ = build(0, static_cast<Eigen::Index>(order_.size()));
    }

    /// Smallest squared distance from q to any stored point. The returned value
    /// is computed with `squared_distance`, so it is bit-identical to a brute
    /// force scan.
    double nearest_squared_distance(const Eigen::VectorXd& q) const
    {
        double best = std::numeric_limits<double>::infinity();
        search(*root_, q, best);
        return best;
    }

    Eigen::Index size() const noexcept { return points_.rows(); }

private:
    struct Node {
        Eigen::VectorXd center;
        double radius = 0.0;
        Eigen::Index begin = 0, end = 0;
        std::unique_ptr<Node> left, right;
    };

    std::unique_ptr<Node> build(Eigen::Index begin, Eigen::Index end)
    {
        auto node = std::make_unique<Node>();
        node->begin = begin;
        node->end = end;
        node->center = Eigen::VectorXd::Zero(points_.cols());
        for (Eigen::Index i = begin; i < end; ++i)
            node->center += points_.row(order_[static_cast<std::size_t>(i)]).transpose();
        node->center /= static_cast<double>(end - begin);
        for (Eigen::Index i = begin; i < end; ++i)
            node->radius = std::max(
                node->radius, (points_.row(order_[static_cast<std::size_t>(i)]).transpose() - node->center).norm());
        node->radius = node->radius * (1.0 + 1e-12) + 1e-300;

        if (end - begin <= leaf_size_)
            return node;

        Eigen::Index split_dim = 0;
        double widest = -1.0;
        for (Eigen::Index d = 0; d < points_.cols(); ++d) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (Eigen::Index i = begin; i < end; ++i) {
                const double v = points_(order_[static_cast<std::size_t>(i)], d);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > widest) {
                widest = hi - lo;
                split_dim = d;
            }
        }
        const Eigen::Index mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](Eigen::Index a, Eigen::Index b) {
                             return points_(a, split_dim) < points_(b, split_dim);
                         });
        node->left = build(begin, mid);
        node->right = build(mid, end);
        return node;
    }

    void search(const Node& node, const Eigen::VectorXd& q, double& best) const
    {
        const double gap = (q - node.center).norm() - node.radius;
        if (gap > 0.0 && gap * gap > best * (1.0 + 1e-9))
            return;
        if (!node.left) {
            for (Eigen::Index i = node.begin; i < node.end; ++i)
                best = std::min(best, squared_distance(points_.row(order_[static_cast<std::size_t>(i)]).transpose(), q));
            return;
        }
        const double dl = (q - node.left->center).norm();
        const double dr = (q - node.right->center).norm();
        if (dl <= dr) {
            search(*node.left, q, best);
            search(*node.right, q, best);
        } else {
            search(*node.right, q, best);
            search(*node.left, q, best);
        }
    }

    Eigen::MatrixXd points_;
    Eigen::Index leaf_size_;
    std::vector<Eigen::Index> order_;
    std::unique_ptr<Node> root_;
};

inline constexpr Eigen::Index maximin_tree_threshold = 32;

/// Row index of the candidate whose nearest sampled point is farthest away.
/// Ties go to the lowest candidate index.
inline Eigen::Index maximin_index(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& sampled)
{
    if (candidates.rows() == 0 || sampled.rows() == 0)
        throw InputError("maximin: candidates and sampled points must be non-empty");
    if (candidates.cols() != sampled.cols())
        throw InputError("maximin: dimension mismatch");

    std::optional<BallTree> tree;
    if (sampled.rows() >= maximin_tree_threshold)
        tree.emplace(sampled);

    Eigen::Index best = 0;
    double best_d = -1.0;
    for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
        const Eigen::VectorXd c = candidates.row(i).transpose();
        double d;
        if (tree) {
            d = tree->nearest_squared_distance(c);
        } else {
            d = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < sampled.rows(); ++j)
                d = std::min(d, squared_distance(sampled.row(j).transpose(), c));
        }
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

inline Eigen::VectorXd maximin_next(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& sampled)
{
    return candidates.row(maximin_index(candidates, sampled)).transpose();
}

struct PerturbedPoint {
    Eigen::VectorXd x;                    // original units
    std::optional<Eigen::Index> pool_index; // set in pool mode
};

/// x + eps with eps ~ N(0, sigma^2 I) in unit-cube coordinates. Continuous
/// spaces clip to the bounds; pools snap to the nearest available point.
inline PerturbedPoint perturb(const Eigen::VectorXd& x, double sigma, const SearchSpace& space,
                              std::mt19937_64& rng)
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw InputError("perturb: sigma must be finite and non-negative");
    if (x.size() != space.dim())
        throw InputError("perturb: dimension mismatch");
    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::VectorXd eps(x.size());
    for (Eigen::Index i = 0; i < eps.size(); ++i)
        eps[i] = sigma * noise(rng);

    PerturbedPoint out;
    if (!space.is_pool()) {
        out.x = (x + (eps.array() * space.range().array()).matrix())
                    .cwiseMax(space.lower())
                    .cwiseMin(space.upper());
        return out;
    }
    const Eigen::Index idx = space.nearest_available(space.to_unit(x) + eps);
    out.pool_index = idx;
    out.x = space.points().row(idx).transpose();
    return out;
}

} // namespace casmart
