#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "casmart/sampling.hpp"
#include "oracles.hpp"

using namespace casmart;

namespace {

Eigen::Index brute_force_maximin(const Eigen::MatrixXd& cand, const Eigen::MatrixXd& sampled)
{
    Eigen::Index best = 0;
    double best_d = -1.0;
    for (Eigen::Index i = 0; i < cand.rows(); ++i) {
        double d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < sampled.rows(); ++j)
            d = std::min(d, (cand.row(i) - sampled.row(j)).squaredNorm());
        if (d > best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

SearchSpace unit_box(Eigen::Index d)
{
    return SearchSpace::continuous(Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d));
}

} // namespace

// --- Sobol --------------------------------------------------------------------

TEST(Sobol, OneDimensionalPrefix)
{
    const Eigen::MatrixXd p = sobol_unit(1, 4, 1);
    EXPECT_EQ(p(0, 0), 0.5);
    EXPECT_EQ(p(1, 0), 0.75);
    EXPECT_EQ(p(2, 0), 0.25);
    EXPECT_EQ(p(3, 0), 0.375);
}

TEST(Sobol, MatchesScipyReference)
{
    // scipy.stats.qmc.Sobol(d, scramble=False), indices 0..8 (d = 5).
    const double ref[9][5] = {
        {0.0, 0.0, 0.0, 0.0, 0.0},           {0.5, 0.5, 0.5, 0.5, 0.5},
        {0.75, 0.25, 0.25, 0.25, 0.75},      {0.25, 0.75, 0.75, 0.75, 0.25},
        {0.375, 0.375, 0.625, 0.875, 0.375}, {0.875, 0.875, 0.125, 0.375, 0.875},
        {0.625, 0.125, 0.875, 0.625, 0.625}, {0.125, 0.625, 0.375, 0.125, 0.125},
        {0.1875, 0.3125, 0.9375, 0.4375, 0.5625}};
    const Eigen::MatrixXd p = sobol_unit(5, 9, 0);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 5; ++j)
            EXPECT_EQ(p(i, j), ref[i][j]) << i << "," << j;

    // Same generator after fast_forward(1000), d = 12.
    const double far[12] = {0.2197265625, 0.0966796875, 0.5185546875, 0.6767578125, 0.2802734375, 0.9072265625,
                            0.0458984375, 0.8994140625, 0.5009765625, 0.0693359375, 0.0849609375, 0.2548828125};
    const Eigen::MatrixXd q = sobol_unit(12, 1, 1000);
    for (int j = 0; j < 12; ++j)
        EXPECT_EQ(q(0, j), far[j]) << j;
}

TEST(Sobol, DyadicStratification)
{
    for (int d = 1; d <= 6; ++d)
        for (int m = 0; m <= 10; ++m) {
            const std::size_t n = std::size_t{1} << m;
            const Eigen::MatrixXd p = sobol_unit(d, n, 0);
            for (int j = 0; j < d; ++j)
                for (int k = 0; k <= m; ++k) {
                    std::vector<std::size_t> counts(std::size_t{1} << k, 0);
                    for (Eigen::Index i = 0; i < p.rows(); ++i)
                        ++counts[static_cast<std::size_t>(std::ldexp(p(i, j), k))];
                    for (auto c : counts)
                        ASSERT_EQ(c, n >> k) << "d=" << d << " m=" << m << " dim=" << j << " k=" << k;
                }
        }
}

TEST(Sobol, ReproducibleAndBounded)
{
    const auto space = SearchSpace::continuous(Eigen::Vector2d(-3, -2), Eigen::Vector2d(3, 2));
    const Eigen::MatrixXd a = sobol(space, 300, 17), b = sobol(space, 300, 17);
    EXPECT_EQ(a, b);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        EXPECT_TRUE(space.contains(a.row(i).transpose()));
}

TEST(Sobol, RejectsUnsupportedDimensions)
{
    EXPECT_THROW(sobol_unit(0, 4, 1), CapabilityError);
    EXPECT_THROW(sobol_unit(sobol_max_dim + 1, 4, 1), CapabilityError);
}

// --- search spaces ------------------------------------------------------------

TEST(SearchSpace, ContinuousValidation)
{
    EXPECT_THROW(SearchSpace::continuous(Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1)), InputError);
    EXPECT_THROW(SearchSpace::continuous(Eigen::VectorXd(0), Eigen::VectorXd(0)), InputError);
    const auto s = SearchSpace::continuous(Eigen::Vector2d(-3, -2), Eigen::Vector2d(3, 2));
    const Eigen::Vector2d x(1.5, -1.0);
    EXPECT_TRUE(s.from_unit(s.to_unit(x)).isApprox(x, 1e-15));
    EXPECT_FALSE(s.contains(Eigen::Vector2d(3.1, 0)));
}

TEST(SearchSpace, PoolBookkeeping)
{
    Eigen::MatrixXd pts(3, 1);
    pts << 0.0, 0.5, 1.0;
    auto s = SearchSpace::pool(pts);
    EXPECT_EQ(s.available_count(), 3);
    s.mark_used(1);
    s.mark_used(1);
    EXPECT_EQ(s.available_count(), 2);
    EXPECT_EQ(s.nearest_available(Eigen::VectorXd::Constant(1, 0.55)), 2);
    EXPECT_EQ(s.find_point(Eigen::VectorXd::Constant(1, 0.5)), 1);
    EXPECT_FALSE(s.find_point(Eigen::VectorXd::Constant(1, 0.4)).has_value());
    s.mark_used(0);
    s.mark_used(2);
    EXPECT_THROW(s.nearest_available(Eigen::VectorXd::Zero(1)), ExhaustionError);

    Eigen::MatrixXd dup(2, 2);
    dup << 1, 2, 1, 2;
    EXPECT_THROW(SearchSpace::pool(dup), InputError);
}

// --- maximin ----------------------------------------------------------------

TEST(Maximin, FarthestCandidateIn1D)
{
    Eigen::MatrixXd sampled(1, 1), cand(3, 1);
    sampled << 0.0;
    cand << 0.1, 0.9, 0.5;
    EXPECT_EQ(maximin_next(cand, sampled)(0), 0.9);
}

TEST(Maximin, AllZeroDistancesPickIndexZero)
{
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd pts = oracle::uniform_matrix(rng, 40, 3);
    EXPECT_EQ(maximin_index(pts, pts), 0);
    EXPECT_EQ(maximin_index(pts.topRows(5), pts.topRows(5)), 0);
}

TEST(Maximin, EmptyInputsRejected)
{
    EXPECT_THROW(maximin_index(Eigen::MatrixXd(0, 2), Eigen::MatrixXd::Zero(1, 2)), InputError);
    EXPECT_THROW(maximin_index(Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd(0, 2)), InputError);
}

TEST(Maximin, MatchesBruteForce)
{
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd cand = oracle::uniform_matrix(rng, 200, 5), sampled = oracle::uniform_matrix(rng, 50, 5);
    EXPECT_EQ(maximin_index(cand, sampled), brute_force_maximin(cand, sampled));

    std::uniform_int_distribution<int> dim(1, 8), size(1, 500);
    for (int t = 0; t < 150; ++t) {
        const int d = dim(rng);
        const Eigen::MatrixXd c = oracle::uniform_matrix(rng, size(rng), d);
        const Eigen::MatrixXd s = oracle::uniform_matrix(rng, size(rng), d);
        ASSERT_EQ(maximin_index(c, s), brute_force_maximin(c, s)) << "t=" << t;
    }
}

TEST(Maximin, TiesAgreeWithBruteForceOnALattice)
{
    // Lattice points produce many exactly equal distances.
    Eigen::MatrixXd grid(64, 2);
    for (int i = 0; i < 64; ++i)
        grid.row(i) << (i % 8) / 8.0, (i / 8) / 8.0;
    Eigen::MatrixXd sampled = grid.topRows(40);
    EXPECT_EQ(maximin_index(grid, sampled), brute_force_maximin(grid, sampled));
}

TEST(BallTree, NearestDistanceMatchesScan)
{
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd pts = oracle::uniform_matrix(rng, 300, 4);
    const BallTree tree(pts);
    for (int t = 0; t < 200; ++t) {
        const Eigen::VectorXd q = oracle::uniform_matrix(rng, 4, 1, -0.5, 1.5).col(0);
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            best = std::min(best, squared_distance(pts.row(i).transpose(), q));
        EXPECT_EQ(tree.nearest_squared_distance(q), best);
    }
}

// --- perturbation -----------------------------------------------------------

TEST(Perturb, ZeroSigmaIsIdentityOrNearestNeighbour)
{
    std::mt19937_64 rng(4);
    const auto box = unit_box(2);
    const Eigen::Vector2d x(0.3, 0.7);
    EXPECT_EQ(perturb(x, 0.0, box, rng).x, x);

    Eigen::MatrixXd pts(3, 2);
    pts << 0.0, 0.0, 0.31, 0.69, 1.0, 1.0;
    auto pool = SearchSpace::pool(pts);
    EXPECT_EQ(*perturb(x, 0.0, pool, rng).pool_index, 1);
    pool.mark_used(1);
    EXPECT_EQ(*perturb(x, 0.0, pool, rng).pool_index, 0);
}

TEST(Perturb, StaysInsideTheBox)
{
    std::mt19937_64 rng(5);
    const auto space = SearchSpace::continuous(Eigen::Vector2d(-3, -2), Eigen::Vector2d(3, 2));
    for (int t = 0; t < 2000; ++t) {
        const auto p = perturb(Eigen::Vector2d(3.0, -2.0), 0.5, space, rng);
        EXPECT_TRUE(space.contains(p.x));
    }
}

TEST(Perturb, EmpiricalScale)
{
    std::mt19937_64 rng(6);
    const auto space = SearchSpace::continuous(Eigen::Vector2d(-3, -2), Eigen::Vector2d(3, 2));
    const Eigen::Vector2d x(0.0, 0.0);
    const int n = 10000;
    Eigen::Vector2d s = Eigen::Vector2d::Zero(), ss = Eigen::Vector2d::Zero();
    for (int t = 0; t < n; ++t) {
        const Eigen::Vector2d u = space.to_unit(perturb(x, 0.02, space, rng).x) - space.to_unit(x);
        s += u;
        ss += u.cwiseProduct(u);
    }
    for (int j = 0; j < 2; ++j) {
        const double mean = s[j] / n;
        const double sd = std::sqrt(ss[j] / n - mean * mean);
        EXPECT_NEAR(sd, 0.02, 0.05 * 0.02);
    }
}

TEST(Perturb, PoolNeverReturnsAUsedIndex)
{
    std::mt19937_64 rng(7);
    auto pool = SearchSpace::pool(oracle::uniform_matrix(rng, 60, 3));
    std::set<Eigen::Index> used;
    for (int t = 0; t < 60; ++t) {
        const auto p = perturb(Eigen::Vector3d(0.5, 0.5, 0.5), 0.2, pool, rng);
        ASSERT_TRUE(p.pool_index.has_value());
        EXPECT_TRUE(used.insert(*p.pool_index).second);
        pool.mark_used(*p.pool_index);
    }
    EXPECT_THROW(perturb(Eigen::Vector3d(0.5, 0.5, 0.5), 0.2, pool, rng), ExhaustionError);
}

TEST(Perturb, RejectsNegativeSigma)
{
    std::mt19937_64 rng(8);
    EXPECT_THROW(perturb(Eigen::Vector2d(0.5, 0.5), -0.1, unit_box(2), rng), InputError);
}
