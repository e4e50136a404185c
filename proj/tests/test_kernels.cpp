#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "casmart/kernels.hpp"
#include "oracles.hpp"

using namespace casmart;

TEST(Kernels, RbfAtZeroDistanceIsAmplitude)
{
    const Eigen::Vector2d x(0.3, -1.2);
    EXPECT_DOUBLE_EQ(eval_kernel(KernelSpec::rbf(1.0, 1.0), x, x), 1.0);
    EXPECT_DOUBLE_EQ(eval_kernel(KernelSpec::rbf(2.5, 0.4), x, x), 2.5);
}

TEST(Kernels, RbfAtUnitDistance)
{
    const Eigen::Vector2d a(0.0, 0.0), b(1.0, 0.0);
    EXPECT_NEAR(eval_kernel(KernelSpec::rbf(1.0, 1.0), a, b), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(eval_kernel(KernelSpec::rbf(1.0, 1.0), a, b), 0.60653, 1e-5);
}

TEST(Kernels, RationalQuadraticApproachesRbfForLargeAlpha)
{
    const Eigen::Vector2d a(0.0, 0.0), b(0.6, 0.8);
    const double rq = eval_kernel(KernelSpec::rational_quadratic(1.0, 1.0, 1e4), a, b);
    EXPECT_NEAR(rq, 0.60653, 1e-3);
}

TEST(Kernels, Matern52MatchesClosedForm)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 3.0), pos(0.1, 4.0);
    for (int t = 0; t < 200; ++t) {
        const double amp = pos(rng), len = pos(rng);
        Eigen::VectorXd a = oracle::uniform_matrix(rng, 3, 1, -1.0, 1.0).col(0);
        Eigen::VectorXd b = oracle::uniform_matrix(rng, 3, 1, -1.0, 1.0).col(0);
        const double d = (a - b).norm();
        const double expected =
            (1.0 + std::sqrt(5.0) * d / len + 5.0 * d * d / (3.0 * len * len)) * std::exp(-std::sqrt(5.0) * d / len) * amp;
        EXPECT_NEAR(eval_kernel(KernelSpec::matern(2.5, amp, len), a, b), expected, 1e-12);
    }
}

TEST(Kernels, Matern32MatchesClosedForm)
{
    const Eigen::VectorXd a = Eigen::VectorXd::Zero(1);
    for (double d : {0.0, 0.1, 0.7, 2.0}) {
        const Eigen::VectorXd b = Eigen::VectorXd::Constant(1, d);
        const double s = std::sqrt(3.0) * d / 0.5;
        EXPECT_NEAR(eval_kernel(KernelSpec::matern(1.5, 2.0, 0.5), a, b), 2.0 * (1.0 + s) * std::exp(-s), 1e-14);
    }
}

TEST(Kernels, ConstantIgnoresInputs)
{
    const Eigen::Vector2d a(0.0, 0.0), b(10.0, -4.0);
    EXPECT_EQ(eval_kernel(KernelSpec::constant(3.5), a, b), 3.5);
}

TEST(Kernels, DimensionMismatchThrows)
{
    EXPECT_THROW(eval_kernel(KernelSpec::rbf(), Eigen::Vector2d(0, 0), Eigen::Vector3d(0, 0, 0)), InputError);
    EXPECT_THROW(kernel_matrix(KernelSpec::rbf(), Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 3)),
                 InputError);
}

TEST(Kernels, InvalidParametersRejected)
{
    EXPECT_THROW(KernelSpec::rbf(0.0, 1.0), InputError);
    EXPECT_THROW(KernelSpec::rbf(1.0, -1.0), InputError);
    EXPECT_THROW(KernelSpec::rational_quadratic(1.0, 1.0, 0.0), InputError);
    EXPECT_THROW(KernelSpec::matern(0.5), InputError);
    EXPECT_THROW(KernelSpec::product({KernelSpec::rbf()}), InputError);
}

TEST(Kernels, MatrixShapesAndTrivialCases)
{
    const auto k = KernelSpec::rbf();
    EXPECT_EQ(kernel_matrix(k, Eigen::MatrixXd(0, 2), Eigen::MatrixXd::Zero(3, 2)).rows(), 0);
    EXPECT_EQ(kernel_matrix(k, Eigen::MatrixXd(0, 2), Eigen::MatrixXd::Zero(3, 2)).cols(), 3);
    EXPECT_EQ(kernel_matrix(k, Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd(0, 2)).cols(), 0);

    Eigen::MatrixXd one(1, 2);
    one << 0.2, 0.4;
    EXPECT_DOUBLE_EQ(kernel_matrix(k, one)(0, 0), 1.0);

    Eigen::MatrixXd twin(2, 2);
    twin << 0.2, 0.4, 0.2, 0.4;
    EXPECT_TRUE(kernel_matrix(k, twin).isApprox(Eigen::MatrixXd::Ones(2, 2)));
}

TEST(Kernels, MatrixMatchesEntrywiseOracle)
{
    std::mt19937_64 rng(5);
    for (int which = 0; which < 8; ++which) {
        const auto k = oracle::random_kernel(rng, which);
        const Eigen::MatrixXd A = oracle::uniform_matrix(rng, 5, 3), B = oracle::uniform_matrix(rng, 5, 3);
        const Eigen::MatrixXd got = kernel_matrix(k, A, B);
        for (Eigen::Index i = 0; i < 5; ++i)
            for (Eigen::Index j = 0; j < 5; ++j) {
                EXPECT_DOUBLE_EQ(got(i, j), eval_kernel(k, A.row(i).transpose(), B.row(j).transpose()));
                EXPECT_NEAR(got(i, j), oracle::kernel(k, A.row(i).transpose(), B.row(j).transpose()), 1e-13);
            }
    }
}

TEST(Kernels, SymmetricInArguments)
{
    std::mt19937_64 rng(9);
    for (int t = 0; t < 400; ++t) {
        const auto k = oracle::random_kernel(rng, t);
        const Eigen::VectorXd a = oracle::uniform_matrix(rng, 4, 1, -2.0, 2.0).col(0);
        const Eigen::VectorXd b = oracle::uniform_matrix(rng, 4, 1, -2.0, 2.0).col(0);
        EXPECT_EQ(eval_kernel(k, a, b), eval_kernel(k, b, a));
    }
}

TEST(Kernels, GramIsPositiveSemidefinite)
{
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<int> size(2, 20), dim(1, 5);
    for (int t = 0; t < 160; ++t) {
        const auto k = oracle::random_kernel(rng, t);
        const Eigen::MatrixXd X = oracle::uniform_matrix(rng, size(rng), dim(rng));
        Eigen::MatrixXd K = kernel_matrix(k, X);
        K.diagonal().array() += 1e-10;
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues();
        // Round-off on an eigen-decomposition of a unit-scale matrix sits near 1e-15 * n * ||K||.
        EXPECT_GE(ev.minCoeff(), -1e-12 * K.norm()) << kernel_name(k);
    }
}

TEST(Kernels, ProductIsElementwiseProduct)
{
    std::mt19937_64 rng(3);
    const auto a = KernelSpec::rational_quadratic(1.3, 0.4, 2.0);
    const auto b = KernelSpec::matern(2.5, 0.7, 1.1);
    const Eigen::MatrixXd X = oracle::uniform_matrix(rng, 9, 2);
    const Eigen::MatrixXd expected = kernel_matrix(a, X).cwiseProduct(kernel_matrix(b, X));
    EXPECT_TRUE(kernel_matrix(KernelSpec::product({a, b}), X).isApprox(expected, 1e-14));
}

TEST(Kernels, ParseAndNameRoundTrip)
{
    for (const char* name : {"rbf", "matern32", "matern52", "rq", "constant", "rq*constant", "matern32*rbf"})
        EXPECT_EQ(kernel_name(parse_kernel(name)), name);
    EXPECT_THROW(parse_kernel("linear"), ConfigError);
    EXPECT_THROW(parse_kernel(""), ConfigError);
}

TEST(Kernels, LogHyperparametersRoundTrip)
{
    const auto k = KernelSpec::product({KernelSpec::rational_quadratic(2.0, 0.3, 4.0), KernelSpec::constant(1.5)});
    const auto logs = log_hyperparameters(k);
    const auto back = with_log_hyperparameters(k, logs);
    EXPECT_NEAR(back.factors[0].signal_variance, 2.0, 1e-12);
    EXPECT_NEAR(back.factors[0].length_scale, 0.3, 1e-12);
    EXPECT_NEAR(back.factors[0].alpha, 4.0, 1e-12);
    EXPECT_NEAR(back.factors[1].constant_value, 1.5, 1e-12);
    EXPECT_EQ(logs.size(), hyperparameter_bounds(k).size());
}

TEST(Kernels, PriorVarianceUpperBoundCoversTheSearchBox)
{
    // A product holding a constant keeps the other amplitudes frozen, so the
    // bound is the constant's upper limit times the frozen amplitude.
    const auto k = KernelSpec::product({KernelSpec::rational_quadratic(), KernelSpec::constant()});
    EXPECT_NEAR(prior_variance_upper_bound(k), 100.0, 1e-9);
    EXPECT_NEAR(prior_variance_upper_bound(KernelSpec::rbf()), 100.0, 1e-9);
}
