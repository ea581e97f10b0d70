#include <complex>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "cascade_emp/cascade.hpp"
#include "test_support.hpp"

using namespace cascade_emp;

TEST(Cascade, ParameterLayout)
{
    const CascadeNetwork net({ParamModule(ModuleFamily::FirstOrder, {0.2, 1.0}),
                              ParamModule(ModuleFamily::Fir, {1.0, 0.5, 0.25}),
                              ParamModule(ModuleFamily::SecondOrder, {1, 0, -0.5, 0.06})});
    EXPECT_EQ(net.node_count(), 4u);
    EXPECT_EQ(net.parameter_count(), 9u);
    EXPECT_EQ(net.parameter_offset(1), 0u);
    EXPECT_EQ(net.parameter_offset(2), 2u);
    EXPECT_EQ(net.parameter_offset(3), 5u);
    EXPECT_FALSE(net.identical_modules());
    const auto theta = net.stacked_theta();
    EXPECT_EQ(net.with_theta(theta).stacked_theta(), theta);
    EXPECT_THROW(net.module(0), DomainError);
    EXPECT_THROW(net.module(4), DomainError);
    EXPECT_THROW(CascadeNetwork({}), StructuralError);
}

TEST(Cascade, PathGain)
{
    Rng rng(3);
    const auto net = testing_support::random_network(5, rng);
    EXPECT_TRUE(path_gain(net, 2, 2).is_unit());
    EXPECT_THROW(path_gain(net, 3, 2), DomainError);
    const std::complex<double> z = std::polar(1.0, 0.7);
    const auto g = [&](std::size_t k) { return net.module(k).transfer_function().evaluate(z); };
    EXPECT_LT(std::abs(path_gain(net, 1, 4).evaluate(z) - g(1) * g(2) * g(3)), 1e-12);
}

TEST(Cascade, TransferMatrixInvertsImMinusG)
{
    Rng rng(11);
    const std::size_t n = 5;
    const auto net = testing_support::random_network(n, rng);
    const auto t = transfer_matrix(net);
    for (double w : {0.1, 1.3, 2.8}) {
        const std::complex<double> z = std::polar(1.0, w);
        Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(n, n), tz(n, n);
        for (std::size_t k = 1; k < n; ++k)
            g(k, k - 1) = net.module(k).transfer_function().evaluate(z);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                tz(r, c) = t[r][c].is_zero() ? 0.0 : t[r][c].evaluate(z);
        const Eigen::MatrixXcd prod = (Eigen::MatrixXcd::Identity(n, n) - g) * tz;
        EXPECT_LT((prod - Eigen::MatrixXcd::Identity(n, n)).norm(), 1e-12) << "w=" << w;
    }
}
