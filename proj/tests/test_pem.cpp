#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "cascade_emp/pem.hpp"
#include "cascade_emp/reference.hpp"
#include "test_support.hpp"

using namespace cascade_emp;

namespace
{

Emp noiseless(const Pattern& p, double sigma2)
{
    Emp e;
    e.excited = p.excited;
    e.measured = p.measured;
    for (auto i : p.excited)
        e.sigma2[i] = sigma2;
    for (auto j : p.measured)
        e.lambda[j] = 0.0;
    return e;
}

CascadeNetwork three_node()
{
    return CascadeNetwork({ParamModule(ModuleFamily::FirstOrder, {-0.5, 1.0}),
                           ParamModule(ModuleFamily::FirstOrder, {0.3, 0.8})});
}

} // namespace

TEST(Simulate, NoiselessOutputsFollowTheCascade)
{
    const auto net = three_node();
    const auto d = simulate(net, noiseless({{1, 2}, {3}}, 1.0), 300, 4);
    // w3 = G2 (G1 r1 + r2), by direct filtering.
    const auto& g1 = net.module(1).transfer_function();
    const auto& g2 = net.module(2).transfer_function();
    auto w2 = g1.filter(d.r[0]);
    for (std::size_t t = 0; t < w2.size(); ++t)
        w2[t] += d.r[1][t];
    const auto w3 = g2.filter(w2);
    for (std::size_t t = 0; t < w3.size(); ++t)
        EXPECT_NEAR(d.y[0][t], w3[t], 1e-12);
}

TEST(Simulate, VariancesAndIndependence)
{
    const auto net = three_node();
    const Emp emp = VarianceProfile{{4.0, 0.25, 1.0}, {1.0, 1.0, 9.0}}.apply({{1, 2}, {3}});
    const std::size_t n = 200000;
    const auto d = simulate(net, emp, n, 17);
    auto var = [&](const std::vector<double>& x) {
        double s = 0;
        for (double v : x)
            s += v * v;
        return s / double(x.size());
    };
    EXPECT_NEAR(var(d.r[0]), 4.0, 4.0 * 0.02);
    EXPECT_NEAR(var(d.r[1]), 0.25, 0.25 * 0.02);
    double cross = 0;
    for (std::size_t t = 0; t < n; ++t)
        cross += d.r[0][t] * d.r[1][t];
    EXPECT_LT(std::abs(cross / n) / std::sqrt(4.0 * 0.25), 0.01);
    // Noise power: y3 - w3 has variance lambda_3.
    const auto w = predict(net, emp, d.r);
    std::vector<double> e(n);
    for (std::size_t t = 0; t < n; ++t)
        e[t] = d.y[0][t] - w[0][t];
    EXPECT_NEAR(var(e), 9.0, 9.0 * 0.02);
}

TEST(Simulate, SameSeedSameData)
{
    const auto net = three_node();
    const Emp emp = VarianceProfile::uniform(3, 1.0, 0.1).apply({{1}, {2, 3}});
    EXPECT_EQ(simulate(net, emp, 100, 3).y, simulate(net, emp, 100, 3).y);
    EXPECT_NE(simulate(net, emp, 100, 3).y, simulate(net, emp, 100, 4).y);
}

TEST(PemFit, RecoversTruthWithoutNoise)
{
    const auto net = three_node();
    const auto d = simulate(net, noiseless({{1}, {2, 3}}, 1.0), 800, 9);
    const auto est = pem_fit(d, {-0.3, 0.8, 0.5, 1.0});
    EXPECT_TRUE(est.converged);
    const auto truth = net.stacked_theta();
    for (std::size_t k = 0; k < truth.size(); ++k)
        EXPECT_NEAR(est.theta[k], truth[k], 1e-7);
}

TEST(PemFit, FirSingleStepIsLeastSquares)
{
    const CascadeNetwork net({ParamModule(ModuleFamily::Fir, {0.5, -0.2, 0.1})});
    const Emp emp = VarianceProfile::uniform(2, 1.0, 0.04).apply({{1}, {2}});
    const auto d = simulate(net, emp, 500, 12);
    PemOptions opt;
    opt.max_iterations = 1;
    const auto est = pem_fit(d, {0.0, 0.0, 0.0}, opt);

    const std::size_t n = d.samples(), m = 3;
    Eigen::MatrixXd phi(n - opt.discard, m);
    Eigen::VectorXd y(n - opt.discard);
    for (std::size_t t = opt.discard; t < n; ++t) {
        for (std::size_t k = 0; k < m; ++k)
            phi(t - opt.discard, k) = d.r[0][t - k];
        y(t - opt.discard) = d.y[0][t];
    }
    const Eigen::VectorXd ls = phi.colPivHouseholderQr().solve(y);
    for (std::size_t k = 0; k < m; ++k)
        EXPECT_NEAR(est.theta[k], ls(k), 1e-10);
}

TEST(PemCostTest, GradientMatchesFiniteDifference)
{
    const auto net = three_node();
    const Emp emp = VarianceProfile::uniform(3, 1.0, 0.2).apply({{1, 2}, {3}});
    const auto d = simulate(net, emp, 400, 5);
    auto theta = net.stacked_theta();
    theta[0] += 0.05;
    theta[3] -= 0.1;
    const auto model = net.with_theta(theta);
    const auto c = pem_cost(d, model, 50);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        auto up = theta, dn = theta;
        const double h = 1e-6;
        up[k] += h;
        dn[k] -= h;
        const double fd = (pem_cost(d, net.with_theta(up), 50).value - pem_cost(d, net.with_theta(dn), 50).value) / (2 * h);
        EXPECT_NEAR(c.gradient(static_cast<Eigen::Index>(k)), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST(PemFit, CostNeverIncreases)
{
    const auto net = three_node();
    const Emp emp = VarianceProfile::uniform(3, 1.0, 0.5).apply({{1}, {2, 3}});
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto d = simulate(net, emp, 600, s);
        const auto est = pem_fit(d, {0.2, 0.5, -0.4, 0.3});
        EXPECT_LE(est.cost, est.initial_cost);
        EXPECT_TRUE(est.converged);
    }
}

TEST(PemFit, UnstableStartThrows)
{
    const auto net = three_node();
    const auto d = simulate(net, VarianceProfile::uniform(3, 1.0, 0.5).apply({{1}, {2, 3}}), 200, 1);
    EXPECT_THROW(pem_fit(d, {1.5, 1.0, 0.3, 0.8}), UnstableError);
}

TEST(DatasetCsv, RoundTrip)
{
    const auto net = three_node();
    const Emp emp = VarianceProfile::uniform(3, 1.0, 0.1).apply({{1, 2}, {3}});
    const auto d = simulate(net, emp, 50, 8);
    std::stringstream ss;
    write_dataset_csv(ss, d);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "t,r1,r2,y3");
    const auto back = read_dataset_csv(ss, net, emp);
    ASSERT_EQ(back.samples(), 50u);
    for (std::size_t t = 0; t < 50; ++t) {
        EXPECT_DOUBLE_EQ(back.r[1][t], d.r[1][t]);
        EXPECT_DOUBLE_EQ(back.y[0][t], d.y[0][t]);
    }
    std::stringstream bad("t,r1,y2\n0,1,2\n");
    EXPECT_THROW(read_dataset_csv(bad, net, emp), StructuralError);
}

TEST(EmpiricalCovariance, Guards)
{
    const auto net = three_node();
    const Emp emp = VarianceProfile::uniform(3, 1.0, 0.1).apply({{1}, {2, 3}});
    EXPECT_THROW(empirical_covariance(net, emp, 500, 29, 1), DomainError);
    Emp partial;
    partial.excited = {1};
    partial.measured = {2};
    partial.sigma2 = {{1, 1.0}};
    partial.lambda = {{2, 1.0}};
    EXPECT_THROW(empirical_covariance(net, partial, 500, 40, 1), NonInformativeError);
}

TEST(EmpiricalCovariance, RawSpreadHalvesWhenSamplesDouble)
{
    const CascadeNetwork net({ParamModule(ModuleFamily::Fir, {0.6, 0.3})});
    const Emp emp = VarianceProfile::uniform(2, 1.0, 1.0).apply({{1}, {2}});
    const auto a = empirical_covariance(net, emp, 450, 600, 77);
    const auto b = empirical_covariance(net, emp, 850, 600, 78);
    EXPECT_FALSE(a.unreliable);
    EXPECT_NEAR(a.raw_trace / b.raw_trace, 2.0, 0.4);
    EXPECT_NEAR(a.theoretical_trace, 2.0, 1e-12);
    EXPECT_LT(a.deviation, 0.15);
}
