#ifndef CASCADE_EMP_TEST_SUPPORT_HPP
#define CASCADE_EMP_TEST_SUPPORT_HPP

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cascade_emp/cascade.hpp"
#include "cascade_emp/emp.hpp"
#include "cascade_emp/lti.hpp"
#include "cascade_emp/monte_carlo.hpp"

namespace testing_support
{

using namespace cascade_emp;

inline ParamModule random_first_order(Rng& rng)
{
    std::uniform_real_distribution<double> a(-0.8, 0.8), b(0.5, 2.0);
    return ParamModule(ModuleFamily::FirstOrder, {a(rng), b(rng)});
}

inline CascadeNetwork identical_network(const ParamModule& m, std::size_t n)
{
    return CascadeNetwork(std::vector<ParamModule>(n - 1, m));
}

inline CascadeNetwork random_network(std::size_t n, Rng& rng)
{
    std::vector<ParamModule> mods;
    for (std::size_t k = 1; k < n; ++k)
        mods.push_back(random_first_order(rng));
    return CascadeNetwork(std::move(mods));
}

inline VarianceProfile random_profile(std::size_t n, Rng& rng)
{
    std::uniform_real_distribution<double> u(0.1, 10.0);
    VarianceProfile p;
    for (std::size_t i = 0; i < n; ++i) {
        p.sigma2.push_back(u(rng));
        p.lambda.push_back(u(rng));
    }
    return p;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace testing_support

#endif
