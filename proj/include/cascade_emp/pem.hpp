#ifndef CASCADE_EMP_PEM_HPP
#define CASCADE_EMP_PEM_HPP

/** @file
 * Simulation of cascade data for an EMP, prediction-error fits of all
 * module parameters, and the replication study that compares the spread of
 * the estimates with the asymptotic covariance.
 */

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "cascade_emp/cascade.hpp"
#include "cascade_emp/emp.hpp"
#include "cascade_emp/fisher.hpp"

namespace cascade_emp
{

/// Records of one experiment.  r[k] belongs to emp.excited[k] and y[k] to
/// emp.measured[k].
struct Dataset
{
    CascadeNetwork truth;
    Emp emp;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> r;
    std::vector<std::vector<double>> y;

    std::size_t samples() const noexcept { return r.empty() ? 0 : r.front().size(); }
};

/**
 * Gaussian white excitations (variance sigma2_i) and measurement noises
 * (variance lambda_j), propagated node by node from zero initial
 * conditions.  A zero lambda gives noiseless measurements.
 */
Dataset simulate(const CascadeNetwork& net, const Emp& emp, std::size_t samples, std::uint64_t seed);

/// Noise-free node signals w_j for every measured node, driven by @p r.
std::vector<std::vector<double>> predict(const CascadeNetwork& net, const Emp& emp,
                                         const std::vector<std::vector<double>>& r);

struct PemOptions
{
    std::size_t max_iterations = 100;
    /// Stop when the relative cost decrease falls below this.
    double cost_tolerance = 1e-12;
    /// Leading samples left out of the criterion.
    std::size_t discard = 50;
};

struct PemEstimate
{
    std::vector<double> theta;
    double initial_cost = 0.0;
    double cost = 0.0;
    /// Accepted parameter updates.
    std::size_t iterations = 0;
    bool converged = false;
};

/**
 * Minimizes sum_t sum_{j in C} (y_j(t) - yhat_j(t, theta))^2 / lambda_j over
 * samples t >= discard by damped Gauss-Newton.  The first trial of every
 * iteration is the undamped step; steps that raise the cost or leave the
 * stable region are retried with increasing Levenberg-Marquardt damping, so
 * the cost never increases.  Model families follow data.truth.
 */
PemEstimate pem_fit(const Dataset& data, const std::vector<double>& theta_init, const PemOptions& options = {});

struct PemCost
{
    double value = 0.0;
    /// d value / d theta.
    Eigen::VectorXd gradient;
    /// Gauss-Newton approximation J^T Lambda^{-1} J.
    Eigen::MatrixXd normal;
};

/// Criterion, gradient and Gauss-Newton matrix at @p theta.
PemCost pem_cost(const Dataset& data, const CascadeNetwork& model, std::size_t discard);

inline constexpr std::size_t kMinReplications = 30;
inline constexpr double kMaxFailureFraction = 0.05;

struct CovarianceComparison
{
    std::size_t samples = 0;
    std::size_t replications = 0;
    std::size_t failed = 0;
    /// Failed fits exceed kMaxFailureFraction of the replications.
    bool unreliable = false;
    /// Per-sample P from the information matrix.
    Eigen::MatrixXd theoretical;
    /// Sample covariance of sqrt(N_eff) (theta_hat - theta0), N_eff the
    /// number of samples entering the criterion.
    Eigen::MatrixXd empirical;
    double theoretical_trace = 0.0;
    double empirical_trace = 0.0;
    /// Trace of the sample covariance of theta_hat itself.
    double raw_trace = 0.0;
    /// |empirical - theoretical| / theoretical (traces).
    double deviation = 0.0;
};

/**
 * Replicates simulate + pem_fit (initialized at the true parameters) and
 * compares the estimates' sample covariance with the theoretical one.
 * Replication k uses derive_seed(seed, k).  Throws DomainError below
 * kMinReplications and NonInformativeError if the EMP is singular.
 */
CovarianceComparison empirical_covariance(const CascadeNetwork& net, const Emp& emp, std::size_t samples,
                                          std::size_t replications, std::uint64_t seed,
                                          const PemOptions& options = {}, int threads = 0);

/// CSV with columns t, r<i>..., y<j>... in node order.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Reads records written by write_dataset_csv; the header must name the
/// excited and measured nodes of @p emp.  Throws StructuralError otherwise.
Dataset read_dataset_csv(std::istream& in, const CascadeNetwork& net, const Emp& emp);

} // namespace cascade_emp

#endif
