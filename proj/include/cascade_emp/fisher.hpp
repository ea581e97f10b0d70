#ifndef CASCADE_EMP_FISHER_HPP
#define CASCADE_EMP_FISHER_HPP

/** @file
 * Per-sample information matrix and asymptotic covariance of the
 * prediction-error estimate of all module parameters, for a cascade and an
 * excitation and measurement pattern.
 *
 * With white, mutually uncorrelated excitations r_i and measurement noises
 * e_j, the information matrix splits over (excitation, measurement) pairs:
 *
 *     M = sum_{i in B, j in C, i < j} (sigma2_i / lambda_j) K_ji,
 *
 * where K_ji is the Gram matrix of the impulse responses of the gradient
 * stack psi_ji.  Each expectation E[(a r)(b r)] of two filtered copies of a
 * unit white signal is the inner product of their impulse responses.
 */

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cascade_emp/cascade.hpp"
#include "cascade_emp/emp.hpp"
#include "cascade_emp/lti.hpp"

namespace cascade_emp
{

/// An EMP whose information matrix is singular or nearly so.
class NonInformativeError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Gradient filters of one module inside psi_ji, one per parameter.
struct StackBlock
{
    std::size_t module = 0;
    std::vector<TransferFunction> entries;
};

/**
 * Sensitivity filters of the path from excited node @c source to measured
 * node @c sink.  Modules outside source..sink-1 are absent (zero blocks).
 */
struct GradientStack
{
    std::size_t source = 0;
    std::size_t sink = 0;
    std::vector<StackBlock> blocks;

    bool empty() const noexcept { return blocks.empty(); }
    std::size_t entry_count() const noexcept;
    /// All entries, module by module.
    std::vector<TransferFunction> flatten() const;
};

/**
 * psi_ji: block k holds dG_k/dtheta_k times path_gain(i, k) times
 * path_gain(k+1, j).  Returns an empty stack when i >= j.
 */
GradientStack gradient_stack(const CascadeNetwork& net, std::size_t i, std::size_t j);

struct TruncationOptions
{
    std::size_t max_len = kDefaultMaxTaps;
    double tail_tol = kDefaultTailTolerance;
};

struct CorrelationResult
{
    Eigen::MatrixXd value;
    /// False if any impulse response hit max_len before its tail settled.
    bool converged = true;
};

/**
 * variance * sum_t h_a[p](t) h_b[q](t): the cross-covariance of a(q)r and
 * b(q)r for zero-mean white r of the given variance.  Impulse responses
 * and Gram entries are spread over @p threads OpenMP threads (0 means the
 * runtime default, 1 runs inline).
 */
CorrelationResult white_correlation(std::span<const TransferFunction> a,
                                    std::span<const TransferFunction> b,
                                    double variance,
                                    const TruncationOptions& truncation = {},
                                    int threads = 1);

enum class CriterionKind
{
    Trace,  ///< A-optimality: trace(P)
    LogDet, ///< D-optimality: log det(P)
};

std::string to_string(CriterionKind kind);
CriterionKind parse_criterion(const std::string& name);

struct FisherOptions
{
    TruncationOptions truncation;
    /// M is treated as singular at or below this reciprocal condition number.
    double rcond_threshold = 1e-10;
};

/**
 * Information matrix M (per sample), its inverse P when M is well
 * conditioned, and the derived summaries.  Parameters are ordered module by
 * module in edge order.
 */
struct InfoResult
{
    Eigen::MatrixXd information;
    std::optional<Eigen::MatrixXd> covariance;
    /// Diagonal blocks of P, one per module (empty without P).
    std::vector<Eigen::MatrixXd> module_blocks;
    /// Smallest over largest eigenvalue of M.
    double rcond = 0.0;
    /// ||M - M^T|| / ||M|| before symmetrization.
    double asymmetry = 0.0;
    bool truncation_converged = true;
    std::optional<double> trace;
    std::optional<double> logdet;

    bool informative() const noexcept { return covariance.has_value(); }
};

/// Symmetrizes M, checks conditioning and inverts it.  Exposed for callers
/// that assemble M themselves.
InfoResult finalize_information(Eigen::MatrixXd information,
                                std::span<const std::size_t> module_sizes,
                                const FisherOptions& options,
                                bool truncation_converged = true);

/// Full computation for one (network, EMP).  Any valid EMP is accepted.
InfoResult information_matrix(const CascadeNetwork& net, const Emp& emp, const FisherOptions& options = {});

/// trace(P) or log det(P); empty when P is unavailable.
std::optional<double> criterion(const InfoResult& result, CriterionKind kind);

/**
 * Unit-variance pair Gram matrices K_ji for every i < j of one network.
 * Evaluating many EMPs on the same network reuses these, so each EMP costs
 * a weighted sum and one inversion.  Built in parallel over pairs.
 */
class PairKernels
{
public:
    PairKernels(const CascadeNetwork& net, const FisherOptions& options = {}, int threads = 1);

    /// K_ji restricted to modules i..j-1, rows ordered as the stack.
    const Eigen::MatrixXd& kernel(std::size_t i, std::size_t j) const;
    bool truncation_converged() const noexcept { return converged_; }

    /// Same result as information_matrix(net, emp, options).
    InfoResult evaluate(const Emp& emp) const;

private:
    std::size_t index(std::size_t i, std::size_t j) const;

    std::size_t n_;
    FisherOptions options_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> sizes_;
    std::vector<Eigen::MatrixXd> kernels_;
    bool converged_ = true;
};

} // namespace cascade_emp

#endif
