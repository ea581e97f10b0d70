#ifndef CASCADE_EMP_REFERENCE_HPP
#define CASCADE_EMP_REFERENCE_HPP

/** @file
 * Serial, unshared versions of the parallel kernels.  They recompute every
 * quantity from scratch with plain loops and exist to cross-check and
 * benchmark the production paths.
 */

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cascade_emp/cascade.hpp"
#include "cascade_emp/emp.hpp"
#include "cascade_emp/fisher.hpp"
#include "cascade_emp/lti.hpp"
#include "cascade_emp/ranking.hpp"

namespace cascade_emp::reference
{

/// Impulse response by the difference equation of the expanded
/// numerator/denominator, for exactly @p length samples.
std::vector<double> impulse_response(const TransferFunction& tf, std::size_t length);

/// Gram matrix over the first @p length impulse-response samples.
Eigen::MatrixXd white_correlation(std::span<const TransferFunction> a, std::span<const TransferFunction> b,
                                  double variance, std::size_t length);

/// Information matrix accumulated entry by entry over every (i, j) pair.
Eigen::MatrixXd information_matrix(const CascadeNetwork& net, const Emp& emp, std::size_t length);

/// Criterion values of every minimal EMP in canonical order (NaN when
/// singular), each evaluated independently.
std::vector<double> criterion_values(const CascadeNetwork& net, const VarianceProfile& profile,
                                     CriterionKind kind, const FisherOptions& options = {});

} // namespace cascade_emp::reference

#endif
