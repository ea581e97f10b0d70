#ifndef CASCADE_EMP_CASCADE_HPP
#define CASCADE_EMP_CASCADE_HPP

#include <cstddef>
#include <vector>

#include "cascade_emp/lti.hpp"

namespace cascade_emp
{

/**
 * An n-node cascade: module k (1-based) carries node k to node k+1.
 *
 * Nodes and modules are numbered from 1 throughout the public interface to
 * match the usual way the network is written down.  Every module is stable
 * by construction (ParamModule rejects unstable realizations), which makes
 * the whole cascade stable.
 */
class CascadeNetwork
{
public:
    explicit CascadeNetwork(std::vector<ParamModule> modules);

    std::size_t node_count() const noexcept { return modules_.size() + 1; }
    std::size_t module_count() const noexcept { return modules_.size(); }

    /// 1-based module access.
    const ParamModule& module(std::size_t k) const;
    const std::vector<ParamModule>& modules() const noexcept { return modules_; }

    std::size_t parameter_count() const noexcept { return offsets_.back(); }
    /// Offset of module k's first parameter in the stacked vector.
    std::size_t parameter_offset(std::size_t k) const;
    std::vector<double> stacked_theta() const;
    /// Same families, new stacked parameter vector.
    CascadeNetwork with_theta(const std::vector<double>& theta) const;

    /// True when every module has the same family and parameters.
    bool identical_modules() const;

private:
    std::vector<ParamModule> modules_;
    std::vector<std::size_t> offsets_;
};

/// Product G_i ... G_{j-1}; the unit filter when i == j.  i > j throws
/// DomainError.
TransferFunction path_gain(const CascadeNetwork& net, std::size_t i, std::size_t j);

/// T = (I - G)^{-1}: entry [j-1][i-1] is path_gain(i, j) for j >= i and the
/// zero filter above the diagonal.
std::vector<std::vector<TransferFunction>> transfer_matrix(const CascadeNetwork& net);

} // namespace cascade_emp

#endif
