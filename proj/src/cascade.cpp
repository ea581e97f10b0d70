#include "cascade_emp/cascade.hpp"

#include <string>

namespace cascade_emp
{

CascadeNetwork::CascadeNetwork(std::vector<ParamModule> modules) : modules_(std::move(modules))
{
    if (modules_.empty())
        throw StructuralError("a cascade needs at least two nodes (one module)");
    offsets_.reserve(modules_.size() + 1);
    offsets_.push_back(0);
    for (const auto& m : modules_)
        offsets_.push_back(offsets_.back() + m.parameter_count());
}

const ParamModule& CascadeNetwork::module(std::size_t k) const
{
    if (k < 1 || k > modules_.size())
        throw DomainError("module index " + std::to_string(k) + " outside 1.."
                          + std::to_string(modules_.size()));
    return modules_[k - 1];
}

std::size_t CascadeNetwork::parameter_offset(std::size_t k) const
{
    if (k < 1 || k > modules_.size())
        throw DomainError("module index " + std::to_string(k) + " out of range");
    return offsets_[k - 1];
}

std::vector<double> CascadeNetwork::stacked_theta() const
{
    std::vector<double> theta;
    theta.reserve(parameter_count());
    for (const auto& m : modules_)
        theta.insert(theta.end(), m.theta().begin(), m.theta().end());
    return theta;
}

CascadeNetwork CascadeNetwork::with_theta(const std::vector<double>& theta) const
{
    if (theta.size() != parameter_count())
        throw StructuralError("stacked parameter vector has wrong length");
    std::vector<ParamModule> next;
    next.reserve(modules_.size());
    for (std::size_t k = 0; k < modules_.size(); ++k) {
        std::vector<double> part(theta.begin() + static_cast<std::ptrdiff_t>(offsets_[k]),
                                 theta.begin() + static_cast<std::ptrdiff_t>(offsets_[k + 1]));
        next.push_back(modules_[k].with_theta(std::move(part)));
    }
    return CascadeNetwork(std::move(next));
}

bool CascadeNetwork::identical_modules() const
{
    for (const auto& m : modules_)
        if (!(m == modules_.front()))
            return false;
    return true;
}

TransferFunction path_gain(const CascadeNetwork& net, std::size_t i, std::size_t j)
{
    const std::size_t n = net.node_count();
    if (i < 1 || j > n)
        throw DomainError("path_gain: nodes must lie in 1.." + std::to_string(n));
    if (i > j)
        throw DomainError("path_gain: no path from node " + std::to_string(i) + " back to node "
                          + std::to_string(j) + " in a cascade");
    TransferFunction gain = TransferFunction::unit();
    for (std::size_t k = i; k < j; ++k)
        gain = series(gain, net.module(k).transfer_function());
    return gain;
}

std::vector<std::vector<TransferFunction>> transfer_matrix(const CascadeNetwork& net)
{
    const std::size_t n = net.node_count();
    std::vector<std::vector<TransferFunction>> t(n, std::vector<TransferFunction>(n, TransferFunction::zero()));
    for (std::size_t i = 1; i <= n; ++i) {
        TransferFunction gain = TransferFunction::unit();
        t[i - 1][i - 1] = gain;
        for (std::size_t j = i + 1; j <= n; ++j) {
            gain = series(gain, net.module(j - 1).transfer_function());
            t[j - 1][i - 1] = gain;
        }
    }
    return t;
}

} // namespace cascade_emp
