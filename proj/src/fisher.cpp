#include "cascade_emp/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <omp.h>

#include "cascade_emp/parallel.hpp"

namespace cascade_emp
{

int resolve_threads(int threads)
{
    return threads > 0 ? threads : omp_get_max_threads();
}

std::size_t GradientStack::entry_count() const noexcept
{
    std::size_t count = 0;
    for (const auto& b : blocks)
        count += b.entries.size();
    return count;
}

std::vector<TransferFunction> GradientStack::flatten() const
{
    std::vector<TransferFunction> out;
    out.reserve(entry_count());
    for (const auto& b : blocks)
        out.insert(out.end(), b.entries.begin(), b.entries.end());
    return out;
}

GradientStack gradient_stack(const CascadeNetwork& net, std::size_t i, std::size_t j)
{
    GradientStack stack;
    stack.source = i;
    stack.sink = j;
    if (i >= j)
        return stack;
    if (i < 1 || j > net.node_count())
        throw DomainError("gradient_stack: nodes outside the network");
    for (std::size_t k = i; k < j; ++k) {
        // rho_ji / G_k, formed as a product of the surrounding path gains.
        const TransferFunction around = series(path_gain(net, i, k), path_gain(net, k + 1, j));
        StackBlock block{k, {}};
        for (const auto& d : param_jacobian(net.module(k)))
            block.entries.push_back(series(d, around));
        stack.blocks.push_back(std::move(block));
    }
    return stack;
}

namespace
{

struct Responses
{
    std::vector<std::vector<double>> taps;
    bool converged = true;
};

Responses compute_responses(std::span<const TransferFunction> filters, const TruncationOptions& opt,
                            int threads)
{
    for (const auto& f : filters)
        if (!is_stable(f))
            throw UnstableError("white_correlation: unstable filter");
    Responses out;
    out.taps.resize(filters.size());
    std::vector<char> ok(filters.size(), 1);
    ExceptionSlot slot;
    const auto count = static_cast<std::ptrdiff_t>(filters.size());
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads)) if (threads != 1)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
        slot.run([&] {
            auto ir = impulse_response(filters[p], opt.max_len, opt.tail_tol);
            out.taps[p] = std::move(ir.taps);
            ok[p] = ir.converged ? 1 : 0;
        });
    }
    slot.rethrow();
    out.converged = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    return out;
}

double dot(const std::vector<double>& x, const std::vector<double>& y)
{
    const std::size_t len = std::min(x.size(), y.size());
    return std::inner_product(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(len), y.begin(), 0.0);
}

} // namespace

CorrelationResult white_correlation(std::span<const TransferFunction> a,
                                    std::span<const TransferFunction> b,
                                    double variance,
                                    const TruncationOptions& truncation,
                                    int threads)
{
    const bool same = a.data() == b.data() && a.size() == b.size();
    const Responses ra = compute_responses(a, truncation, threads);
    const Responses rb = same ? Responses{} : compute_responses(b, truncation, threads);
    const auto& ha = ra.taps;
    const auto& hb = same ? ra.taps : rb.taps;

    CorrelationResult result;
    result.converged = ra.converged && (same || rb.converged);
    result.value.resize(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    const auto rows = static_cast<std::ptrdiff_t>(a.size());
    const auto cols = static_cast<std::ptrdiff_t>(b.size());
    auto& value = result.value;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads)) if (threads != 1)
    for (std::ptrdiff_t p = 0; p < rows; ++p) {
        for (std::ptrdiff_t q = same ? p : 0; q < cols; ++q) {
            const double v = variance * dot(ha[p], hb[q]);
            value(p, q) = v;
            if (same)
                value(q, p) = v;
        }
    }
    return result;
}

std::string to_string(CriterionKind kind)
{
    return kind == CriterionKind::Trace ? "trace" : "logdet";
}

CriterionKind parse_criterion(const std::string& name)
{
    if (name == "trace" || name == "A" || name == "a")
        return CriterionKind::Trace;
    if (name == "logdet" || name == "D" || name == "d" || name == "det")
        return CriterionKind::LogDet;
    throw StructuralError("unknown criterion '" + name + "' (expected trace or logdet)");
}

InfoResult finalize_information(Eigen::MatrixXd m, std::span<const std::size_t> module_sizes,
                                const FisherOptions& options, bool truncation_converged)
{
    InfoResult r;
    r.truncation_converged = truncation_converged;
    const double norm = m.norm();
    r.asymmetry = norm > 0.0 ? (m - m.transpose()).norm() / norm : 0.0;
    r.information = 0.5 * (m + m.transpose());

    if (r.information.size() == 0)
        return r;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r.information, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    r.rcond = hi > 0.0 ? lo / hi : 0.0;
    if (!(r.rcond > options.rcond_threshold))
        return r;

    Eigen::LLT<Eigen::MatrixXd> llt(r.information);
    if (llt.info() != Eigen::Success)
        return r;
    const auto dim = r.information.rows();
    Eigen::MatrixXd p = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    p = 0.5 * (p + p.transpose());

    double logdet_m = 0.0;
    const Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index k = 0; k < dim; ++k)
        logdet_m += 2.0 * std::log(l(k, k));

    std::size_t offset = 0;
    for (auto size : module_sizes) {
        const auto o = static_cast<Eigen::Index>(offset);
        const auto s = static_cast<Eigen::Index>(size);
        r.module_blocks.push_back(p.block(o, o, s, s));
        offset += size;
    }
    r.trace = p.trace();
    r.logdet = -logdet_m;
    r.covariance = std::move(p);
    return r;
}

namespace
{

std::vector<std::size_t> module_sizes(const CascadeNetwork& net)
{
    std::vector<std::size_t> sizes;
    for (const auto& m : net.modules())
        sizes.push_back(m.parameter_count());
    return sizes;
}

void check_emp(const CascadeNetwork& net, const Emp& emp)
{
    emp.validate(net.node_count());
}

} // namespace

InfoResult information_matrix(const CascadeNetwork& net, const Emp& emp, const FisherOptions& options)
{
    check_emp(net, emp);
    const auto dim = static_cast<Eigen::Index>(net.parameter_count());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    bool converged = true;
    for (auto i : emp.excited) {
        for (auto j : emp.measured) {
            if (i >= j)
                continue;
            const auto stack = gradient_stack(net, i, j).flatten();
            const double weight = emp.sigma2.at(i) / emp.lambda.at(j);
            auto corr = white_correlation(stack, stack, weight, options.truncation);
            converged = converged && corr.converged;
            const auto o = static_cast<Eigen::Index>(net.parameter_offset(i));
            m.block(o, o, corr.value.rows(), corr.value.cols()) += corr.value;
        }
    }
    return finalize_information(std::move(m), module_sizes(net), options, converged);
}

std::optional<double> criterion(const InfoResult& result, CriterionKind kind)
{
    return kind == CriterionKind::Trace ? result.trace : result.logdet;
}

PairKernels::PairKernels(const CascadeNetwork& net, const FisherOptions& options, int threads)
    : n_(net.node_count()), options_(options), sizes_(module_sizes(net))
{
    offsets_.push_back(0);
    for (auto s : sizes_)
        offsets_.push_back(offsets_.back() + s);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 1; i < n_; ++i)
        for (std::size_t j = i + 1; j <= n_; ++j)
            pairs.emplace_back(i, j);
    kernels_.resize(pairs.size());
    std::vector<char> ok(pairs.size(), 1);
    ExceptionSlot slot;
    const auto count = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads)) if (threads != 1)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
        slot.run([&] {
            const auto [i, j] = pairs[p];
            const auto stack = gradient_stack(net, i, j).flatten();
            auto corr = white_correlation(stack, stack, 1.0, options_.truncation);
            kernels_[index(i, j)] = std::move(corr.value);
            ok[p] = corr.converged ? 1 : 0;
        });
    }
    slot.rethrow();
    converged_ = std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

std::size_t PairKernels::index(std::size_t i, std::size_t j) const
{
    if (i < 1 || i >= j || j > n_)
        throw DomainError("PairKernels: need 1 <= i < j <= n");
    // Pairs are laid out row by row over i.
    std::size_t before = 0;
    for (std::size_t r = 1; r < i; ++r)
        before += n_ - r;
    return before + (j - i - 1);
}

const Eigen::MatrixXd& PairKernels::kernel(std::size_t i, std::size_t j) const
{
    return kernels_[index(i, j)];
}

InfoResult PairKernels::evaluate(const Emp& emp) const
{
    emp.validate(n_);
    const auto dim = static_cast<Eigen::Index>(offsets_.back());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (auto i : emp.excited) {
        for (auto j : emp.measured) {
            if (i >= j)
                continue;
            const auto& k = kernel(i, j);
            const auto o = static_cast<Eigen::Index>(offsets_[i - 1]);
            m.block(o, o, k.rows(), k.cols()) += (emp.sigma2.at(i) / emp.lambda.at(j)) * k;
        }
    }
    return finalize_information(std::move(m), sizes_, options_, converged_);
}

} // namespace cascade_emp
