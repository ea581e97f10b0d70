#include "cascade_emp/lti.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace cascade_emp
{

namespace
{

bool all_zero(const Coefficients& c)
{
    return std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
}

Coefficients trim_leading_zeros(Coefficients c)
{
    auto first = std::find_if(c.begin(), c.end(), [](double v) { return v != 0.0; });
    if (first == c.end())
        return Coefficients{0.0};
    c.erase(c.begin(), first);
    return c;
}

Coefficients monomial(std::size_t power)
{
    Coefficients c(power + 1, 0.0);
    c[0] = 1.0;
    return c;
}

void filter_section(const Section& s, std::span<const double> in, std::span<double> out)
{
    const std::size_t na = s.den.size() - 1;
    const std::size_t nb = s.num.size() - 1;
    const std::size_t delay = na - nb;
    const std::ptrdiff_t n_in = static_cast<std::ptrdiff_t>(in.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= nb; ++k) {
            const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(t)
                                       - static_cast<std::ptrdiff_t>(delay + k);
            if (idx < 0)
                break;
            if (idx < n_in)
                acc += s.num[k] * in[static_cast<std::size_t>(idx)];
        }
        const std::size_t lags = std::min(na, t);
        for (std::size_t i = 1; i <= lags; ++i)
            acc -= s.den[i] * out[t - i];
        out[t] = acc;
    }
}

} // namespace

Coefficients poly_multiply(const Coefficients& a, const Coefficients& b)
{
    Coefficients c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            c[i + j] += a[i] * b[j];
    return c;
}

std::vector<std::complex<double>> polynomial_roots(const Coefficients& poly)
{
    Coefficients p = trim_leading_zeros(poly);
    std::vector<std::complex<double>> roots;
    // Roots at the origin come from trailing zeros; peel them off exactly.
    while (p.size() > 1 && p.back() == 0.0) {
        roots.emplace_back(0.0, 0.0);
        p.pop_back();
    }
    const std::size_t degree = p.size() - 1;
    if (degree == 0)
        return roots;
    if (degree == 1) {
        roots.emplace_back(-p[1] / p[0], 0.0);
        return roots;
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    for (std::size_t j = 0; j < degree; ++j)
        companion(0, j) = -p[j + 1] / p[0];
    for (std::size_t i = 1; i < degree; ++i)
        companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
        roots.push_back(solver.eigenvalues()(i));
    return roots;
}

TransferFunction::TransferFunction(Coefficients numerator, Coefficients denominator)
{
    if (numerator.empty() || denominator.empty())
        throw StructuralError("transfer function needs non-empty numerator and denominator");
    if (all_zero(denominator))
        throw StructuralError("transfer function denominator is identically zero");
    if (all_zero(numerator))
        throw StructuralError("all-zero numerator: use TransferFunction::zero()");
    for (double v : numerator)
        if (!std::isfinite(v))
            throw StructuralError("non-finite numerator coefficient");
    for (double v : denominator)
        if (!std::isfinite(v))
            throw StructuralError("non-finite denominator coefficient");

    Coefficients num = trim_leading_zeros(std::move(numerator));
    Coefficients den = trim_leading_zeros(std::move(denominator));
    if (num.size() > den.size())
        throw StructuralError("improper transfer function: numerator degree exceeds denominator degree");
    const double lead = den[0];
    for (double& v : den)
        v /= lead;
    for (double& v : num)
        v /= lead;
    den[0] = 1.0;

    poles_ = polynomial_roots(den);
    sections_.push_back(Section{std::move(num), std::move(den)});
    rebuild_expanded();
}

TransferFunction TransferFunction::unit()
{
    return TransferFunction(Coefficients{1.0}, Coefficients{1.0});
}

TransferFunction TransferFunction::zero()
{
    TransferFunction tf;
    tf.zero_ = true;
    tf.sections_.push_back(Section{Coefficients{0.0}, Coefficients{1.0}});
    tf.rebuild_expanded();
    return tf;
}

TransferFunction TransferFunction::delay(std::size_t k)
{
    return TransferFunction(Coefficients{1.0}, monomial(k));
}

bool TransferFunction::is_unit() const noexcept
{
    return num_.size() == 1 && den_.size() == 1 && num_[0] == 1.0;
}

void TransferFunction::rebuild_expanded()
{
    num_ = Coefficients{1.0};
    den_ = Coefficients{1.0};
    for (const auto& s : sections_) {
        num_ = poly_multiply(num_, s.num);
        den_ = poly_multiply(den_, s.den);
    }
    radius_ = 0.0;
    for (const auto& p : poles_)
        radius_ = std::max(radius_, std::abs(p));
}

std::complex<double> TransferFunction::evaluate(std::complex<double> z) const
{
    if (zero_)
        return {0.0, 0.0};
    std::complex<double> value{1.0, 0.0};
    for (const auto& s : sections_) {
        std::complex<double> n{0.0, 0.0}, d{0.0, 0.0};
        for (double c : s.num)
            n = n * z + c;
        for (double c : s.den)
            d = d * z + c;
        value *= n / d;
    }
    return value;
}

void TransferFunction::filter(std::span<const double> in, std::span<double> out) const
{
    if (zero_) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    std::vector<double> buffer(in.begin(), in.end());
    std::vector<double> next(out.size());
    for (const auto& s : sections_) {
        filter_section(s, buffer, next);
        buffer.assign(next.begin(), next.end());
    }
    std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(out.size()), out.begin());
}

std::vector<double> TransferFunction::filter(std::span<const double> in) const
{
    std::vector<double> out(in.size());
    filter(in, out);
    return out;
}

TransferFunction series(const TransferFunction& a, const TransferFunction& b)
{
    if (a.is_zero() || b.is_zero())
        return TransferFunction::zero();
    if (a.is_unit())
        return b;
    if (b.is_unit())
        return a;
    TransferFunction out;
    out.sections_ = a.sections_;
    out.sections_.insert(out.sections_.end(), b.sections_.begin(), b.sections_.end());
    out.poles_ = a.poles_;
    out.poles_.insert(out.poles_.end(), b.poles_.begin(), b.poles_.end());
    out.rebuild_expanded();
    return out;
}

bool is_stable(const TransferFunction& tf, double margin)
{
    return tf.spectral_radius() < margin;
}

ImpulseResponse impulse_response(const TransferFunction& tf, std::size_t max_len, double tail_tol)
{
    if (max_len < 1)
        throw StructuralError("impulse_response: max_len must be at least 1");
    if (!(tail_tol > 0.0))
        throw StructuralError("impulse_response: tail_tol must be positive");
    if (!is_stable(tf))
        throw UnstableError("impulse_response: filter is not stable (spectral radius "
                            + std::to_string(tf.spectral_radius()) + ")");
    if (tf.is_zero())
        return ImpulseResponse{{0.0}, true};

    const std::size_t order = tf.order();
    const double radius = tf.spectral_radius();

    auto run = [&](std::size_t length) {
        std::vector<double> impulse{1.0};
        std::vector<double> h(length);
        tf.filter(impulse, h);
        return h;
    };

    if (radius == 0.0) {
        // All poles at the origin: the response is exactly zero past the order.
        const std::size_t length = std::min(order + 1, max_len);
        auto h = run(length);
        while (h.size() > 1 && h.back() == 0.0)
            h.pop_back();
        return ImpulseResponse{std::move(h), order + 1 <= max_len};
    }

    const auto decay = static_cast<std::size_t>(std::ceil(std::log(0.01) / std::log(radius)));
    const std::size_t window = order + std::max<std::size_t>(decay, 1);
    std::size_t length = std::min(max_len, std::max<std::size_t>(64, 4 * window));
    for (;;) {
        auto h = run(length);
        const bool settled =
            length >= window + order
            && std::all_of(h.end() - static_cast<std::ptrdiff_t>(window), h.end(),
                           [&](double v) { return std::abs(v) < tail_tol; });
        if (settled) {
            std::size_t last = h.size();
            while (last > 1 && std::abs(h[last - 1]) < tail_tol)
                --last;
            h.resize(last);
            return ImpulseResponse{std::move(h), true};
        }
        if (length == max_len)
            return ImpulseResponse{std::move(h), false};
        length = std::min(max_len, 2 * length);
    }
}

std::string to_string(ModuleFamily family)
{
    switch (family) {
    case ModuleFamily::Fir: return "fir";
    case ModuleFamily::FirstOrder: return "first_order";
    case ModuleFamily::SecondOrder: return "second_order";
    }
    return "unknown";
}

ModuleFamily parse_family(const std::string& name)
{
    std::string key;
    for (char c : name)
        if (c != '_' && c != '-' && c != ' ')
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (key == "fir")
        return ModuleFamily::Fir;
    if (key == "firstorder" || key == "first")
        return ModuleFamily::FirstOrder;
    if (key == "secondorder" || key == "second")
        return ModuleFamily::SecondOrder;
    throw StructuralError("unknown module family '" + name + "'");
}

std::size_t family_parameter_count(ModuleFamily family) noexcept
{
    switch (family) {
    case ModuleFamily::Fir: return 0;
    case ModuleFamily::FirstOrder: return 2;
    case ModuleFamily::SecondOrder: return 4;
    }
    return 0;
}

TransferFunction realize(ModuleFamily family, std::span<const double> theta)
{
    const std::size_t expected = family_parameter_count(family);
    if (family == ModuleFamily::Fir ? theta.empty() : theta.size() != expected)
        throw StructuralError(to_string(family) + " module expects "
                              + (expected ? std::to_string(expected) : std::string("at least 1"))
                              + " parameters, got " + std::to_string(theta.size()));

    Coefficients num, den;
    switch (family) {
    case ModuleFamily::Fir:
        num.assign(theta.begin(), theta.end());
        den = monomial(theta.size() - 1);
        break;
    case ModuleFamily::FirstOrder:
        num = {theta[1]};
        den = {1.0, theta[0]};
        break;
    case ModuleFamily::SecondOrder:
        num = {theta[0], theta[1]};
        den = {1.0, theta[2], theta[3]};
        break;
    }
    if (all_zero(num))
        return TransferFunction::zero();
    return TransferFunction(std::move(num), std::move(den));
}

ParamModule::ParamModule(ModuleFamily family, std::vector<double> theta)
    : family_(family), theta_(std::move(theta)), tf_(realize(family_, theta_))
{
    if (!is_stable(tf_))
        throw UnstableError(to_string(family_) + " module is unstable (largest pole magnitude "
                            + std::to_string(tf_.spectral_radius()) + ")");
}

ParamModule ParamModule::with_theta(std::vector<double> theta) const
{
    return ParamModule(family_, std::move(theta));
}

namespace
{

// d/d(num coeff of q^j) of B/A.
TransferFunction numerator_derivative(std::size_t power, const Coefficients& den)
{
    return TransferFunction(monomial(power), den);
}

// d/d(den coeff of q^j) of B/A = -(B/A)(q^j/A).
TransferFunction denominator_derivative(std::size_t power, const Coefficients& num,
                                        const Coefficients& den)
{
    if (all_zero(num))
        return TransferFunction::zero();
    Coefficients negated = num;
    for (double& v : negated)
        v = -v;
    return series(TransferFunction(negated, den), TransferFunction(monomial(power), den));
}

} // namespace

std::vector<TransferFunction> param_jacobian(const ParamModule& module)
{
    const auto theta = module.theta();
    std::vector<TransferFunction> jac;
    jac.reserve(theta.size());
    switch (module.family()) {
    case ModuleFamily::Fir:
        for (std::size_t k = 0; k < theta.size(); ++k)
            jac.push_back(TransferFunction::delay(k));
        break;
    case ModuleFamily::FirstOrder: {
        const Coefficients den{1.0, theta[0]};
        const Coefficients num{theta[1]};
        jac.push_back(denominator_derivative(0, num, den));
        jac.push_back(numerator_derivative(0, den));
        break;
    }
    case ModuleFamily::SecondOrder: {
        const Coefficients den{1.0, theta[2], theta[3]};
        const Coefficients num{theta[0], theta[1]};
        jac.push_back(numerator_derivative(1, den));
        jac.push_back(numerator_derivative(0, den));
        jac.push_back(denominator_derivative(1, num, den));
        jac.push_back(denominator_derivative(0, num, den));
        break;
    }
    }
    return jac;
}

} // namespace cascade_emp
