#include "cascade_emp/reference.hpp"

#include <limits>

namespace cascade_emp::reference
{

std::vector<double> impulse_response(const TransferFunction& tf, std::size_t length)
{
    std::vector<double> h(length, 0.0);
    if (tf.is_zero())
        return h;
    const auto& num = tf.numerator();
    const auto& den = tf.denominator();
    // B(q)/A(q) with deg A = na, deg B = nb: h(t) = b_{t - (na - nb)} - sum a_k h(t - k).
    const std::size_t na = den.size() - 1;
    const std::size_t lag = na - (num.size() - 1);
    for (std::size_t t = 0; t < length; ++t) {
        double v = 0.0;
        if (t >= lag && t - lag < num.size())
            v = num[t - lag];
        for (std::size_t k = 1; k <= na && k <= t; ++k)
            v -= den[k] * h[t - k];
        h[t] = v;
    }
    return h;
}

Eigen::MatrixXd white_correlation(std::span<const TransferFunction> a, std::span<const TransferFunction> b,
                                  double variance, std::size_t length)
{
    std::vector<std::vector<double>> ha, hb;
    for (const auto& f : a)
        ha.push_back(reference::impulse_response(f, length));
    for (const auto& f : b)
        hb.push_back(reference::impulse_response(f, length));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t p = 0; p < a.size(); ++p) {
        for (std::size_t q = 0; q < b.size(); ++q) {
            double s = 0.0;
            for (std::size_t t = 0; t < length; ++t)
                s += ha[p][t] * hb[q][t];
            out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = variance * s;
        }
    }
    return out;
}

Eigen::MatrixXd information_matrix(const CascadeNetwork& net, const Emp& emp, std::size_t length)
{
    emp.validate(net.node_count());
    const auto dim = static_cast<Eigen::Index>(net.parameter_count());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
    for (auto i : emp.excited) {
        for (auto j : emp.measured) {
            if (i >= j)
                continue;
            const auto stack = gradient_stack(net, i, j).flatten();
            const Eigen::MatrixXd k = white_correlation(stack, stack, emp.sigma2.at(i) / emp.lambda.at(j), length);
            const auto o = static_cast<Eigen::Index>(net.parameter_offset(i));
            for (Eigen::Index r = 0; r < k.rows(); ++r)
                for (Eigen::Index c = 0; c < k.cols(); ++c)
                    m(o + r, o + c) += k(r, c);
        }
    }
    return m;
}

std::vector<double> criterion_values(const CascadeNetwork& net, const VarianceProfile& profile,
                                     CriterionKind kind, const FisherOptions& options)
{
    std::vector<double> out;
    for (const auto& p : enumerate_minimal(net.node_count())) {
        const InfoResult info = cascade_emp::information_matrix(net, profile.apply(p), options);
        const auto v = criterion(info, kind);
        out.push_back(v ? *v : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

} // namespace cascade_emp::reference
