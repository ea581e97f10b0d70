#include "cascade_emp/pem.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "cascade_emp/parallel.hpp"
#include "cascade_emp/seed.hpp"

namespace cascade_emp
{

namespace
{

void check_nodes(const CascadeNetwork& net, const Emp& emp)
{
    const std::size_t n = net.node_count();
    for (const NodeSet* set : {&emp.excited, &emp.measured}) {
        if (!std::is_sorted(set->begin(), set->end()) || std::adjacent_find(set->begin(), set->end()) != set->end())
            throw StructuralError("EMP node sets must be sorted and duplicate-free");
        for (auto v : *set)
            if (v < 1 || v > n)
                throw StructuralError("EMP node " + std::to_string(v) + " outside the network");
    }
    for (auto i : emp.excited)
        if (!emp.sigma2.count(i) || !(emp.sigma2.at(i) >= 0.0))
            throw StructuralError("missing or negative sigma2 for node " + std::to_string(i));
    for (auto j : emp.measured)
        if (!emp.lambda.count(j) || !(emp.lambda.at(j) >= 0.0))
            throw StructuralError("missing or negative lambda for node " + std::to_string(j));
}

double weight(const Emp& emp, std::size_t j)
{
    const double l = emp.lambda.at(j);
    return l > 0.0 ? 1.0 / l : 1.0;
}

} // namespace

std::vector<std::vector<double>> predict(const CascadeNetwork& net, const Emp& emp,
                                         const std::vector<std::vector<double>>& r)
{
    if (r.size() != emp.excited.size())
        throw StructuralError("predict: one input record per excited node required");
    const std::size_t samples = r.empty() ? 0 : r.front().size();
    const std::size_t n = net.node_count();
    std::vector<std::vector<double>> out;
    std::vector<double> w(samples, 0.0);
    std::size_t next_in = 0;
    std::size_t next_out = 0;
    for (std::size_t k = 1; k <= n && next_out < emp.measured.size(); ++k) {
        if (k > 1)
            w = net.module(k - 1).transfer_function().filter(w);
        if (next_in < emp.excited.size() && emp.excited[next_in] == k) {
            const auto& rk = r[next_in++];
            for (std::size_t t = 0; t < samples; ++t)
                w[t] += rk[t];
        }
        if (emp.measured[next_out] == k) {
            out.push_back(w);
            ++next_out;
        }
    }
    return out;
}

Dataset simulate(const CascadeNetwork& net, const Emp& emp, std::size_t samples, std::uint64_t seed)
{
    check_nodes(net, emp);
    if (samples < 1)
        throw DomainError("simulate: need at least one sample");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset data{net, emp, seed, {}, {}};
    for (auto i : emp.excited) {
        const double s = std::sqrt(emp.sigma2.at(i));
        std::vector<double> r(samples);
        for (auto& v : r)
            v = s * normal(rng);
        data.r.push_back(std::move(r));
    }
    data.y = predict(net, emp, data.r);
    for (std::size_t k = 0; k < emp.measured.size(); ++k) {
        const double s = std::sqrt(emp.lambda.at(emp.measured[k]));
        for (auto& v : data.y[k])
            v += s * normal(rng);
    }
    return data;
}

PemCost pem_cost(const Dataset& data, const CascadeNetwork& model, std::size_t discard)
{
    const auto& emp = data.emp;
    const std::size_t samples = data.samples();
    if (discard >= samples)
        throw DomainError("pem: discard leaves no samples");
    const auto dim = static_cast<Eigen::Index>(model.parameter_count());
    PemCost cost;
    cost.gradient = Eigen::VectorXd::Zero(dim);
    cost.normal = Eigen::MatrixXd::Zero(dim, dim);

    const auto yhat = predict(model, emp, data.r);
    const auto used = static_cast<Eigen::Index>(samples - discard);
    for (std::size_t jj = 0; jj < emp.measured.size(); ++jj) {
        const std::size_t j = emp.measured[jj];
        const double wj = weight(emp, j);
        Eigen::VectorXd eps(used);
        for (Eigen::Index t = 0; t < used; ++t)
            eps(t) = data.y[jj][discard + t] - yhat[jj][discard + t];
        cost.value += wj * eps.squaredNorm();

        // psi_j: rows are parameters, filled from every excited node upstream.
        Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(dim, used);
        for (std::size_t ii = 0; ii < emp.excited.size(); ++ii) {
            const std::size_t i = emp.excited[ii];
            if (i >= j)
                continue;
            const auto stack = gradient_stack(model, i, j);
            auto row = static_cast<Eigen::Index>(model.parameter_offset(i));
            for (const auto& block : stack.blocks) {
                for (const auto& f : block.entries) {
                    const auto filtered = f.filter(data.r[ii]);
                    for (Eigen::Index t = 0; t < used; ++t)
                        psi(row, t) += filtered[discard + t];
                    ++row;
                }
            }
        }
        cost.gradient -= 2.0 * wj * psi * eps;
        cost.normal += wj * psi * psi.transpose();
    }
    return cost;
}

namespace
{

std::optional<CascadeNetwork> try_model(const CascadeNetwork& truth, const std::vector<double>& theta)
{
    try {
        return truth.with_theta(theta);
    } catch (const UnstableError&) {
        return std::nullopt;
    } catch (const StructuralError&) {
        return std::nullopt;
    }
}

} // namespace

PemEstimate pem_fit(const Dataset& data, const std::vector<double>& theta_init, const PemOptions& options)
{
    check_nodes(data.truth, data.emp);
    auto model = try_model(data.truth, theta_init);
    if (!model)
        throw UnstableError("pem_fit: initial parameters give an unstable or invalid model");
    PemEstimate est;
    est.theta = theta_init;
    PemCost current = pem_cost(data, *model, options.discard);
    est.initial_cost = current.value;

    const auto dim = static_cast<Eigen::Index>(theta_init.size());
    for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
        const Eigen::MatrixXd& h = current.normal;
        const Eigen::VectorXd rhs = -0.5 * current.gradient;
        const double scale = std::max(h.diagonal().maxCoeff(), std::numeric_limits<double>::min());
        bool accepted = false;
        double mu = 0.0;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            Eigen::MatrixXd damped = h;
            damped.diagonal().array() += mu * scale;
            const Eigen::VectorXd step = damped.ldlt().solve(rhs);
            mu = mu == 0.0 ? 1e-6 : mu * 10.0;
            if (!step.allFinite())
                continue;
            std::vector<double> trial = est.theta;
            for (Eigen::Index m = 0; m < dim; ++m)
                trial[m] += step(m);
            auto trial_model = try_model(data.truth, trial);
            if (!trial_model)
                continue;
            PemCost next = pem_cost(data, *trial_model, options.discard);
            if (!(next.value <= current.value))
                continue;
            const double decrease = current.value - next.value;
            est.theta = std::move(trial);
            ++est.iterations;
            accepted = true;
            const bool small = decrease <= options.cost_tolerance * std::max(current.value, 1e-300);
            current = std::move(next);
            if (small) {
                est.converged = true;
                est.cost = current.value;
                return est;
            }
        }
        if (!accepted) {
            // No damping level improves the cost: a local minimum to
            // working precision when the gradient is negligible.
            const double g = current.gradient.norm();
            est.converged = g <= 1e-6 * std::max(1.0, current.value);
            est.cost = current.value;
            return est;
        }
    }
    est.cost = current.value;
    return est;
}

CovarianceComparison empirical_covariance(const CascadeNetwork& net, const Emp& emp, std::size_t samples,
                                          std::size_t replications, std::uint64_t seed,
                                          const PemOptions& options, int threads)
{
    if (replications < kMinReplications)
        throw DomainError("empirical_covariance: at least " + std::to_string(kMinReplications)
                          + " replications required");
    if (samples <= options.discard)
        throw DomainError("empirical_covariance: samples must exceed the discarded transient");
    const InfoResult info = information_matrix(net, emp);
    if (!info.informative())
        throw NonInformativeError("empirical_covariance: EMP " + to_string(emp.pattern()) + " is non-informative");

    const std::vector<double> truth = net.stacked_theta();
    const auto dim = static_cast<Eigen::Index>(truth.size());
    std::vector<std::optional<Eigen::VectorXd>> errors(replications);
    ExceptionSlot slot;
    const auto count = static_cast<std::ptrdiff_t>(replications);
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads)) if (threads != 1)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        slot.run([&] {
            const Dataset data = simulate(net, emp, samples, derive_seed(seed, static_cast<std::uint64_t>(k)));
            const PemEstimate est = pem_fit(data, truth, options);
            if (!est.converged)
                return;
            Eigen::VectorXd e(dim);
            for (Eigen::Index m = 0; m < dim; ++m)
                e(m) = est.theta[m] - truth[m];
            errors[k] = std::move(e);
        });
    }
    slot.rethrow();

    CovarianceComparison cmp;
    cmp.samples = samples;
    cmp.replications = replications;
    std::vector<Eigen::VectorXd> ok;
    for (auto& e : errors)
        if (e)
            ok.push_back(std::move(*e));
    cmp.failed = replications - ok.size();
    cmp.unreliable = static_cast<double>(cmp.failed) > kMaxFailureFraction * static_cast<double>(replications);
    cmp.theoretical = *info.covariance;
    cmp.theoretical_trace = *info.trace;
    if (ok.size() < 2) {
        cmp.unreliable = true;
        cmp.deviation = std::numeric_limits<double>::infinity();
        return cmp;
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& e : ok)
        mean += e;
    mean /= static_cast<double>(ok.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& e : ok)
        cov += (e - mean) * (e - mean).transpose();
    cov /= static_cast<double>(ok.size() - 1);
    cmp.raw_trace = cov.trace();
    cmp.empirical = static_cast<double>(samples - options.discard) * cov;
    cmp.empirical_trace = cmp.empirical.trace();
    cmp.deviation = std::abs(cmp.empirical_trace - cmp.theoretical_trace) / cmp.theoretical_trace;
    return cmp;
}

void write_dataset_csv(std::ostream& out, const Dataset& data)
{
    out << 't';
    for (auto i : data.emp.excited)
        out << ",r" << i;
    for (auto j : data.emp.measured)
        out << ",y" << j;
    out << '\n';
    out.precision(17);
    for (std::size_t t = 0; t < data.samples(); ++t) {
        out << t;
        for (const auto& r : data.r)
            out << ',' << r[t];
        for (const auto& y : data.y)
            out << ',' << y[t];
        out << '\n';
    }
}

Dataset read_dataset_csv(std::istream& in, const CascadeNetwork& net, const Emp& emp)
{
    check_nodes(net, emp);
    std::string line;
    if (!std::getline(in, line))
        throw StructuralError("dataset CSV: missing header");
    std::string expected = "t";
    for (auto i : emp.excited)
        expected += ",r" + std::to_string(i);
    for (auto j : emp.measured)
        expected += ",y" + std::to_string(j);
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != expected)
        throw StructuralError("dataset CSV: header '" + line + "' does not match '" + expected + "'");

    Dataset data{net, emp, 0, std::vector<std::vector<double>>(emp.excited.size()),
                 std::vector<std::vector<double>>(emp.measured.size())};
    const std::size_t columns = 1 + emp.excited.size() + emp.measured.size();
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r")
            continue;
        std::istringstream fields(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(fields, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw StructuralError("dataset CSV: bad number '" + cell + "' on row " + std::to_string(row + 1));
            }
        }
        if (values.size() != columns)
            throw StructuralError("dataset CSV: row " + std::to_string(row + 1) + " has "
                                  + std::to_string(values.size()) + " fields, expected " + std::to_string(columns));
        if (values[0] != static_cast<double>(row))
            throw StructuralError("dataset CSV: rows must be consecutive from t = 0");
        for (std::size_t k = 0; k < emp.excited.size(); ++k)
            data.r[k].push_back(values[1 + k]);
        for (std::size_t k = 0; k < emp.measured.size(); ++k)
            data.y[k].push_back(values[1 + emp.excited.size() + k]);
        ++row;
    }
    return data;
}

} // namespace cascade_emp
