#include "cascade_emp/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <numbers>

#include "cascade_emp/cascade.hpp"
#include "cascade_emp/parallel.hpp"
#include "cascade_emp/ranking.hpp"
#include "cascade_emp/seed.hpp"

namespace cascade_emp
{

std::string to_string(ScenarioFamily f)
{
    switch (f) {
    case ScenarioFamily::FirButterworth: return "fir_butterworth";
    case ScenarioFamily::FirstOrder: return "first_order";
    case ScenarioFamily::SecondOrder: return "second_order";
    }
    return "?";
}

ScenarioFamily parse_scenario_family(const std::string& name)
{
    if (name == "fir_butterworth" || name == "fir" || name == "butterworth")
        return ScenarioFamily::FirButterworth;
    if (name == "first_order")
        return ScenarioFamily::FirstOrder;
    if (name == "second_order")
        return ScenarioFamily::SecondOrder;
    throw StructuralError("unknown scenario family '" + name
                          + "' (expected fir_butterworth, first_order or second_order)");
}

std::string to_string(VarianceMode m)
{
    return m == VarianceMode::Equal ? "equal" : "random";
}

VarianceMode parse_variance_mode(const std::string& name)
{
    if (name == "equal" || name == "i")
        return VarianceMode::Equal;
    if (name == "random" || name == "ii")
        return VarianceMode::Random;
    throw StructuralError("unknown variance mode '" + name + "' (expected equal or random)");
}

void ScenarioConfig::validate() const
{
    if (n < 2)
        throw StructuralError("scenario: n must be at least 2");
    if (runs < 1)
        throw StructuralError("scenario: runs must be at least 1");
    if (perturbation) {
        if (perturbation->module < 1 || perturbation->module >= n)
            throw StructuralError("scenario: perturbation module must lie in 1..n-1");
        if (perturbation->parameter < 1)
            throw StructuralError("scenario: perturbation parameter is 1-based");
        const std::size_t count = family == ScenarioFamily::FirstOrder    ? 2
                                  : family == ScenarioFamily::SecondOrder ? 4
                                                                          : 1;
        if (perturbation->parameter > count)
            throw StructuralError("scenario: perturbation parameter out of range for the family");
        if (!std::isfinite(perturbation->factor))
            throw StructuralError("scenario: perturbation factor must be finite");
    }
    if (truncation.max_len < 1 || !(truncation.tail_tol > 0.0))
        throw StructuralError("scenario: invalid truncation options");
}

TransferFunction butterworth_lowpass2(double cutoff)
{
    if (!(cutoff > 0.0 && cutoff < 0.5))
        throw DomainError("butterworth_lowpass2: cutoff must lie in (0, 0.5) cycles per sample");
    const double k = std::tan(std::numbers::pi * cutoff);
    const double k2 = k * k;
    const double d = 1.0 + std::numbers::sqrt2 * k + k2;
    const double b0 = k2 / d;
    return TransferFunction({b0, 2.0 * b0, b0},
                            {1.0, 2.0 * (k2 - 1.0) / d, (1.0 - std::numbers::sqrt2 * k + k2) / d});
}

ParamModule fir_butterworth(double cutoff)
{
    const auto ir = impulse_response(butterworth_lowpass2(cutoff), kDefaultMaxTaps, 1e-15);
    std::size_t last = 0;
    for (std::size_t l = 0; l < ir.taps.size(); ++l)
        if (std::abs(ir.taps[l]) >= kFirTruncation)
            last = l;
    return ParamModule(ModuleFamily::Fir, std::vector<double>(ir.taps.begin(), ir.taps.begin() + last + 1));
}

ParamModule sample_fir_butterworth(Rng& rng)
{
    std::uniform_real_distribution<double> cutoff(kButterworthCutoffMin, kButterworthCutoffMax);
    return fir_butterworth(cutoff(rng));
}

ParamModule sample_first_order(Rng& rng)
{
    std::uniform_real_distribution<double> a(0.1, 0.9);
    std::uniform_real_distribution<double> b(0.5, 2.0);
    const double av = a(rng);
    return ParamModule(ModuleFamily::FirstOrder, {av, b(rng)});
}

ParamModule sample_second_order(Rng& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double t3 = 0.0;
    double t4 = 0.0;
    if (u(rng) < 0.5) {
        // Area-uniform point of the right half disk and its conjugate.
        const double r = std::sqrt(u(rng));
        const double phi = std::numbers::pi * (u(rng) - 0.5);
        const std::complex<double> p = std::polar(r, phi);
        t3 = -2.0 * p.real();
        t4 = std::norm(p);
    } else {
        const double p1 = u(rng);
        const double p2 = u(rng);
        t3 = -(p1 + p2);
        t4 = p1 * p2;
    }
    std::uniform_real_distribution<double> zero(-3.0, 3.0);
    const double z = zero(rng);
    return ParamModule(ModuleFamily::SecondOrder, {1.0, -z, t3, t4});
}

ParamModule sample_module(ScenarioFamily family, Rng& rng)
{
    switch (family) {
    case ScenarioFamily::FirButterworth: return sample_fir_butterworth(rng);
    case ScenarioFamily::FirstOrder: return sample_first_order(rng);
    case ScenarioFamily::SecondOrder: return sample_second_order(rng);
    }
    throw StructuralError("unknown scenario family");
}

VarianceProfile sample_variances(VarianceMode mode, std::size_t n, Rng& rng)
{
    if (mode == VarianceMode::Equal)
        return VarianceProfile::uniform(n, 1.0, 0.01);
    std::uniform_real_distribution<double> u(0.001, 50.0);
    VarianceProfile p;
    for (std::size_t i = 0; i < n; ++i) {
        p.sigma2.push_back(u(rng));
        p.lambda.push_back(u(rng));
    }
    return p;
}

DrawnRun draw_run(const ScenarioConfig& cfg, std::uint64_t seed)
{
    Rng rng(seed);
    DrawnRun run;
    if (cfg.identical_modules) {
        const ParamModule m = sample_module(cfg.family, rng);
        run.modules.assign(cfg.n - 1, m);
    } else {
        for (std::size_t k = 1; k < cfg.n; ++k)
            run.modules.push_back(sample_module(cfg.family, rng));
    }
    if (const auto& p = cfg.perturbation) {
        auto& m = run.modules[p->module - 1];
        std::vector<double> theta(m.theta().begin(), m.theta().end());
        if (p->parameter > theta.size())
            throw StructuralError("scenario: perturbation parameter beyond module parameters");
        theta[p->parameter - 1] *= p->factor;
        m = m.with_theta(std::move(theta));
    }
    run.variances = sample_variances(cfg.variance_mode, cfg.n, rng);
    return run;
}

namespace
{

RunRecord execute_run(const ScenarioConfig& cfg, std::size_t index)
{
    RunRecord rec;
    rec.index = index;
    rec.seed = derive_seed(cfg.master_seed, index);
    try {
        const DrawnRun drawn = draw_run(cfg, rec.seed);
        const CascadeNetwork net(drawn.modules);
        const FisherOptions options{cfg.truncation, FisherOptions{}.rcond_threshold};
        const PairKernels kernels(net, options);
        if (!kernels.truncation_converged()) {
            rec.rejected = true;
            rec.reason = "impulse responses did not settle within max_len";
            return rec;
        }
        const EmpRanking ranking = rank_emps(kernels, cfg.n, drawn.variances, cfg.criterion);
        rec.non_informative = ranking.non_informative.size();
        rec.winner = ranking.best().canonical;
        if (ranking.entries.size() > 1) {
            rec.runner_up = ranking.entries[1].canonical;
            rec.runner_up_ratio = ranking.runner_up_ratio();
            rec.worst_ratio = ranking.worst_ratio();
        } else {
            rec.runner_up = rec.winner;
            rec.runner_up_ratio = 1.0;
            rec.worst_ratio = 1.0;
        }
    } catch (const EmptyRankingError& e) {
        rec.rejected = true;
        rec.reason = e.what();
        rec.non_informative = std::size_t{1} << (cfg.n - 2);
    } catch (const UnstableError& e) {
        rec.rejected = true;
        rec.reason = e.what();
    }
    return rec;
}

std::size_t nth_most(const std::vector<std::size_t>& counts, std::size_t rank)
{
    std::vector<std::size_t> order(counts.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    return order.at(rank);
}

} // namespace

std::size_t ScenarioReport::winner() const
{
    return nth_most(counts, 0);
}

std::size_t ScenarioReport::runner_up() const
{
    return counts.size() > 1 ? nth_most(counts, 1) : nth_most(counts, 0);
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, const ProgressFn& progress)
{
    cfg.validate();
    ScenarioReport report;
    report.config = cfg;
    report.patterns = enumerate_minimal(cfg.n);
    report.counts.assign(report.patterns.size(), 0);
    report.runs.resize(cfg.runs);

    std::atomic<std::size_t> finished{0};
    ExceptionSlot slot;
    const auto total = static_cast<std::ptrdiff_t>(cfg.runs);
    const int threads = cfg.threads;
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads)) if (threads != 1)
    for (std::ptrdiff_t r = 0; r < total; ++r) {
        slot.run([&] {
            report.runs[r] = execute_run(cfg, static_cast<std::size_t>(r));
            const std::size_t done = ++finished;
            if (progress) {
#pragma omp critical(cascade_emp_progress)
                progress(done, cfg.runs);
            }
        });
    }
    slot.rethrow();

    for (const auto& rec : report.runs) {
        report.non_informative += rec.non_informative;
        if (rec.rejected) {
            ++report.rejected;
            continue;
        }
        ++report.accepted;
        ++report.counts[rec.winner];
    }
    report.percents.assign(report.counts.size(), 0.0);
    if (report.accepted > 0)
        for (std::size_t c = 0; c < report.counts.size(); ++c)
            report.percents[c] = 100.0 * static_cast<double>(report.counts[c]) / static_cast<double>(report.accepted);
    return report;
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw DomainError("median of an empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1)
        return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

RatioStats ratio_stats(const ScenarioReport& report)
{
    std::vector<double> runner, worst;
    for (const auto& rec : report.runs) {
        if (rec.rejected)
            continue;
        runner.push_back(rec.runner_up_ratio);
        worst.push_back(rec.worst_ratio);
    }
    if (runner.empty())
        throw DomainError("ratio_stats: no accepted runs");
    return RatioStats{runner.size(), median(runner), median(worst)};
}

} // namespace cascade_emp
