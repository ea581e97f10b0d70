#ifndef CASCADE_EMP_MONTE_CARLO_HPP
#define CASCADE_EMP_MONTE_CARLO_HPP

/** @file
 * Randomized EMP-selection experiments: draw cascades from a module family,
 * rank every minimal EMP per draw, and count how often each one wins.
 */

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cascade_emp/emp.hpp"
#include "cascade_emp/fisher.hpp"
#include "cascade_emp/lti.hpp"

namespace cascade_emp
{

enum class ScenarioFamily
{
    FirButterworth,
    FirstOrder,
    SecondOrder,
};

std::string to_string(ScenarioFamily f);
ScenarioFamily parse_scenario_family(const std::string& name);

enum class VarianceMode
{
    Equal,  ///< sigma2 = 1, lambda = 0.01 everywhere
    Random, ///< every sigma2_i and lambda_j drawn from U(0.001, 50)
};

std::string to_string(VarianceMode m);
VarianceMode parse_variance_mode(const std::string& name);

/// Multiply parameter @c parameter (1-based) of module @c module (1-based)
/// by @c factor after drawing.
struct Perturbation
{
    std::size_t module = 1;
    std::size_t parameter = 1;
    double factor = 10.0;
};

struct ScenarioConfig
{
    std::size_t n = 4;
    ScenarioFamily family = ScenarioFamily::FirstOrder;
    std::size_t runs = 1000;
    VarianceMode variance_mode = VarianceMode::Equal;
    /// Draw one module and copy it onto every edge.
    bool identical_modules = false;
    std::optional<Perturbation> perturbation;
    std::uint64_t master_seed = 1;
    CriterionKind criterion = CriterionKind::Trace;
    /// 0 means the OpenMP default.
    int threads = 0;
    TruncationOptions truncation{1u << 15, kDefaultTailTolerance};

    /// Throws StructuralError on an inconsistent configuration.
    void validate() const;
};

using Rng = std::mt19937_64;

inline constexpr double kButterworthCutoffMin = 0.1;
inline constexpr double kButterworthCutoffMax = 0.4;
inline constexpr double kFirTruncation = 1e-4;

/**
 * Second-order lowpass Butterworth by the bilinear transform with
 * prewarping.  @p cutoff is in cycles per sample (Hz at a 1 Hz sample
 * rate), in (0, 0.5).
 */
TransferFunction butterworth_lowpass2(double cutoff);

/// Impulse response of butterworth_lowpass2(cutoff) cut after the last tap
/// with magnitude >= kFirTruncation, as an FIR module.
ParamModule fir_butterworth(double cutoff);

ParamModule sample_fir_butterworth(Rng& rng);
ParamModule sample_first_order(Rng& rng);
ParamModule sample_second_order(Rng& rng);
ParamModule sample_module(ScenarioFamily family, Rng& rng);

VarianceProfile sample_variances(VarianceMode mode, std::size_t n, Rng& rng);

struct RunRecord
{
    std::size_t index = 0;
    std::uint64_t seed = 0;
    bool rejected = false;
    std::string reason;
    /// Canonical index of the winning EMP.
    std::size_t winner = 0;
    std::size_t runner_up = 0;
    /// Criterion ratios against the winner (trace ratios for trace,
    /// determinant ratios for logdet).
    double runner_up_ratio = 0.0;
    double worst_ratio = 0.0;
    std::size_t non_informative = 0;
};

struct ScenarioReport
{
    ScenarioConfig config;
    std::vector<Pattern> patterns;
    std::vector<std::size_t> counts;
    /// counts as percentages of accepted runs.
    std::vector<double> percents;
    std::vector<RunRecord> runs;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t non_informative = 0;

    /// Most selected canonical index (lowest index on ties).
    std::size_t winner() const;
    /// Second most selected.
    std::size_t runner_up() const;
};

/// Called after each finished run with (finished, total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

/**
 * Executes every run of @p cfg.  Run r uses derive_seed(master_seed, r), so
 * the report does not depend on the thread count.  Runs where drawing fails
 * (impulse responses not settled within max_len) or where every EMP is
 * singular are recorded as rejected.
 */
ScenarioReport run_scenario(const ScenarioConfig& cfg, const ProgressFn& progress = {});

/// The network of run @p index, as run_scenario draws it.
struct DrawnRun
{
    std::vector<ParamModule> modules;
    VarianceProfile variances;
};
DrawnRun draw_run(const ScenarioConfig& cfg, std::uint64_t seed);

struct RatioStats
{
    std::size_t runs = 0;
    double median_runner_up = 0.0;
    double median_worst = 0.0;
};

/// Medians of runner-up/best and worst/best over accepted runs.  Throws
/// DomainError if there are none.
RatioStats ratio_stats(const ScenarioReport& report);

double median(std::vector<double> values);

} // namespace cascade_emp

#endif
