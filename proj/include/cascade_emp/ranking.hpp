#ifndef CASCADE_EMP_RANKING_HPP
#define CASCADE_EMP_RANKING_HPP

/** @file
 * Ranking of minimal EMPs by accuracy criterion, and executable checks of
 * the structural accuracy results for cascades: SNR decision rules, mirror
 * equivalence, the four-node block formulas and the first/last module
 * results.
 */

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cascade_emp/cascade.hpp"
#include "cascade_emp/emp.hpp"
#include "cascade_emp/fisher.hpp"

namespace cascade_emp
{

/// Every EMP was singular for this network.
class EmptyRankingError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct RankEntry
{
    Emp emp;
    std::size_t canonical = 0;
    double value = 0.0;
    double trace = 0.0;
    /// trace of each module's diagonal block of P.
    std::vector<double> module_traces;
    NodeSet direct;
};

struct NonInformativeEntry
{
    Emp emp;
    std::size_t canonical = 0;
    double rcond = 0.0;
};

/**
 * Informative EMPs sorted ascending by criterion value (ties within 1e-12
 * relative keep canonical enumeration order); singular EMPs are listed
 * separately and never ranked.
 */
struct EmpRanking
{
    CriterionKind kind = CriterionKind::Trace;
    std::vector<RankEntry> entries;
    std::vector<NonInformativeEntry> non_informative;
    bool truncation_converged = true;

    const RankEntry& best() const { return entries.front(); }
    const RankEntry& worst() const { return entries.back(); }
    /// Criterion ratio runner-up/best; for logdet the ratio of determinants.
    /// NaN with a single informative EMP.
    double runner_up_ratio() const;
    double worst_ratio() const;
};

inline constexpr double kTieTolerance = 1e-12;

/// Ratio of two criterion values as a ratio of trace or of determinant.
double criterion_ratio(CriterionKind kind, double value, double reference);

/**
 * Evaluates every minimal EMP of the network under @p profile.  Pair Gram
 * matrices are shared across EMPs; EMP evaluations run on @p threads.
 * Throws EmptyRankingError if no EMP is informative.
 */
EmpRanking rank_emps(const CascadeNetwork& net, const VarianceProfile& profile, CriterionKind kind,
                     const FisherOptions& options = {}, int threads = 1);

/// Same as rank_emps but over precomputed kernels (single-threaded).
EmpRanking rank_emps(const PairKernels& kernels, std::size_t n, const VarianceProfile& profile,
                     CriterionKind kind);

/// Orders informative entries and applies the canonical tie-break.
void sort_ranking(std::vector<RankEntry>& entries, CriterionKind kind);

enum class ThreeNodeChoice
{
    EmpI,  ///< ({1},{2,3})
    EmpII, ///< ({1,2},{3})
    Tie,
};

std::string to_string(ThreeNodeChoice c);

/// EMP II wins iff sigma2_2/lambda_3 > sigma2_1/lambda_2.
ThreeNodeChoice snr_rule_3node(double snr21, double snr32);

/// SNR_ji = sigma2_i / lambda_j for the pairs that appear in the 4-node rules.
struct FourNodeSnr
{
    double snr21 = 1.0;
    double snr31 = 1.0;
    double snr32 = 1.0;
    double snr42 = 1.0;
    double snr43 = 1.0;

    static FourNodeSnr from_profile(const VarianceProfile& profile);
};

enum class ConditionStatus
{
    Holds,
    DoesNotHold,
    Inconclusive, ///< on the boundary: neither strict inequality
};

std::string to_string(ConditionStatus s);

struct PairwisePreference
{
    std::string better;
    std::string worse;
    std::string condition;
    ConditionStatus status = ConditionStatus::Inconclusive;
};

/**
 * The three sufficient conditions for identical modules on four nodes:
 * II over I when SNR43 > SNR21 and SNR42 > SNR31; III over I when
 * SNR32 > SNR43; III over II when SNR32 > SNR21.  They are sufficient only,
 * so no total order is produced.
 */
std::array<PairwisePreference, 3> snr_rule_4node(const FourNodeSnr& snr);

/// Block reversal permutation (module k <-> module n-k) for equal block sizes.
Eigen::MatrixXd mirror_permutation(const CascadeNetwork& net);

struct MirrorPairCheck
{
    Pattern pattern;
    Pattern mirrored;
    double deviation = 0.0;
    /// max|M_mirror - Q M Q^T| / max|M|; NaN when block sizes differ.
    double block_residual = 0.0;
    bool excluded = false;
    std::string note;
};

struct MirrorReport
{
    bool hypotheses_met = false;
    std::vector<MirrorPairCheck> pairs;
    double max_deviation = 0.0;
    double max_block_residual = 0.0;
};

/**
 * For every minimal EMP e (each unordered pair once), the relative trace
 * difference between e and mirror(e) under @p profile.  The equal-accuracy
 * result needs identical modules and equal variances; when these are not
 * met the report says so and still lists the deviations.
 */
MirrorReport verify_mirror(const CascadeNetwork& net, const VarianceProfile& profile,
                           const FisherOptions& options = {});

struct ModuleAccuracyRow
{
    std::size_t module = 0;
    double block_trace = 0.0;
    bool direct = false;
};

struct ModuleAccuracyReport
{
    std::vector<ModuleAccuracyRow> rows;
    bool hypotheses_met = false;
    /// The module with the smallest block trace is a direct module.
    bool direct_module_most_accurate = false;
};

/// Throws NonInformativeError when the EMP is not informative.
ModuleAccuracyReport module_accuracy_report(const CascadeNetwork& net, const Emp& emp,
                                            const FisherOptions& options = {});

/**
 * Four-node block matrices with one module G and equal variances:
 * A = (s/l) E[G'r G'r^T], B with G'G r, C with G'GG r.
 */
struct BlockTerms
{
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;
    Eigen::MatrixXd c;
};

BlockTerms four_node_terms(const ParamModule& module, double sigma2, double lambda,
                           const TruncationOptions& truncation = {});

/// Expected information matrix for one of the four 4-node EMPs built from
/// the block terms (equal variances).
Eigen::MatrixXd expected_four_node_information(const Pattern& pattern, const BlockTerms& t);
/// Expected diagonal covariance blocks for the four 4-node EMPs.
std::vector<Eigen::MatrixXd> expected_four_node_covariance(const Pattern& pattern, const BlockTerms& t);

struct BlockIdentityCheck
{
    Pattern pattern;
    double information_error = 0.0;
    double covariance_error = 0.0;
};

/// Max relative errors of assembled M and P blocks against the closed forms.
std::vector<BlockIdentityCheck> check_four_node_blocks(const CascadeNetwork& net, double sigma2, double lambda,
                                                       const FisherOptions& options = {});

struct EndModuleCheck
{
    bool first_applies = false;
    double first_error = 0.0;
    bool last_applies = false;
    double last_error = 0.0;
};

/**
 * With G_1 = G_2 and node 2 measured, P's first block equals
 * (sigma2_1/lambda_2 E[G_1'r G_1'r^T])^{-1}; dually for the last module when
 * G_{n-2} = G_{n-1} and node n-1 is excited.  Errors are relative norms.
 */
EndModuleCheck check_end_modules(const CascadeNetwork& net, const Emp& emp, const FisherOptions& options = {});

/// Relative Frobenius distance ||x - y|| / max(||y||, tiny).
double relative_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

} // namespace cascade_emp

#endif
