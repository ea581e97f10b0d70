#include "cascade_emp/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cascade_emp/parallel.hpp"

namespace cascade_emp
{

double relative_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y)
{
    const double scale = std::max(y.norm(), std::numeric_limits<double>::min());
    return (x - y).norm() / scale;
}

double criterion_ratio(CriterionKind kind, double value, double reference)
{
    return kind == CriterionKind::Trace ? value / reference : std::exp(value - reference);
}

double EmpRanking::runner_up_ratio() const
{
    if (entries.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    return criterion_ratio(kind, entries[1].value, entries[0].value);
}

double EmpRanking::worst_ratio() const
{
    if (entries.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    return criterion_ratio(kind, entries.back().value, entries[0].value);
}

namespace
{

bool tied(CriterionKind kind, double a, double b)
{
    // logdet values compare on the absolute scale (a relative determinant gap).
    const double scale = kind == CriterionKind::Trace ? std::max(std::abs(a), std::abs(b)) : 1.0;
    return std::abs(a - b) <= kTieTolerance * scale;
}

} // namespace

void sort_ranking(std::vector<RankEntry>& entries, CriterionKind kind)
{
    std::sort(entries.begin(), entries.end(), [](const RankEntry& x, const RankEntry& y) {
        return x.value != y.value ? x.value < y.value : x.canonical < y.canonical;
    });
    std::size_t start = 0;
    while (start < entries.size()) {
        std::size_t end = start + 1;
        while (end < entries.size() && tied(kind, entries[start].value, entries[end].value))
            ++end;
        std::sort(entries.begin() + static_cast<std::ptrdiff_t>(start),
                  entries.begin() + static_cast<std::ptrdiff_t>(end),
                  [](const RankEntry& x, const RankEntry& y) { return x.canonical < y.canonical; });
        start = end;
    }
}

namespace
{

EmpRanking rank_with(const PairKernels& kernels, std::size_t n, const VarianceProfile& profile,
                     CriterionKind kind, int threads)
{
    if (profile.node_count() != n)
        throw StructuralError("variance profile covers " + std::to_string(profile.node_count())
                              + " nodes, network has " + std::to_string(n));
    const auto patterns = enumerate_minimal(n);
    std::vector<std::optional<RankEntry>> ranked(patterns.size());
    std::vector<std::optional<NonInformativeEntry>> singular(patterns.size());
    ExceptionSlot slot;
    const auto count = static_cast<std::ptrdiff_t>(patterns.size());
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads)) if (threads != 1)
    for (std::ptrdiff_t c = 0; c < count; ++c) {
        slot.run([&] {
            Emp emp = profile.apply(patterns[c]);
            const InfoResult info = kernels.evaluate(emp);
            const auto canonical = static_cast<std::size_t>(c);
            if (!info.informative()) {
                singular[c] = NonInformativeEntry{std::move(emp), canonical, info.rcond};
                return;
            }
            RankEntry e;
            e.direct = direct_modules(patterns[c], n);
            e.emp = std::move(emp);
            e.canonical = canonical;
            e.value = *criterion(info, kind);
            e.trace = *info.trace;
            for (const auto& block : info.module_blocks)
                e.module_traces.push_back(block.trace());
            ranked[c] = std::move(e);
        });
    }
    slot.rethrow();

    EmpRanking ranking;
    ranking.kind = kind;
    ranking.truncation_converged = kernels.truncation_converged();
    for (auto& e : ranked)
        if (e)
            ranking.entries.push_back(std::move(*e));
    for (auto& s : singular)
        if (s)
            ranking.non_informative.push_back(std::move(*s));
    if (ranking.entries.empty())
        throw EmptyRankingError("every minimal EMP is non-informative for this network");
    sort_ranking(ranking.entries, kind);
    return ranking;
}

} // namespace

EmpRanking rank_emps(const CascadeNetwork& net, const VarianceProfile& profile, CriterionKind kind,
                     const FisherOptions& options, int threads)
{
    const PairKernels kernels(net, options, threads);
    return rank_with(kernels, net.node_count(), profile, kind, threads);
}

EmpRanking rank_emps(const PairKernels& kernels, std::size_t n, const VarianceProfile& profile,
                     CriterionKind kind)
{
    return rank_with(kernels, n, profile, kind, 1);
}

std::string to_string(ThreeNodeChoice c)
{
    switch (c) {
    case ThreeNodeChoice::EmpI: return "EMP I";
    case ThreeNodeChoice::EmpII: return "EMP II";
    case ThreeNodeChoice::Tie: return "tie";
    }
    return "?";
}

ThreeNodeChoice snr_rule_3node(double snr21, double snr32)
{
    if (!(snr21 > 0.0) || !(snr32 > 0.0))
        throw DomainError("SNR ratios must be positive");
    if (std::abs(snr32 - snr21) <= kTieTolerance * std::max(snr21, snr32))
        return ThreeNodeChoice::Tie;
    return snr32 > snr21 ? ThreeNodeChoice::EmpII : ThreeNodeChoice::EmpI;
}

FourNodeSnr FourNodeSnr::from_profile(const VarianceProfile& p)
{
    if (p.node_count() != 4)
        throw DomainError("four-node SNR rules need a 4-node profile");
    const auto& s = p.sigma2;
    const auto& l = p.lambda;
    return FourNodeSnr{s[0] / l[1], s[0] / l[2], s[1] / l[2], s[1] / l[3], s[2] / l[3]};
}

std::string to_string(ConditionStatus s)
{
    switch (s) {
    case ConditionStatus::Holds: return "holds";
    case ConditionStatus::DoesNotHold: return "does not hold";
    case ConditionStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace
{

// Sign of x - y with the tie tolerance: +1, -1 or 0.
int compare(double x, double y)
{
    if (std::abs(x - y) <= kTieTolerance * std::max(std::abs(x), std::abs(y)))
        return 0;
    return x > y ? 1 : -1;
}

ConditionStatus all_greater(std::initializer_list<std::pair<double, double>> terms)
{
    bool boundary = false;
    for (const auto& [x, y] : terms) {
        const int c = compare(x, y);
        if (c < 0)
            return ConditionStatus::DoesNotHold;
        if (c == 0)
            boundary = true;
    }
    return boundary ? ConditionStatus::Inconclusive : ConditionStatus::Holds;
}

} // namespace

std::array<PairwisePreference, 3> snr_rule_4node(const FourNodeSnr& s)
{
    return {{
        {"EMP II", "EMP I", "SNR43 > SNR21 and SNR42 > SNR31",
         all_greater({{s.snr43, s.snr21}, {s.snr42, s.snr31}})},
        {"EMP III", "EMP I", "SNR32 > SNR43", all_greater({{s.snr32, s.snr43}})},
        {"EMP III", "EMP II", "SNR32 > SNR21", all_greater({{s.snr32, s.snr21}})},
    }};
}

Eigen::MatrixXd mirror_permutation(const CascadeNetwork& net)
{
    const std::size_t modules = net.module_count();
    const std::size_t size = net.module(1).parameter_count();
    for (const auto& m : net.modules())
        if (m.parameter_count() != size)
            throw StructuralError("mirror permutation needs equal parameter counts per module");
    const auto dim = static_cast<Eigen::Index>(net.parameter_count());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(dim, dim);
    const auto s = static_cast<Eigen::Index>(size);
    for (std::size_t k = 0; k < modules; ++k) {
        const auto row = static_cast<Eigen::Index>(k) * s;
        const auto col = static_cast<Eigen::Index>(modules - 1 - k) * s;
        q.block(row, col, s, s).setIdentity();
    }
    return q;
}

MirrorReport verify_mirror(const CascadeNetwork& net, const VarianceProfile& profile, const FisherOptions& options)
{
    const std::size_t n = net.node_count();
    MirrorReport report;
    report.hypotheses_met = net.identical_modules() && profile.is_uniform();

    std::optional<Eigen::MatrixXd> q;
    try {
        q = mirror_permutation(net);
    } catch (const StructuralError&) {
    }

    const PairKernels kernels(net, options);
    for (const auto& p : enumerate_minimal(n)) {
        const Pattern m = mirror(p, n);
        if (canonical_index(m, n) < canonical_index(p, n))
            continue;
        MirrorPairCheck check{p, m, 0.0, std::numeric_limits<double>::quiet_NaN(), false, {}};
        const Emp emp = profile.apply(p);
        const InfoResult info = kernels.evaluate(emp);
        const InfoResult info_m = p == m ? info : kernels.evaluate(mirror(emp, n));
        if (!info.informative() || !info_m.informative()) {
            check.excluded = true;
            check.note = "non-informative EMP";
            report.pairs.push_back(std::move(check));
            continue;
        }
        check.deviation = std::abs(*info.trace - *info_m.trace) / *info.trace;
        if (q) {
            const Eigen::MatrixXd reflected = (*q) * info.information * q->transpose();
            const double scale = info.information.cwiseAbs().maxCoeff();
            check.block_residual = (info_m.information - reflected).cwiseAbs().maxCoeff() / scale;
            report.max_block_residual = std::max(report.max_block_residual, check.block_residual);
        }
        report.max_deviation = std::max(report.max_deviation, check.deviation);
        report.pairs.push_back(std::move(check));
    }
    return report;
}

ModuleAccuracyReport module_accuracy_report(const CascadeNetwork& net, const Emp& emp, const FisherOptions& options)
{
    const std::size_t n = net.node_count();
    const InfoResult info = information_matrix(net, emp, options);
    if (!info.informative())
        throw NonInformativeError("module_accuracy_report: EMP " + to_string(emp.pattern())
                                  + " is non-informative (rcond " + std::to_string(info.rcond) + ")");
    ModuleAccuracyReport report;
    auto flat = [](const std::map<std::size_t, double>& m) {
        return std::all_of(m.begin(), m.end(), [&](const auto& kv) { return kv.second == m.begin()->second; });
    };
    report.hypotheses_met = net.identical_modules() && flat(emp.sigma2) && flat(emp.lambda);
    const NodeSet direct = direct_modules(emp, n);
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= net.module_count(); ++k) {
        const double tr = info.module_blocks[k - 1].trace();
        report.rows.push_back({k, tr, std::binary_search(direct.begin(), direct.end(), k)});
        smallest = std::min(smallest, tr);
    }
    for (const auto& row : report.rows)
        if (row.direct && row.block_trace <= smallest * (1.0 + 1e-9))
            report.direct_module_most_accurate = true;
    return report;
}

BlockTerms four_node_terms(const ParamModule& module, double sigma2, double lambda, const TruncationOptions& truncation)
{
    const auto& g = module.transfer_function();
    const auto jac = param_jacobian(module);
    std::vector<TransferFunction> once, twice;
    for (const auto& d : jac) {
        once.push_back(series(d, g));
        twice.push_back(series(series(d, g), g));
    }
    const double snr = sigma2 / lambda;
    return BlockTerms{white_correlation(jac, jac, snr, truncation).value,
                      white_correlation(once, once, snr, truncation).value,
                      white_correlation(twice, twice, snr, truncation).value};
}

namespace
{

enum class FourNodeEmp
{
    I,
    II,
    III,
    IV
};

FourNodeEmp classify_four_node(const Pattern& p)
{
    if (p == Pattern{{1}, {2, 3, 4}})
        return FourNodeEmp::I;
    if (p == Pattern{{1, 2, 3}, {4}})
        return FourNodeEmp::II;
    if (p == Pattern{{1, 2}, {3, 4}})
        return FourNodeEmp::III;
    if (p == Pattern{{1, 3}, {2, 4}})
        return FourNodeEmp::IV;
    throw DomainError("not a minimal 4-node pattern: " + to_string(p));
}

Eigen::MatrixXd assemble3(const std::array<std::array<Eigen::MatrixXd, 3>, 3>& blocks)
{
    const auto s = blocks[0][0].rows();
    Eigen::MatrixXd m(3 * s, 3 * s);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            m.block(r * s, c * s, s, s) = blocks[r][c];
    return m;
}

Eigen::MatrixXd inv(const Eigen::MatrixXd& x)
{
    return x.inverse();
}

} // namespace

Eigen::MatrixXd expected_four_node_information(const Pattern& pattern, const BlockTerms& t)
{
    const auto& a = t.a;
    const auto& b = t.b;
    const auto& c = t.c;
    switch (classify_four_node(pattern)) {
    case FourNodeEmp::I:
        return assemble3({{{a + b + c, b + c, c}, {b + c, b + c, c}, {c, c, c}}});
    case FourNodeEmp::II:
        return assemble3({{{c, c, c}, {c, c + b, c + b}, {c, c + b, a + c + b}}});
    case FourNodeEmp::III:
        return assemble3({{{b + c, c + b, c}, {c + b, c + b + b + a, c + b}, {c, c + b, c + b}}});
    case FourNodeEmp::IV:
        return assemble3({{{a + c, c, c}, {c, c, c}, {c, c, c + a}}});
    }
    return {};
}

std::vector<Eigen::MatrixXd> expected_four_node_covariance(const Pattern& pattern, const BlockTerms& t)
{
    const Eigen::MatrixXd ai = inv(t.a), bi = inv(t.b), ci = inv(t.c);
    switch (classify_four_node(pattern)) {
    case FourNodeEmp::I:
        return {ai, ai + bi, bi + ci};
    case FourNodeEmp::II:
        return {bi + ci, ai + bi, ai};
    case FourNodeEmp::III: {
        const Eigen::MatrixXd f = inv(inv(ai + bi) + inv(bi + ci));
        return {f, inv(t.a + inv(2.0 * bi + ci)), f};
    }
    case FourNodeEmp::IV:
        return {ai, 2.0 * ai + ci, ai};
    }
    return {};
}

std::vector<BlockIdentityCheck> check_four_node_blocks(const CascadeNetwork& net, double sigma2, double lambda,
                                                       const FisherOptions& options)
{
    if (net.node_count() != 4 || !net.identical_modules())
        throw DomainError("block identity checks need a 4-node network of identical modules");
    const BlockTerms terms = four_node_terms(net.module(1), sigma2, lambda, options.truncation);
    const VarianceProfile profile = VarianceProfile::uniform(4, sigma2, lambda);
    std::vector<BlockIdentityCheck> out;
    for (const auto& p : enumerate_minimal(4)) {
        const InfoResult info = information_matrix(net, profile.apply(p), options);
        BlockIdentityCheck check{p, relative_error(info.information, expected_four_node_information(p, terms)),
                                 std::numeric_limits<double>::infinity()};
        if (info.informative()) {
            const auto expected = expected_four_node_covariance(p, terms);
            check.covariance_error = 0.0;
            for (std::size_t k = 0; k < 3; ++k)
                check.covariance_error =
                    std::max(check.covariance_error, relative_error(info.module_blocks[k], expected[k]));
        }
        out.push_back(std::move(check));
    }
    return out;
}

EndModuleCheck check_end_modules(const CascadeNetwork& net, const Emp& emp, const FisherOptions& options)
{
    const std::size_t n = net.node_count();
    EndModuleCheck check;
    if (n < 3)
        return check;
    auto in = [](const NodeSet& s, std::size_t v) { return std::binary_search(s.begin(), s.end(), v); };
    check.first_applies = net.module(1) == net.module(2) && in(emp.measured, 2) && in(emp.excited, 1);
    check.last_applies = net.module(n - 2) == net.module(n - 1) && in(emp.excited, n - 1) && in(emp.measured, n);
    if (!check.first_applies && !check.last_applies)
        return check;

    const InfoResult info = information_matrix(net, emp, options);
    if (!info.informative())
        throw NonInformativeError("check_end_modules: EMP is non-informative");
    auto direct_block = [&](std::size_t k, std::size_t from, std::size_t to) {
        const auto jac = param_jacobian(net.module(k));
        const Eigen::MatrixXd a =
            white_correlation(jac, jac, emp.sigma2.at(from) / emp.lambda.at(to), options.truncation).value;
        return Eigen::MatrixXd(a.inverse());
    };
    if (check.first_applies)
        check.first_error = relative_error(info.module_blocks.front(), direct_block(1, 1, 2));
    if (check.last_applies)
        check.last_error = relative_error(info.module_blocks.back(), direct_block(n - 1, n - 1, n));
    return check;
}

} // namespace cascade_emp
