// emprank: rank excitation and measurement patterns of cascade networks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cascade_emp/io.hpp"
#include "cascade_emp/monte_carlo.hpp"
#include "cascade_emp/pem.hpp"
#include "cascade_emp/ranking.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cascade_emp;

namespace
{

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

enum class Format
{
    Table,
    Csv,
    Json,
};

struct Common
{
    std::string format = "table";
    std::string out;
    std::optional<std::uint64_t> seed;
    int threads = 0;

    Format fmt() const
    {
        if (format == "csv")
            return Format::Csv;
        if (format == "json")
            return Format::Json;
        return Format::Table;
    }
};

void add_common(CLI::App* cmd, Common& c, bool with_seed)
{
    cmd->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"table", "csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", c.out, "Directory for result files");
    if (with_seed) {
        cmd->add_option("--seed", c.seed, "Master seed (falls back to EMP_RANK_SEED)");
        cmd->add_option("--threads", c.threads, "Worker threads, 0 = all available")->capture_default_str();
    }
}

/// --seed, then EMP_RANK_SEED, then @p fallback.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback)
{
    if (flag)
        return *flag;
    if (const char* env = std::getenv("EMP_RANK_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size())
                return v;
        } catch (const std::exception&) {
        }
        throw StructuralError(std::string("EMP_RANK_SEED is not an unsigned integer: '") + env + "'");
    }
    return fallback;
}

// Plain-text table with left-aligned columns.
class Table
{
public:
    explicit Table(std::vector<std::string> header) : rows_{std::move(header)} {}
    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    void print(std::ostream& out) const
    {
        std::vector<std::size_t> width;
        for (const auto& row : rows_)
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (width.size() <= c)
                    width.push_back(0);
                width[c] = std::max(width[c], row[c].size());
            }
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            for (std::size_t c = 0; c < rows_[r].size(); ++c) {
                out << rows_[r][c];
                if (c + 1 < rows_[r].size())
                    out << std::string(width[c] - rows_[r][c].size() + 2, ' ');
            }
            out << '\n';
            if (r == 0) {
                std::size_t total = 0;
                for (auto w : width)
                    total += w + 2;
                out << std::string(total > 2 ? total - 2 : total, '-') << '\n';
            }
        }
    }

    void print_csv(std::ostream& out) const
    {
        for (const auto& row : rows_) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                const bool quote = row[c].find_first_of(",\"") != std::string::npos;
                out << (quote ? "\"" : "") << row[c] << (quote ? "\"" : "") << (c + 1 < row.size() ? "," : "");
            }
            out << '\n';
        }
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

std::string num(double v, int precision = 6)
{
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

std::string modules_label(const NodeSet& modules)
{
    if (modules.empty())
        return "-";
    std::string s;
    for (auto k : modules)
        s += (s.empty() ? "G" : ",G") + std::to_string(k);
    return s;
}

/// Writes @p body to stdout, or to <out>/<name> plus a manifest when --out
/// is set.
void emit(const Common& c, RunManifest manifest, const std::string& name, const std::string& body)
{
    if (c.out.empty()) {
        std::cout << body;
        return;
    }
    fs::create_directories(c.out);
    const fs::path path = fs::path(c.out) / name;
    std::ofstream(path) << body;
    manifest.outputs.push_back(path.string());
    std::ofstream(fs::path(c.out) / "manifest.json") << manifest_to_json(manifest).dump(2) << '\n';
    std::cerr << "wrote " << path.string() << '\n';
}

RunManifest manifest_for(std::string subcommand, json config, std::uint64_t seed)
{
    RunManifest m;
    m.subcommand = std::move(subcommand);
    m.config = std::move(config);
    m.seed = seed;
    return m;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream s(text);
    std::string cell;
    while (std::getline(s, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (cell.find_first_not_of(" \t", used) != std::string::npos)
                throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw StructuralError("not a number: '" + cell + "'");
        }
    }
    return out;
}

std::vector<double> per_node(const std::string& text, std::size_t n, double fallback, const char* name)
{
    if (text.empty())
        return std::vector<double>(n, fallback);
    const auto values = parse_list(text);
    if (values.size() == 1)
        return std::vector<double>(n, values.front());
    if (values.size() != n)
        throw StructuralError(std::string("--") + name + " needs one value or one per node");
    return values;
}

struct NetworkArgs
{
    std::string network;
    std::string sigma2;
    std::string lambda;
};

void add_network(CLI::App* cmd, NetworkArgs& a)
{
    cmd->add_option("--network", a.network, "Network JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--sigma2", a.sigma2, "Excitation variances: one value or one per node");
    cmd->add_option("--lambda", a.lambda, "Noise variances: one value or one per node");
}

VarianceProfile profile_of(const NetworkFile& file, const NetworkArgs& a)
{
    const std::size_t n = file.network.node_count();
    VarianceProfile p{per_node(a.sigma2, n, file.sigma2, "sigma2"), per_node(a.lambda, n, file.lambda, "lambda")};
    for (std::size_t k = 0; k < n; ++k)
        if (!(p.sigma2[k] > 0.0) || !(p.lambda[k] > 0.0))
            throw StructuralError("variances must be positive");
    return p;
}

Emp emp_of(const std::string& literal, const NetworkFile& file, const VarianceProfile& profile)
{
    Emp emp = parse_emp(literal, file.network.node_count(), file.sigma2, file.lambda);
    // Variances not given in the literal come from the profile.
    const bool own_sigma = literal.find("sigma2") != std::string::npos;
    const bool own_lambda = literal.find("lambda") != std::string::npos;
    if (!own_sigma)
        for (auto i : emp.excited)
            emp.sigma2[i] = profile.sigma2[i - 1];
    if (!own_lambda)
        for (auto j : emp.measured)
            emp.lambda[j] = profile.lambda[j - 1];
    emp.validate(file.network.node_count());
    return emp;
}

// ---------------------------------------------------------------- enumerate

int cmd_enumerate(std::size_t n, const Common& c)
{
    const auto patterns = enumerate_minimal(n);
    const RunManifest manifest = manifest_for("enumerate", {{"n", n}}, 0);
    if (c.fmt() == Format::Json) {
        json rows = json::array();
        for (std::size_t k = 0; k < patterns.size(); ++k) {
            const Pattern m = mirror(patterns[k], n);
            rows.push_back({{"canonical", k},
                            {"emp", to_string(patterns[k])},
                            {"excited", patterns[k].excited},
                            {"measured", patterns[k].measured},
                            {"direct_modules", direct_modules(patterns[k], n)},
                            {"mirror", to_string(m)},
                            {"mirror_canonical", canonical_index(m, n)}});
        }
        emit(c, manifest, "enumerate.json", json{{"manifest", manifest_to_json(manifest)}, {"emps", rows}}.dump(2) + "\n");
        return 0;
    }
    Table t({"#", "emp", "direct", "mirror", "mirror#"});
    for (std::size_t k = 0; k < patterns.size(); ++k) {
        const Pattern m = mirror(patterns[k], n);
        t.add({std::to_string(k), to_string(patterns[k]), modules_label(direct_modules(patterns[k], n)), to_string(m),
               std::to_string(canonical_index(m, n))});
    }
    std::ostringstream s;
    if (c.fmt() == Format::Csv)
        t.print_csv(s);
    else
        t.print(s);
    emit(c, manifest, c.fmt() == Format::Csv ? "enumerate.csv" : "enumerate.txt", s.str());
    return 0;
}

// ------------------------------------------------------------------ analyze

int cmd_analyze(const NetworkArgs& a, const std::string& literal, const Common& c)
{
    const NetworkFile file = load_network(a.network);
    const VarianceProfile profile = profile_of(file, a);
    const Emp emp = emp_of(literal, file, profile);
    const std::size_t n = file.network.node_count();
    const InfoResult info = information_matrix(file.network, emp);
    const RunManifest manifest = manifest_for("analyze", {{"network", a.network}, {"emp", literal}}, 0);

    json j = emp_to_json(emp);
    j["minimal"] = is_minimal(emp, n);
    j["direct_modules"] = direct_modules(emp, n);
    j["rcond"] = info.rcond;
    j["informative"] = info.informative();
    j["truncation_converged"] = info.truncation_converged;
    if (info.informative()) {
        j["trace"] = *info.trace;
        j["logdet"] = *info.logdet;
        std::vector<double> blocks;
        for (const auto& b : info.module_blocks)
            blocks.push_back(b.trace());
        j["module_traces"] = blocks;
    }
    if (c.fmt() == Format::Json) {
        j["manifest"] = manifest_to_json(manifest);
        emit(c, manifest, "analyze.json", j.dump(2) + "\n");
    } else {
        Table t({"quantity", "value"});
        t.add({"emp", to_string(emp.pattern())});
        t.add({"minimal", is_minimal(emp, n) ? "yes" : "no"});
        t.add({"direct modules", modules_label(direct_modules(emp, n))});
        t.add({"rcond(M)", num(info.rcond)});
        if (info.informative()) {
            t.add({"trace(P)", num(*info.trace, 10)});
            t.add({"logdet(P)", num(*info.logdet, 10)});
            for (std::size_t k = 0; k < info.module_blocks.size(); ++k)
                t.add({"trace(P_G" + std::to_string(k + 1) + ")", num(info.module_blocks[k].trace(), 10)});
        } else {
            t.add({"trace(P)", "singular"});
        }
        std::ostringstream s;
        c.fmt() == Format::Csv ? t.print_csv(s) : t.print(s);
        emit(c, manifest, c.fmt() == Format::Csv ? "analyze.csv" : "analyze.txt", s.str());
    }
    if (!info.informative()) {
        std::cerr << "error: EMP " << to_string(emp.pattern()) << " is non-informative (rcond " << info.rcond
                  << ")\n";
        return kExitNumerical;
    }
    return 0;
}

// ------------------------------------------------------------ theorem checks

struct Check
{
    std::string name;
    std::string status; // PASS, FAIL or N/A
    std::string detail;
};

const char* verdict(bool ok)
{
    return ok ? "PASS" : "FAIL";
}

std::vector<Check> theorem_checks(const CascadeNetwork& net, const VarianceProfile& profile)
{
    constexpr double kTol = 1e-9;
    std::vector<Check> out;
    const std::size_t n = net.node_count();
    const bool identical = net.identical_modules();
    const bool uniform = profile.is_uniform();

    const MirrorReport mr = verify_mirror(net, profile);
    if (mr.hypotheses_met) {
        const bool ok = mr.max_deviation < kTol && !(mr.max_block_residual >= kTol);
        out.push_back({"mirror equal accuracy", verdict(ok),
                       "max rel. trace diff " + num(mr.max_deviation, 3) + ", block residual "
                           + num(mr.max_block_residual, 3)});
    } else {
        out.push_back({"mirror equal accuracy", "N/A",
                       "needs identical modules and equal variances; max rel. trace diff " + num(mr.max_deviation, 3)});
    }

    const EmpRanking ranking = rank_emps(net, profile, CriterionKind::Trace);
    auto trace_of = [&](const Pattern& p) -> std::optional<double> {
        for (const auto& e : ranking.entries)
            if (e.emp.pattern() == p)
                return e.trace;
        return std::nullopt;
    };

    if (n == 3) {
        const double snr21 = profile.sigma2[0] / profile.lambda[1];
        const double snr32 = profile.sigma2[1] / profile.lambda[2];
        const ThreeNodeChoice rule = snr_rule_3node(snr21, snr32);
        const auto t1 = trace_of({{1}, {2, 3}});
        const auto t2 = trace_of({{1, 2}, {3}});
        if (!identical || !t1 || !t2) {
            out.push_back({"3-node SNR rule", "N/A", "needs identical modules and informative EMPs"});
        } else {
            const double rel = (*t1 - *t2) / *t1;
            const ThreeNodeChoice actual = std::abs(rel) <= kTol ? ThreeNodeChoice::Tie
                                           : *t2 < *t1            ? ThreeNodeChoice::EmpII
                                                                  : ThreeNodeChoice::EmpI;
            out.push_back({"3-node SNR rule", verdict(rule == actual),
                           "rule " + to_string(rule) + ", traces give " + to_string(actual)});
        }
    }

    if (n == 4) {
        const auto prefs = snr_rule_4node(FourNodeSnr::from_profile(profile));
        const std::vector<std::pair<std::string, Pattern>> names{{"EMP I", {{1}, {2, 3, 4}}},
                                                                 {"EMP II", {{1, 2, 3}, {4}}},
                                                                 {"EMP III", {{1, 2}, {3, 4}}},
                                                                 {"EMP IV", {{1, 3}, {2, 4}}}};
        auto pattern_of = [&](const std::string& label) {
            for (const auto& [name, p] : names)
                if (name == label)
                    return p;
            return Pattern{};
        };
        for (const auto& pref : prefs) {
            const std::string label = pref.better + " over " + pref.worse;
            if (!identical || pref.status != ConditionStatus::Holds) {
                out.push_back({label, "N/A",
                               pref.condition + ": " + (identical ? to_string(pref.status) : "modules differ")});
                continue;
            }
            const auto tb = trace_of(pattern_of(pref.better));
            const auto tw = trace_of(pattern_of(pref.worse));
            if (!tb || !tw) {
                out.push_back({label, "N/A", "non-informative EMP"});
                continue;
            }
            out.push_back({label, verdict(*tb < *tw), pref.condition + " holds; traces " + num(*tb) + " vs " + num(*tw)});
        }
        if (identical && uniform) {
            const auto checks = check_four_node_blocks(net, profile.sigma2[0], profile.lambda[1]);
            double info_err = 0.0, cov_err = 0.0;
            for (const auto& b : checks) {
                info_err = std::max(info_err, b.information_error);
                cov_err = std::max(cov_err, b.covariance_error);
            }
            out.push_back({"4-node block formulas", verdict(info_err < 1e-8 && cov_err < 1e-8),
                           "max rel. error M " + num(info_err, 3) + ", P blocks " + num(cov_err, 3)});
        } else {
            out.push_back({"4-node block formulas", "N/A", "needs identical modules and equal variances"});
        }
    }

    bool any_end = false;
    double worst = 0.0;
    for (const auto& p : enumerate_minimal(n)) {
        const Emp emp = profile.apply(p);
        EndModuleCheck ec;
        try {
            ec = check_end_modules(net, emp);
        } catch (const NonInformativeError&) {
            continue;
        }
        if (ec.first_applies) {
            any_end = true;
            worst = std::max(worst, ec.first_error);
        }
        if (ec.last_applies) {
            any_end = true;
            worst = std::max(worst, ec.last_error);
        }
    }
    if (any_end)
        out.push_back({"end-module covariance", verdict(worst < 1e-8), "max rel. error " + num(worst, 3)});
    else
        out.push_back({"end-module covariance", "N/A", "no EMP meets G1 = G2 with 2 measured or the dual"});
    return out;
}

void print_checks(std::ostream& out, const std::vector<Check>& checks, Format f)
{
    Table t({"check", "status", "detail"});
    for (const auto& c : checks)
        t.add({c.name, c.status, c.detail});
    f == Format::Csv ? t.print_csv(out) : t.print(out);
}

json checks_to_json(const std::vector<Check>& checks)
{
    json rows = json::array();
    for (const auto& c : checks)
        rows.push_back({{"check", c.name}, {"status", c.status}, {"detail", c.detail}});
    return rows;
}

// --------------------------------------------------------------------- rank

int cmd_rank(const NetworkArgs& a, const std::string& criterion_name, bool with_checks, const Common& c)
{
    const NetworkFile file = load_network(a.network);
    const VarianceProfile profile = profile_of(file, a);
    const CriterionKind kind = parse_criterion(criterion_name);
    const EmpRanking ranking = rank_emps(file.network, profile, kind);
    const CriterionKind other = kind == CriterionKind::Trace ? CriterionKind::LogDet : CriterionKind::Trace;
    const EmpRanking alt = rank_emps(file.network, profile, other);
    const EmpRanking& a_opt = kind == CriterionKind::Trace ? ranking : alt;
    const EmpRanking& d_opt = kind == CriterionKind::Trace ? alt : ranking;
    std::vector<Check> checks;
    if (with_checks)
        checks = theorem_checks(file.network, profile);
    const RunManifest manifest = manifest_for("rank",
                         {{"network", a.network}, {"criterion", to_string(kind)}, {"check_theorems", with_checks}},
                         0);

    if (c.fmt() == Format::Json) {
        json j = ranking_to_json(ranking);
        j["manifest"] = manifest_to_json(manifest);
        j["a_optimal"] = to_string(a_opt.best().emp.pattern());
        j["d_optimal"] = to_string(d_opt.best().emp.pattern());
        if (with_checks)
            j["checks"] = checks_to_json(checks);
        emit(c, manifest, "rank.json", j.dump(2) + "\n");
    } else {
        const bool logdet = kind == CriterionKind::LogDet;
        Table t(logdet ? std::vector<std::string>{"rank", "emp", "logdet(P)", "trace(P)", "direct"}
                       : std::vector<std::string>{"rank", "emp", "trace(P)", "direct"});
        std::size_t r = 1;
        for (const auto& e : ranking.entries) {
            std::vector<std::string> row{std::to_string(r++), to_string(e.emp.pattern()), num(e.value, 10)};
            if (logdet)
                row.push_back(num(e.trace, 10));
            row.push_back(modules_label(e.direct));
            t.add(std::move(row));
        }
        std::ostringstream s;
        if (c.fmt() == Format::Csv) {
            t.print_csv(s);
            if (with_checks) {
                s << '\n';
                print_checks(s, checks, Format::Csv);
            }
        } else {
            t.print(s);
            s << '\n';
            for (const auto& e : ranking.non_informative)
                s << "non-informative: " << to_string(e.emp.pattern()) << " (rcond " << num(e.rcond, 3) << ")\n";
            if (ranking.entries.size() > 1)
                s << "runner-up/best " << num(ranking.runner_up_ratio(), 4) << ", worst/best "
                  << num(ranking.worst_ratio(), 4) << " (" << (kind == CriterionKind::Trace ? "trace" : "determinant")
                  << " ratios)\n";
            s << "A-optimal " << to_string(a_opt.best().emp.pattern()) << ", D-optimal "
              << to_string(d_opt.best().emp.pattern()) << '\n';
            if (!ranking.truncation_converged)
                s << "warning: some impulse responses were truncated before settling\n";
            if (with_checks) {
                s << '\n';
                print_checks(s, checks, Format::Table);
            }
        }
        emit(c, manifest, c.fmt() == Format::Csv ? "rank.csv" : "rank.txt", s.str());
    }
    return 0;
}

int cmd_check(const NetworkArgs& a, const Common& c)
{
    const NetworkFile file = load_network(a.network);
    const VarianceProfile profile = profile_of(file, a);
    const auto checks = theorem_checks(file.network, profile);
    const RunManifest manifest = manifest_for("check-theorems", {{"network", a.network}}, 0);
    if (c.fmt() == Format::Json) {
        emit(c, manifest, "checks.json",
             json{{"manifest", manifest_to_json(manifest)}, {"checks", checks_to_json(checks)}}.dump(2) + "\n");
    } else {
        std::ostringstream s;
        print_checks(s, checks, c.fmt());
        emit(c, manifest, c.fmt() == Format::Csv ? "checks.csv" : "checks.txt", s.str());
    }
    return 0;
}

// --------------------------------------------------------------- montecarlo

struct McArgs
{
    std::string config;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> n;
    std::optional<std::string> criterion;
    bool quiet = false;
};

int cmd_montecarlo(const McArgs& m, const Common& c)
{
    const json raw = read_json(m.config);
    ScenarioConfig cfg = scenario_from_json(raw);
    if (m.runs)
        cfg.runs = *m.runs;
    if (m.n)
        cfg.n = *m.n;
    if (m.criterion)
        cfg.criterion = parse_criterion(*m.criterion);
    cfg.threads = c.threads;
    if (c.seed || !raw.contains("master_seed"))
        cfg.master_seed = resolve_seed(c.seed, cfg.master_seed);
    cfg.validate();

    auto log = spdlog::stderr_color_mt("montecarlo");
    log->set_level(m.quiet ? spdlog::level::warn : spdlog::level::info);
    log->info("{} runs, n = {}, family {}, variances {}, seed {}", cfg.runs, cfg.n, to_string(cfg.family),
              to_string(cfg.variance_mode), cfg.master_seed);
    const std::size_t step = std::max<std::size_t>(1, cfg.runs / 10);
    const ScenarioReport report = run_scenario(cfg, [&](std::size_t done, std::size_t total) {
        if (done % step == 0 || done == total)
            log->info("{}/{} runs", done, total);
    });
    if (report.rejected > 0)
        log->warn("{} runs rejected", report.rejected);

    RunManifest manifest = manifest_for("montecarlo", scenario_to_json(cfg), cfg.master_seed);
    if (!c.out.empty()) {
        fs::create_directories(c.out);
        const fs::path csv = fs::path(c.out) / "report.csv";
        const fs::path js = fs::path(c.out) / "report.json";
        manifest.outputs = {csv.string(), js.string()};
        std::ofstream csv_out(csv);
        write_report_csv(csv_out, report);
        std::ofstream(js) << report_to_json(report, manifest).dump(2) << '\n';
        std::ofstream(fs::path(c.out) / "manifest.json") << manifest_to_json(manifest).dump(2) << '\n';
        log->info("wrote {} and {}", csv.string(), js.string());
    }

    if (c.fmt() == Format::Json) {
        std::cout << report_to_json(report, manifest).dump(2) << '\n';
    } else if (c.fmt() == Format::Csv) {
        write_report_csv(std::cout, report);
    } else {
        Table t({"emp", "percent", "count"});
        for (std::size_t k = 0; k < report.patterns.size(); ++k)
            t.add({to_string(report.patterns[k]), num(report.percents[k], 4), std::to_string(report.counts[k])});
        t.print(std::cout);
        std::cout << "\naccepted " << report.accepted << ", rejected " << report.rejected << '\n';
        if (report.accepted > 0) {
            const RatioStats stats = ratio_stats(report);
            std::cout << "most selected " << to_string(report.patterns[report.winner()]) << ", median runner-up/best "
                      << num(stats.median_runner_up, 4) << ", median worst/best " << num(stats.median_worst, 4)
                      << '\n';
        }
    }
    return report.accepted > 0 ? 0 : kExitNumerical;
}

// ----------------------------------------------------------------- validate

struct PemArgs
{
    std::string emp;
    std::size_t samples = 2000;
    std::size_t replications = 500;
};

int cmd_validate(const NetworkArgs& a, const PemArgs& p, const Common& c)
{
    const NetworkFile file = load_network(a.network);
    const VarianceProfile profile = profile_of(file, a);
    const Emp emp = emp_of(p.emp, file, profile);
    const std::uint64_t seed = resolve_seed(c.seed, 1);
    const CovarianceComparison cmp = empirical_covariance(file.network, emp, p.samples, p.replications, seed, {},
                                                          c.threads);
    const RunManifest manifest = manifest_for("validate",
                         {{"network", a.network},
                          {"emp", p.emp},
                          {"samples", p.samples},
                          {"replications", p.replications}},
                         seed);
    if (c.fmt() == Format::Json) {
        json j = comparison_to_json(cmp);
        j["manifest"] = manifest_to_json(manifest);
        emit(c, manifest, "validate.json", j.dump(2) + "\n");
    } else {
        Table t({"quantity", "value"});
        t.add({"emp", to_string(emp.pattern())});
        t.add({"samples", std::to_string(p.samples)});
        t.add({"replications", std::to_string(p.replications)});
        t.add({"failed fits", std::to_string(cmp.failed)});
        t.add({"theoretical trace(P)", num(cmp.theoretical_trace, 8)});
        t.add({"empirical trace", num(cmp.empirical_trace, 8)});
        t.add({"relative deviation", num(cmp.deviation, 4)});
        t.add({"reliable", cmp.unreliable ? "no" : "yes"});
        std::ostringstream s;
        c.fmt() == Format::Csv ? t.print_csv(s) : t.print(s);
        emit(c, manifest, c.fmt() == Format::Csv ? "validate.csv" : "validate.txt", s.str());
    }
    if (cmp.unreliable) {
        std::cerr << "error: " << cmp.failed << " of " << cmp.replications << " fits failed to converge\n";
        return kExitNumerical;
    }
    return 0;
}

int cmd_simulate(const NetworkArgs& a, const PemArgs& p, const Common& c)
{
    const NetworkFile file = load_network(a.network);
    const VarianceProfile profile = profile_of(file, a);
    const Emp emp = emp_of(p.emp, file, profile);
    const std::uint64_t seed = resolve_seed(c.seed, 1);
    const Dataset data = simulate(file.network, emp, p.samples, seed);
    std::ostringstream s;
    write_dataset_csv(s, data);
    const RunManifest manifest = manifest_for("simulate", {{"network", a.network}, {"emp", p.emp}, {"samples", p.samples}}, seed);
    emit(c, manifest, "dataset.csv", s.str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rank excitation and measurement patterns of cascade networks"};
    app.set_version_flag("--version", library_version());
    app.require_subcommand(1);

    Common common;

    std::size_t enum_n = 0;
    auto* enumerate = app.add_subcommand("enumerate", "List the minimal EMPs of an n-node cascade");
    enumerate->add_option("-n", enum_n, "Node count")->required()->check(CLI::Range(std::size_t{2}, std::size_t{30}));
    add_common(enumerate, common, false);

    NetworkArgs net;
    std::string emp_literal;
    auto* analyze = app.add_subcommand("analyze", "Information matrix summary for one EMP");
    add_network(analyze, net);
    analyze->add_option("--emp", emp_literal, "EMP literal, e.g. \"B=1,2;C=3,4\"")->required();
    add_common(analyze, common, false);

    std::string criterion = "trace";
    bool check_theorems = false;
    auto* rank = app.add_subcommand("rank", "Rank every minimal EMP of a network");
    add_network(rank, net);
    rank->add_option("--criterion", criterion, "trace or logdet")
        ->check(CLI::IsMember({"trace", "logdet"}))
        ->capture_default_str();
    rank->add_flag("--check-theorems", check_theorems, "Append the structural accuracy checks");
    add_common(rank, common, false);

    auto* check = app.add_subcommand("check-theorems", "Structural accuracy checks for a network");
    add_network(check, net);
    add_common(check, common, false);

    McArgs mc;
    auto* montecarlo = app.add_subcommand("montecarlo", "Randomized EMP selection experiment");
    montecarlo->add_option("--config", mc.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    montecarlo->add_option("--runs", mc.runs, "Override the number of runs")->check(CLI::PositiveNumber);
    montecarlo->add_option("-n", mc.n, "Override the node count")->check(CLI::Range(std::size_t{2}, std::size_t{30}));
    montecarlo->add_option("--criterion", mc.criterion, "trace or logdet")->check(CLI::IsMember({"trace", "logdet"}));
    montecarlo->add_flag("--quiet", mc.quiet, "No progress logging");
    add_common(montecarlo, common, true);

    PemArgs pem;
    auto* validate = app.add_subcommand("validate", "Compare PEM estimate scatter with the asymptotic covariance");
    add_network(validate, net);
    validate->add_option("--emp", pem.emp, "EMP literal")->required();
    validate->add_option("--samples", pem.samples, "Samples per experiment")->capture_default_str()->check(
        CLI::Range(std::size_t{100}, std::size_t{100000000}));
    validate->add_option("--replications", pem.replications, "Replications (at least 30)")
        ->capture_default_str()
        ->check(CLI::Range(kMinReplications, std::size_t{1000000}));
    add_common(validate, common, true);

    auto* sim = app.add_subcommand("simulate", "Write one simulated dataset as CSV");
    add_network(sim, net);
    sim->add_option("--emp", pem.emp, "EMP literal")->required();
    sim->add_option("--samples", pem.samples, "Samples")->capture_default_str()->check(CLI::PositiveNumber);
    add_common(sim, common, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*enumerate)
            return cmd_enumerate(enum_n, common);
        if (*analyze)
            return cmd_analyze(net, emp_literal, common);
        if (*rank)
            return cmd_rank(net, criterion, check_theorems, common);
        if (*check)
            return cmd_check(net, common);
        if (*montecarlo)
            return cmd_montecarlo(mc, common);
        if (*validate)
            return cmd_validate(net, pem, common);
        if (*sim)
            return cmd_simulate(net, pem, common);
    } catch (const UnstableError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const NonInformativeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const EmptyRankingError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const StructuralError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
