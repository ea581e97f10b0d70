#include "cascade_emp/io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace cascade_emp
{

using nlohmann::json;

std::string library_version()
{
#ifdef CASCADE_EMP_VERSION
    return CASCADE_EMP_VERSION;
#else
    return "unknown";
#endif
}

json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw StructuralError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw StructuralError(path.string() + ": " + e.what());
    }
}

namespace
{

template <class T>
T field(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key))
        throw StructuralError(where + ": missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw StructuralError(where + ": bad \"" + key + "\": " + e.what());
    }
}

template <class T>
T field_or(const json& j, const char* key, T fallback, const std::string& where)
{
    return j.contains(key) ? field<T>(j, key, where) : fallback;
}

} // namespace

NetworkFile network_from_json(const json& j)
{
    if (!j.is_object())
        throw StructuralError("network: expected a JSON object");
    const auto n = field<std::size_t>(j, "n", "network");
    if (n < 2)
        throw StructuralError("network: n must be at least 2");
    if (!j.contains("modules") || !j.at("modules").is_array())
        throw StructuralError("network: \"modules\" must be an array");
    const auto& list = j.at("modules");
    if (list.size() != n - 1)
        throw StructuralError("network: n = " + std::to_string(n) + " needs " + std::to_string(n - 1)
                              + " modules, got " + std::to_string(list.size()));
    std::vector<ParamModule> modules;
    for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string where = "module G_" + std::to_string(k + 1);
        const auto family = parse_family(field<std::string>(list[k], "family", where));
        const auto theta = field<std::vector<double>>(list[k], "theta", where);
        try {
            modules.emplace_back(family, theta);
        } catch (const UnstableError& e) {
            throw UnstableError(where + " is unstable: " + e.what());
        } catch (const StructuralError& e) {
            throw StructuralError(where + ": " + e.what());
        }
    }
    NetworkFile file{CascadeNetwork(std::move(modules)), 1.0, 0.01};
    if (j.contains("defaults")) {
        const auto& d = j.at("defaults");
        file.sigma2 = field_or<double>(d, "sigma2", file.sigma2, "defaults");
        file.lambda = field_or<double>(d, "lambda", file.lambda, "defaults");
    }
    if (!(file.sigma2 > 0.0) || !(file.lambda > 0.0))
        throw StructuralError("defaults: variances must be positive");
    return file;
}

json network_to_json(const NetworkFile& file)
{
    json modules = json::array();
    for (const auto& m : file.network.modules())
        modules.push_back({{"family", to_string(m.family())},
                           {"theta", std::vector<double>(m.theta().begin(), m.theta().end())}});
    return {{"n", file.network.node_count()},
            {"modules", modules},
            {"defaults", {{"sigma2", file.sigma2}, {"lambda", file.lambda}}}};
}

NetworkFile load_network(const std::filesystem::path& path)
{
    return network_from_json(read_json(path));
}

ScenarioConfig scenario_from_json(const json& j)
{
    if (!j.is_object())
        throw StructuralError("scenario: expected a JSON object");
    static const std::vector<std::string> known{"n",           "family",       "runs",     "variance_mode",
                                                "identical_modules", "perturbation", "master_seed", "criterion",
                                                "threads",     "max_len"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw StructuralError("scenario: unknown field \"" + key + "\"");
    ScenarioConfig cfg;
    const std::string where = "scenario";
    cfg.n = field_or<std::size_t>(j, "n", cfg.n, where);
    if (j.contains("family"))
        cfg.family = parse_scenario_family(field<std::string>(j, "family", where));
    cfg.runs = field_or<std::size_t>(j, "runs", cfg.runs, where);
    if (j.contains("variance_mode"))
        cfg.variance_mode = parse_variance_mode(field<std::string>(j, "variance_mode", where));
    cfg.identical_modules = field_or<bool>(j, "identical_modules", cfg.identical_modules, where);
    if (j.contains("perturbation") && !j.at("perturbation").is_null()) {
        const auto& p = j.at("perturbation");
        Perturbation pert;
        pert.module = field<std::size_t>(p, "module", "perturbation");
        pert.parameter = field_or<std::size_t>(p, "parameter", pert.parameter, "perturbation");
        pert.factor = field_or<double>(p, "factor", pert.factor, "perturbation");
        cfg.perturbation = pert;
    }
    cfg.master_seed = field_or<std::uint64_t>(j, "master_seed", cfg.master_seed, where);
    if (j.contains("criterion"))
        cfg.criterion = parse_criterion(field<std::string>(j, "criterion", where));
    cfg.threads = field_or<int>(j, "threads", cfg.threads, where);
    cfg.truncation.max_len = field_or<std::size_t>(j, "max_len", cfg.truncation.max_len, where);
    cfg.validate();
    return cfg;
}

json scenario_to_json(const ScenarioConfig& cfg)
{
    json j{{"n", cfg.n},
           {"family", to_string(cfg.family)},
           {"runs", cfg.runs},
           {"variance_mode", to_string(cfg.variance_mode)},
           {"identical_modules", cfg.identical_modules},
           {"perturbation", nullptr},
           {"master_seed", cfg.master_seed},
           {"criterion", to_string(cfg.criterion)},
           {"threads", cfg.threads},
           {"max_len", cfg.truncation.max_len}};
    if (cfg.perturbation)
        j["perturbation"] = {{"module", cfg.perturbation->module},
                             {"parameter", cfg.perturbation->parameter},
                             {"factor", cfg.perturbation->factor}};
    return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    return scenario_from_json(read_json(path));
}

json manifest_to_json(const RunManifest& m)
{
    return {{"subcommand", m.subcommand},
            {"config", m.config},
            {"seed", m.seed},
            {"version", m.version},
            {"outputs", m.outputs}};
}

namespace
{

json variance_map(const std::map<std::size_t, double>& m)
{
    json j = json::object();
    for (const auto& [node, v] : m)
        j[std::to_string(node)] = v;
    return j;
}

} // namespace

json emp_to_json(const Emp& emp)
{
    return {{"emp", to_string(emp.pattern())},
            {"excited", emp.excited},
            {"measured", emp.measured},
            {"sigma2", variance_map(emp.sigma2)},
            {"lambda", variance_map(emp.lambda)}};
}

json ranking_to_json(const EmpRanking& ranking)
{
    json entries = json::array();
    std::size_t rank = 1;
    for (const auto& e : ranking.entries) {
        json row = emp_to_json(e.emp);
        row["rank"] = rank++;
        row["canonical"] = e.canonical;
        row["value"] = e.value;
        row["trace"] = e.trace;
        row["module_traces"] = e.module_traces;
        row["direct_modules"] = e.direct;
        entries.push_back(std::move(row));
    }
    json singular = json::array();
    for (const auto& s : ranking.non_informative) {
        json row = emp_to_json(s.emp);
        row["canonical"] = s.canonical;
        row["rcond"] = s.rcond;
        singular.push_back(std::move(row));
    }
    json j{{"criterion", to_string(ranking.kind)},
           {"entries", entries},
           {"non_informative", singular},
           {"truncation_converged", ranking.truncation_converged}};
    if (ranking.entries.size() > 1) {
        j["runner_up_ratio"] = ranking.runner_up_ratio();
        j["worst_ratio"] = ranking.worst_ratio();
    }
    return j;
}

json report_to_json(const ScenarioReport& report, const RunManifest& manifest)
{
    json table = json::array();
    for (std::size_t c = 0; c < report.patterns.size(); ++c)
        table.push_back({{"emp", to_string(report.patterns[c])},
                         {"canonical", c},
                         {"count", report.counts[c]},
                         {"percent", report.percents[c]}});
    json runs = json::array();
    for (const auto& r : report.runs) {
        json row{{"index", r.index}, {"seed", r.seed}, {"rejected", r.rejected}};
        if (r.rejected) {
            row["reason"] = r.reason;
        } else {
            row["winner"] = r.winner;
            row["runner_up"] = r.runner_up;
            row["runner_up_ratio"] = r.runner_up_ratio;
            row["worst_ratio"] = r.worst_ratio;
        }
        row["non_informative"] = r.non_informative;
        runs.push_back(std::move(row));
    }
    json j{{"manifest", manifest_to_json(manifest)},
           {"config", scenario_to_json(report.config)},
           {"frequencies", table},
           {"accepted", report.accepted},
           {"rejected", report.rejected},
           {"non_informative", report.non_informative},
           {"runs", runs}};
    if (report.accepted > 0) {
        j["winner"] = to_string(report.patterns[report.winner()]);
        j["runner_up"] = to_string(report.patterns[report.runner_up()]);
        const RatioStats stats = ratio_stats(report);
        j["median_runner_up_ratio"] = stats.median_runner_up;
        j["median_worst_ratio"] = stats.median_worst;
    }
    return j;
}

json comparison_to_json(const CovarianceComparison& cmp)
{
    auto matrix = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            std::vector<double> row(static_cast<std::size_t>(m.cols()));
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                row[static_cast<std::size_t>(c)] = m(r, c);
            rows.push_back(row);
        }
        return rows;
    };
    return {{"samples", cmp.samples},
            {"replications", cmp.replications},
            {"failed", cmp.failed},
            {"unreliable", cmp.unreliable},
            {"theoretical_trace", cmp.theoretical_trace},
            {"empirical_trace", cmp.empirical_trace},
            {"raw_trace", cmp.raw_trace},
            {"deviation", cmp.deviation},
            {"theoretical", matrix(cmp.theoretical)},
            {"empirical", matrix(cmp.empirical)}};
}

void write_report_csv(std::ostream& out, const ScenarioReport& report)
{
    out << "emp,percent,count\n";
    const auto flags = out.flags();
    const auto precision = out.precision();
    out << std::fixed << std::setprecision(2);
    for (std::size_t c = 0; c < report.patterns.size(); ++c)
        out << '"' << to_string(report.patterns[c]) << "\"," << report.percents[c] << ',' << report.counts[c] << '\n';
    out.flags(flags);
    out.precision(precision);
}

} // namespace cascade_emp
