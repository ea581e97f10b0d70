#ifndef CASCADE_EMP_IO_HPP
#define CASCADE_EMP_IO_HPP

/** @file
 * JSON network and scenario files, and report serialization.
 *
 * Network file:
 *
 *     { "n": 4,
 *       "modules": [ { "family": "first_order", "theta": [0.5, 1.0] }, ... ],
 *       "defaults": { "sigma2": 1.0, "lambda": 0.01 } }
 *
 * "modules" lists G_1 .. G_{n-1} in edge order; "defaults" is optional.
 */

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade_emp/cascade.hpp"
#include "cascade_emp/monte_carlo.hpp"
#include "cascade_emp/pem.hpp"
#include "cascade_emp/ranking.hpp"

namespace cascade_emp
{

std::string library_version();

struct NetworkFile
{
    CascadeNetwork network;
    double sigma2 = 1.0;
    double lambda = 0.01;
};

/// Throws StructuralError on schema errors and UnstableError naming the
/// first unstable module.
NetworkFile network_from_json(const nlohmann::json& j);
nlohmann::json network_to_json(const NetworkFile& file);
NetworkFile load_network(const std::filesystem::path& path);

/// Fields of ScenarioConfig; every field is optional and defaults to the
/// ScenarioConfig default.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Provenance attached to every emitted result.
struct RunManifest
{
    std::string subcommand;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string version = library_version();
    std::vector<std::string> outputs;
};

nlohmann::json manifest_to_json(const RunManifest& m);

nlohmann::json emp_to_json(const Emp& emp);
nlohmann::json ranking_to_json(const EmpRanking& ranking);
nlohmann::json report_to_json(const ScenarioReport& report, const RunManifest& manifest);
nlohmann::json comparison_to_json(const CovarianceComparison& cmp);

/// Frequency table: one row per minimal EMP, columns emp,percent,count.
void write_report_csv(std::ostream& out, const ScenarioReport& report);

/// Parses a JSON document, converting parser errors to StructuralError.
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace cascade_emp

#endif
