#include <sstream>

#include <gtest/gtest.h>

#include "cascade_emp/io.hpp"

using namespace cascade_emp;
using nlohmann::json;

TEST(NetworkJson, RoundTrip)
{
    const json j = json::parse(R"({"n": 3, "modules": [
        {"family": "first_order", "theta": [0.5, 1.0]},
        {"family": "fir", "theta": [1.0, 0.25]}],
        "defaults": {"sigma2": 2.0, "lambda": 0.5}})");
    const auto f = network_from_json(j);
    EXPECT_EQ(f.network.node_count(), 3u);
    EXPECT_EQ(f.network.module(2).family(), ModuleFamily::Fir);
    EXPECT_DOUBLE_EQ(f.sigma2, 2.0);
    const auto back = network_from_json(network_to_json(f));
    EXPECT_EQ(back.network.stacked_theta(), f.network.stacked_theta());
    EXPECT_DOUBLE_EQ(back.lambda, 0.5);
}

TEST(NetworkJson, Errors)
{
    EXPECT_THROW(network_from_json(json::parse(R"({"n": 3, "modules": []})")), StructuralError);
    EXPECT_THROW(network_from_json(json::parse(R"({"modules": []})")), StructuralError);
    EXPECT_THROW(network_from_json(json::parse(R"({"n": 2, "modules": [{"family": "first_order", "theta": [0.5]}]})")),
                 StructuralError);
    EXPECT_THROW(network_from_json(json::parse(R"({"n": 2, "modules": [{"family": "warp", "theta": [0.5]}]})")),
                 StructuralError);
    try {
        network_from_json(json::parse(R"({"n": 3, "modules": [
            {"family": "first_order", "theta": [0.5, 1.0]},
            {"family": "first_order", "theta": [1.5, 1.0]}]})"));
        FAIL() << "expected UnstableError";
    } catch (const UnstableError& e) {
        EXPECT_NE(std::string(e.what()).find("G_2"), std::string::npos);
    }
}

TEST(ScenarioJson, RoundTripAndUnknownFields)
{
    const json j = json::parse(R"({"n": 5, "family": "second_order", "runs": 7, "variance_mode": "random",
        "perturbation": {"module": 2, "parameter": 3, "factor": 10}, "master_seed": 42, "criterion": "logdet",
        "threads": 2, "max_len": 1000, "identical_modules": true})");
    const auto cfg = scenario_from_json(j);
    EXPECT_EQ(cfg.n, 5u);
    EXPECT_EQ(cfg.family, ScenarioFamily::SecondOrder);
    EXPECT_EQ(cfg.perturbation->parameter, 3u);
    EXPECT_EQ(cfg.master_seed, 42u);
    EXPECT_EQ(cfg.truncation.max_len, 1000u);
    EXPECT_EQ(scenario_to_json(scenario_from_json(scenario_to_json(cfg))), scenario_to_json(cfg));
    EXPECT_THROW(scenario_from_json(json::parse(R"({"runz": 3})")), StructuralError);
    EXPECT_THROW(scenario_from_json(json::parse(R"({"runs": "many"})")), StructuralError);
    EXPECT_THROW(scenario_from_json(json::parse(R"({"n": 4, "perturbation": {"module": 4}})")), StructuralError);
}

TEST(Reports, RankingAndCsv)
{
    const CascadeNetwork net(std::vector<ParamModule>(3, ParamModule(ModuleFamily::FirstOrder, {0.5, 1.0})));
    const auto r = rank_emps(net, VarianceProfile::uniform(4, 1.0, 0.01), CriterionKind::Trace);
    const json j = ranking_to_json(r);
    EXPECT_EQ(j.at("entries").size(), 4u);
    EXPECT_EQ(j.at("entries")[0].at("emp"), "({1,2},{3,4})");
    EXPECT_GE(j.at("worst_ratio").get<double>(), 1.0);

    ScenarioConfig cfg;
    cfg.runs = 5;
    cfg.threads = 1;
    const auto rep = run_scenario(cfg);
    std::ostringstream csv;
    write_report_csv(csv, rep);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "emp,percent,count");
    RunManifest m;
    m.subcommand = "montecarlo";
    m.seed = 1;
    const json rj = report_to_json(rep, m);
    EXPECT_EQ(rj.at("manifest").at("version"), library_version());
    EXPECT_EQ(rj.at("runs").size(), 5u);
}
