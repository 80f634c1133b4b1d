#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "harvest/error.hpp"
#include "harvest/io.hpp"

using namespace harvest;

namespace {

std::string field_of(const json& doc) {
    try {
        parse_config(doc);
    } catch (const Error& e) {
        return e.field();
    }
    return "<none>";
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST(Config, EmptyDocumentIsTheCaseStudy) {
    const auto cfg = parse_config(json::object());
    EXPECT_EQ(cfg.truth.mu_p, 0.488);
    EXPECT_EQ(cfg.limits.t_bar, 8);
    EXPECT_EQ(cfg.economics.r_f, 880.0);
    EXPECT_EQ(cfg.planner.branch_k, 10);
    EXPECT_EQ(cfg.strategies.j0, (std::vector<int>{3, 10, 20}));
}

TEST(Config, PartialOverride) {
    const auto cfg = parse_config(json::parse(R"({"economics": {"c1": 15}, "planner": {"branch_k": 5, "mode": "fixed_plugin"}})"));
    EXPECT_EQ(cfg.economics.c1, 15.0);
    EXPECT_EQ(cfg.economics.c2, 1.0);
    EXPECT_EQ(cfg.planner.branch_k, 5);
    EXPECT_EQ(cfg.planner.mode, SamplerMode::FixedPlugin);
}

TEST(Config, ErrorsNameTheField) {
    EXPECT_EQ(field_of(json::parse(R"({"truth": {"mu_q": 1}})")), "truth.mu_q");
    EXPECT_EQ(field_of(json::parse(R"({"bogus": 1})")), "bogus");
    EXPECT_EQ(field_of(json::parse(R"({"economics": {"c1": "ten"}})")), "economics.c1");
    EXPECT_EQ(field_of(json::parse(R"({"limits": {"t_bar": 2.5}})")), "limits.t_bar");
    EXPECT_EQ(field_of(json::parse(R"({"truth": {"sigma_p": 0}})")), "truth.sigma_p");
    EXPECT_EQ(field_of(json::parse(R"({"strategies": {"reps": 1}})")), "strategies.reps");
    EXPECT_EQ(field_of(json::parse(R"({"planner": {"seed": -1}})")), "planner.seed");
    EXPECT_EQ(field_of(json::parse(R"({"campaign": {"setup_pmf": [0.5, 0.4]}})")), "campaign");
    EXPECT_EQ(field_of(json::parse(R"({"economics": {"r_f": 10}})")), "economics");
}

TEST(Config, TooFewHistoricalPairs) {
    try {
        parse_config(json::parse(R"({"strategies": {"j0": [2, 10]}})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.field(), "strategies.j0");
        EXPECT_NE(std::string(e.what()).find("J0 = 2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("lambda > 1"), std::string::npos);
    }
}

TEST(Config, FileLoading) {
    const auto good = temp_file("harvest_io_good.json", R"({"limits": {"t_bar": 6}})");
    EXPECT_EQ(load_config(good).limits.t_bar, 6);
    const auto bad = temp_file("harvest_io_bad.json", "{ not json");
    try {
        load_config(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.field(), "config");
        EXPECT_NE(std::string(e.what()).find("malformed JSON"), std::string::npos);
    }
    EXPECT_THROW(load_config("/nonexistent/harvest.json"), Error);
    std::filesystem::remove(good);
    std::filesystem::remove(bad);
}

TEST(Config, JsonRoundTrip) {
    auto cfg = parse_config(json::parse(
        R"({"planner": {"branch_schedule": [6, 3], "crn": true}, "campaign": {"setup_pmf": [0.25, 0.75]}})"));
    const auto again = parse_config(to_json(cfg));
    EXPECT_EQ(to_json(again), to_json(cfg));
    EXPECT_EQ(again.planner.branch_schedule, (std::vector<int>{6, 3}));
    EXPECT_TRUE(again.planner.crn);
}

TEST(Config, HashIsStableAndSensitive) {
    const auto a = config_hash(parse_config(json::object()));
    EXPECT_EQ(a.size(), 16u);
    EXPECT_EQ(a, config_hash(parse_config(json::object())));
    EXPECT_NE(a, config_hash(parse_config(json::parse(R"({"economics": {"c1": 10.5}})"))));
    EXPECT_EQ(provenance_line(parse_config(json::object()), 7), "# harvest config_hash=" + a + " seed=7");
}

TEST(Knowledge, JsonRoundTripAndValidation) {
    const KnowledgeState k{{0.5, 3.0, 1.5, 0.01}, {0.4, 3.0, 1.5, 0.02}};
    EXPECT_EQ(knowledge_from_json(to_json(k)), k);
    auto j = to_json(k);
    j.erase("beta_i");
    EXPECT_THROW(knowledge_from_json(j), Error);
    j = to_json(k);
    j["nu_p"] = -1.0;
    EXPECT_THROW(knowledge_from_json(j), Error);
    j = to_json(k);
    j["extra"] = 1;
    EXPECT_THROW(knowledge_from_json(j), Error);
}

TEST(Knowledge, VarianceJsonMarksUndefinedChannels) {
    const KnowledgeState k{{0.5, 3.0, 1.5, 0.01}, {0.4, 2.0, 1.0, 0.02}};
    const auto v = variance_json(k);
    EXPECT_TRUE(v["impurity"].is_null());
    EXPECT_NEAR(v["protein"]["inherent"].get<double>(), 0.02, 1e-15);
    EXPECT_NEAR(v["protein"]["total"].get<double>(),
                v["protein"]["inherent"].get<double>() + v["protein"]["model_risk"].get<double>(), 1e-15);
}

TEST(Recommend, ForcedStatesDescribeTheirRegime) {
    const auto cfg = parse_config(json::object());
    const auto r = recommend(HyperState{{30.0, 10.0}, {}, 2}, RecommendMode::Planner, cfg, 1);
    EXPECT_EQ(describe(r), "HARVEST (forced: capacity) q_harvest=290");
    const auto j = to_json(r);
    EXPECT_EQ(j["forced"], "capacity");
    EXPECT_TRUE(j["q_continue"].is_null());
    const auto f = recommend(HyperState{{5.0, 60.0}, {}, 2}, RecommendMode::Myopic, cfg, 1);
    EXPECT_EQ(to_json(f)["forced"], "failure");
    EXPECT_EQ(f.q_harvest, -880.0);
}

TEST(Recommend, MyopicNeedsVariance) {
    const auto cfg = parse_config(json::object());
    const KnowledgeState thin{{0.5, 2.0, 1.0, 0.01}, {0.5, 2.0, 1.0, 0.01}};
    try {
        recommend(HyperState{{5.0, 10.0}, thin, 2}, RecommendMode::Myopic, cfg, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InsufficientData);
    }
}

TEST(Recommend, MyopicMatchesTheClosedForm) {
    const auto cfg = parse_config(json::object());
    const KnowledgeState k{{0.5, 10.0, 5.0, 0.09}, {0.45, 10.0, 5.0, 0.08}};
    const auto r = recommend(HyperState{{12.0, 20.0}, k, 3}, RecommendMode::Myopic, cfg, 1);
    const double h = h_tilde(12.0, 20.0, k, cfg.economics, cfg.limits);
    EXPECT_NEAR(r.q_harvest - r.q_continue, h, 1e-9);
    EXPECT_EQ(r.action, h >= 0.0 ? Action::Harvest : Action::Continue);
}

TEST(Recommend, PlannerIsSeededAndRepeatable) {
    auto cfg = parse_config(json::parse(R"({"planner": {"branch_k": 4}})"));
    const KnowledgeState k{{0.5, 10.0, 5.0, 0.09}, {0.45, 10.0, 5.0, 0.08}};
    const HyperState h{{12.0, 20.0}, k, 3};
    EXPECT_EQ(recommend(h, RecommendMode::Planner, cfg, 5).q_continue,
              recommend(h, RecommendMode::Planner, cfg, 5).q_continue);
    EXPECT_NE(recommend(h, RecommendMode::Planner, cfg, 5).q_continue,
              recommend(h, RecommendMode::Planner, cfg, 6).q_continue);
    EXPECT_EQ(recommend_mode_from_string("myopic"), RecommendMode::Myopic);
    EXPECT_THROW(recommend_mode_from_string("oracle"), Error);
}

TEST(Csv, Headers) {
    std::ostringstream ev, bd, ep, sw;
    write_evaluation_csv(ev, EvaluationReport{});
    write_boundary_csv(bd, HarvestBoundary{});
    write_episode_csv(ep, EpisodeRecord{});
    write_sweep_csv(sw, SweepTable{});
    EXPECT_EQ(ev.str(), "strategy,J0,mean,sd,pct_of_pi_mdp,n_reps\n");
    EXPECT_EQ(bd.str(), "p,i_star,status\n");
    EXPECT_EQ(ep.str(), "t,p,i,action,reward,alpha_p,sigma_tilde_p,alpha_i,sigma_tilde_i\n");
    EXPECT_EQ(sw.str(), "c1,r_f,strategy,mean,sd,n_reps\n");
}

TEST(Csv, EvaluationRowsLeaveJ0BlankForFixedStrategies) {
    EvaluationReport rep;
    StrategyResult cp;
    cp.spec.kind = StrategyKind::CurrentPractice;
    cp.mean = 97.5;
    cp.sd = 318.0;
    cp.n = 100;
    cp.pct_of_pi_mdp = 55.0;
    rep.rows.push_back(cp);
    std::ostringstream os;
    write_evaluation_csv(os, rep);
    EXPECT_NE(os.str().find("\nCP,,97.5,318,55,100\n"), std::string::npos) << os.str();
}

TEST(Errors, CodeNames) {
    EXPECT_EQ(to_string(Errc::InsufficientData), "insufficient_data");
    EXPECT_EQ(to_string(Errc::ConditionVacuous), "condition_vacuous");
}
