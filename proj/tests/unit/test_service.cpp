#include <gtest/gtest.h>
#include <httplib.h>

#include <cmath>
#include <filesystem>
#include <thread>

#include "harvest/service.hpp"

using namespace harvest;
using namespace harvest::service;

namespace {

ExperimentConfig fast_config() {
    auto cfg = parse_config(json::object());
    cfg.planner.branch_k = 3;
    return cfg;
}

std::string history_body(int n, std::uint64_t seed = 42) {
    json data = json::array();
    for (int k = 0; k < n; ++k) data.push_back({{"phi", 0.45 + 0.01 * (k % 7)}, {"psi", 0.50 - 0.01 * (k % 5)}});
    return json{{"historical_data", data}, {"seed", seed}}.dump();
}

std::string observation(double p, double i) { return json{{"p_next", p}, {"i_next", i}}.dump(); }

class ServiceTest : public ::testing::Test {
protected:
    ServiceTest() : svc(fast_config(), std::make_shared<SessionStore>(":memory:")) {}

    std::string open(int n = 10) {
        const auto r = svc.create(history_body(n));
        EXPECT_EQ(r.status, 201) << r.body.dump();
        return r.body.at("id").get<std::string>();
    }

    SessionService svc;
};

}  // namespace

TEST_F(ServiceTest, CreateReturnsInitialStateAndKnowledge) {
    const auto r = svc.create(history_body(10));
    ASSERT_EQ(r.status, 201);
    EXPECT_EQ(r.body["seed"], 42u);
    EXPECT_EQ(r.body["initial_state"]["p"], 1.5);
    EXPECT_EQ(r.body["initial_state"]["i"], 2.0);
    EXPECT_EQ(r.body["initial_state"]["regime"], "free");
    EXPECT_EQ(r.body["knowledge"]["nu_p"], 10.0);
    const auto& v = r.body["variance_decomposition"]["protein"];
    EXPECT_NEAR(v["total"].get<double>(), v["inherent"].get<double>() + v["model_risk"].get<double>(), 1e-15);
}

TEST_F(ServiceTest, CreateRejectsBadRequests) {
    auto r = svc.create("{not json");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body["code"], "malformed_json");

    r = svc.create(history_body(2));
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body["field"], "historical_data");
    EXPECT_NE(r.body["message"].get<std::string>().find("(got 2)"), std::string::npos);

    r = svc.create("{}");
    EXPECT_EQ(r.status, 400);

    r = svc.create(R"({"prior": {"alpha_p": 0.5, "nu_p": 1, "lambda_p": 0.5, "beta_p": 0,
                                 "alpha_i": 0.5, "nu_i": 1, "lambda_i": 0.5, "beta_i": 0}})");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body["field"], "prior");

    r = svc.create(R"({"historical_data": [{"phi": 0.4, "psi": 0.4}, {"phi": 0.5, "psi": 0.5}, {"phi": 0.6, "psi": 0.6}],
                       "config": {"planner": {"branch_k": 0}}})");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body["field"], "planner");

    r = svc.create(R"({"historical_data": [{"phi": 0.4, "psi": 0.4}, {"phi": 0.5, "psi": 0.5}, {"phi": 0.6, "psi": 0.6}],
                       "seed": -3})");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body["field"], "seed");
}

TEST_F(ServiceTest, CreateAcceptsAProperPrior) {
    const auto r = svc.create(R"({"prior": {"alpha_p": 0.5, "nu_p": 4, "lambda_p": 2, "beta_p": 0.05,
                                            "alpha_i": 0.45, "nu_i": 4, "lambda_i": 2, "beta_i": 0.04}})");
    ASSERT_EQ(r.status, 201);
    EXPECT_EQ(r.body["knowledge"]["alpha_i"], 0.45);
}

TEST_F(ServiceTest, ObserveLearnsTheLogGrowth) {
    const auto id = open();
    const auto r = svc.observe(id, observation(1.5 * std::exp(0.488), 2.0 * std::exp(0.3)));
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_NEAR(r.body["phi"].get<double>(), 0.488, 1e-12);
    EXPECT_NEAR(r.body["psi"].get<double>(), 0.3, 1e-12);
    EXPECT_TRUE(r.body["learned"].get<bool>());
    EXPECT_EQ(r.body["epoch"], 1);
    EXPECT_EQ(r.body["state"]["t"], 1);
    EXPECT_EQ(r.body["knowledge"]["nu_p"], 11.0);
    const auto& v = r.body["variance_decomposition"]["impurity"];
    EXPECT_NEAR(v["total"].get<double>(), v["inherent"].get<double>() + v["model_risk"].get<double>(), 1e-15);
}

TEST_F(ServiceTest, ObserveValidatesMeasurements) {
    const auto id = open();
    EXPECT_EQ(svc.observe(id, observation(0.0, 3.0)).status, 422);
    EXPECT_EQ(svc.observe(id, observation(3.0, -1.0)).body["code"], "invalid_measurement");
    EXPECT_EQ(svc.observe(id, R"({"p_next": 3})").body["field"], "i_next");
    EXPECT_EQ(svc.observe(id, "[1,").status, 400);
    EXPECT_EQ(svc.observe("abc123", observation(3.0, 3.0)).status, 404);
}

TEST_F(ServiceTest, FailedPeriodIsNotLearnedAndLocksTheSession) {
    const auto id = open();
    const auto r = svc.observe(id, observation(3.0, 60.0));
    ASSERT_EQ(r.status, 200);
    EXPECT_FALSE(r.body["learned"].get<bool>());
    EXPECT_EQ(r.body["knowledge"]["nu_p"], 10.0);
    EXPECT_EQ(r.body["state"]["regime"], "failure");
    EXPECT_EQ(svc.observe(id, observation(4.0, 10.0)).status, 409);
    const auto rec = svc.recommendation(id, "planner", std::nullopt);
    EXPECT_EQ(rec.status, 200);
    EXPECT_EQ(rec.body["forced"], "failure");
    const auto h = svc.harvest(id);
    EXPECT_EQ(h.body["reward"], -880.0);
    EXPECT_DOUBLE_EQ(h.body["total_reward"].get<double>(), -2.0 - 880.0);
}

TEST_F(ServiceTest, RecommendationIsIdempotentAndResampleable) {
    const auto id = open();
    const auto a = svc.recommendation(id, "planner", std::nullopt);
    const auto b = svc.recommendation(id, "planner", std::nullopt);
    ASSERT_EQ(a.status, 200) << a.body.dump();
    EXPECT_EQ(a.body, b.body);
    const auto c = svc.recommendation(id, "planner", 1);
    EXPECT_NE(c.body["seed"], a.body["seed"]);
    EXPECT_NE(c.body["q_continue"], a.body["q_continue"]);
    EXPECT_EQ(svc.recommendation(id, "planner", 1).body, c.body);
    EXPECT_EQ(a.body["mode"], "planner");
    EXPECT_EQ(a.body["epoch"], 0);
}

TEST_F(ServiceTest, RecommendationModes) {
    const auto id = open();
    const auto m = svc.recommendation(id, "myopic", std::nullopt);
    ASSERT_EQ(m.status, 200);
    EXPECT_EQ(m.body["mode"], "myopic");
    EXPECT_EQ(m.body["action"], "CONTINUE");
    EXPECT_EQ(svc.recommendation(id, "greedy", std::nullopt).status, 400);
    EXPECT_EQ(svc.recommendation("ffff", "planner", std::nullopt).status, 404);
}

TEST_F(ServiceTest, WhatIfDoesNotCommit) {
    const auto id = open();
    const auto w = svc.recommendation(id, "myopic", std::nullopt, PhysicalState{25.0, 48.0});
    ASSERT_EQ(w.status, 200);
    EXPECT_TRUE(w.body["what_if"].get<bool>());
    EXPECT_EQ(w.body["epoch"], 1);
    const auto over = svc.recommendation(id, "planner", std::nullopt, PhysicalState{5.0, 55.0});
    EXPECT_EQ(over.body["forced"], "failure");
    EXPECT_EQ(svc.recommendation(id, "planner", std::nullopt, PhysicalState{-1.0, 5.0}).status, 422);
    EXPECT_EQ(svc.recommendation(id, "planner", std::nullopt).body["epoch"], 0);
}

TEST_F(ServiceTest, BoundaryFormats) {
    const auto id = open();
    const auto j = svc.boundary(id, "");
    ASSERT_EQ(j.status, 200);
    EXPECT_EQ(j.body["points"].size(), 120u);
    const auto c = svc.boundary(id, "csv");
    EXPECT_EQ(c.content_type, "text/csv");
    EXPECT_EQ(c.raw.rfind("p,i_star,status\n", 0), 0u);
    EXPECT_EQ(svc.boundary("ffff", "").status, 404);
}

TEST_F(ServiceTest, EpochGuardRejectsDuplicateEntries) {
    const auto id = open();
    const auto body = json{{"p_next", 2.4}, {"i_next", 3.1}, {"epoch", 0}}.dump();
    ASSERT_EQ(svc.observe(id, body).status, 200);
    const auto again = svc.observe(id, body);
    EXPECT_EQ(again.status, 409);
    EXPECT_EQ(again.body["code"], "stale_epoch");
    EXPECT_EQ(svc.observe(id, R"({"p_next": 3, "i_next": 4, "epoch": "one"})").status, 400);
    EXPECT_EQ(svc.observe(id, json{{"p_next", 3.0}, {"i_next", 4.0}, {"epoch", 1}}.dump()).status, 200);
}

TEST_F(ServiceTest, SessionViewReflectsTheLog) {
    const auto id = open();
    ASSERT_EQ(svc.observe(id, observation(2.4, 3.1)).status, 200);
    ASSERT_EQ(svc.observe(id, observation(3.9, 4.7)).status, 200);
    const auto v = svc.get(id);
    ASSERT_EQ(v.status, 200);
    EXPECT_EQ(v.body["status"], "live");
    EXPECT_EQ(v.body["epoch"], 2);
    ASSERT_EQ(v.body["trajectory"].size(), 3u);
    EXPECT_EQ(v.body["trajectory"][2]["p"], 3.9);
    EXPECT_EQ(v.body["knowledge"]["nu_i"], 12.0);
    EXPECT_DOUBLE_EQ(v.body["total_reward"].get<double>(), -4.0);
    svc.harvest(id);
    EXPECT_EQ(svc.get(id).body["status"], "harvested");
    EXPECT_EQ(svc.get(id).body["stopping_time"], 2);
    EXPECT_EQ(svc.get("ffff").status, 404);
}

TEST_F(ServiceTest, ImpuritySpurtMovesTheBoundaryDown) {
    const auto id = open();
    ASSERT_EQ(svc.observe(id, observation(1.5 * std::exp(0.48), 2.0 * std::exp(0.48))).status, 200);
    const auto before = svc.boundary(id, "").body["points"];
    ASSERT_EQ(svc.observe(id, observation(1.5 * std::exp(0.96), 2.0 * std::exp(1.48))).status, 200);
    const auto after = svc.boundary(id, "").body["points"];
    int lower = 0, higher = 0;
    for (std::size_t k = 0; k < before.size(); ++k) {
        if (before[k]["status"] != "root" || after[k]["status"] != "root") continue;
        const double d = after[k]["i_star"].get<double>() - before[k]["i_star"].get<double>();
        lower += d < 0.0;
        higher += d > 0.0;
    }
    EXPECT_GT(lower, 0);
    EXPECT_EQ(higher, 0);
}

TEST_F(ServiceTest, HarvestAccounting) {
    const auto id = open();
    double p = 1.5, i = 2.0;
    for (int k = 0; k < 3; ++k) {
        p *= std::exp(0.5);
        i *= std::exp(0.45);
        ASSERT_EQ(svc.observe(id, observation(p, i)).status, 200);
    }
    const auto h = svc.harvest(id);
    ASSERT_EQ(h.status, 200);
    EXPECT_EQ(h.body["stopping_time"], 3);
    EXPECT_NEAR(h.body["reward"].get<double>(), 10.0 * p - i, 1e-9);
    EXPECT_NEAR(h.body["total_reward"].get<double>(), 10.0 * p - i - 6.0, 1e-9);
    EXPECT_EQ(svc.harvest(id).status, 409);
    EXPECT_EQ(svc.observe(id, observation(p, i)).status, 409);
    EXPECT_EQ(svc.recommendation(id, "planner", std::nullopt).status, 409);
}

TEST_F(ServiceTest, ForcedTimeBlocksObservation) {
    const auto id = open();
    double p = 1.5, i = 2.0;
    for (int k = 0; k < 8; ++k) {
        p *= 1.2;
        i *= 1.2;
        ASSERT_EQ(svc.observe(id, observation(p, i)).status, 200);
    }
    EXPECT_EQ(svc.observe(id, observation(p, i)).status, 409);
    EXPECT_EQ(svc.recommendation(id, "planner", std::nullopt).body["forced"], "time");
}

TEST_F(ServiceTest, KnowledgeIsTheFoldOfTheLog) {
    json doc{{"prior", to_json(KnowledgeState{{0.5, 3, 1.5, 0.01}, {0.4, 3, 1.5, 0.02}})},
             {"log", json::array({{{"phi", 0.3}, {"psi", 0.6}}, {{"phi", 0.7}, {"psi", 0.2}}})}};
    const auto k = SessionService::fold_knowledge(doc);
    KnowledgeState want{{0.5, 3, 1.5, 0.01}, {0.4, 3, 1.5, 0.02}};
    want = update(update(want, Observation{0.3, 0.6}), Observation{0.7, 0.2});
    EXPECT_EQ(k, want);
}

TEST_F(ServiceTest, SessionsAreIsolatedUnderConcurrency) {
    std::vector<std::string> ids;
    for (int s = 0; s < 4; ++s) ids.push_back(open());
    std::vector<std::thread> pool;
    for (int w = 0; w < 4; ++w)
        pool.emplace_back([&, w] {
            for (int s = 0; s < 4; ++s) {
                const auto r = svc.observe(ids[static_cast<std::size_t>(s)], observation(2.0 + w, 3.0 + s));
                EXPECT_EQ(r.status, 200);
            }
        });
    for (auto& t : pool) t.join();
    for (int s = 0; s < 4; ++s) {
        const auto r = svc.recommendation(ids[static_cast<std::size_t>(s)], "myopic", std::nullopt);
        EXPECT_EQ(r.body["epoch"], 4);
    }
}

TEST(ServicePersistence, SessionsSurviveRestart) {
    const auto path = std::filesystem::temp_directory_path() / "harvest_service_test.db";
    std::filesystem::remove(path);
    std::string id;
    json before;
    {
        SessionService a(fast_config(), std::make_shared<SessionStore>(path.string()));
        id = a.create(history_body(6)).body["id"].get<std::string>();
        ASSERT_EQ(a.observe(id, observation(2.4, 3.1)).status, 200);
        before = a.recommendation(id, "planner", std::nullopt).body;
    }
    SessionService b(fast_config(), std::make_shared<SessionStore>(path.string()));
    EXPECT_EQ(b.recommendation(id, "planner", std::nullopt).body, before);
    EXPECT_EQ(b.observe(id, observation(3.0, 4.0)).body["epoch"], 2);
    std::filesystem::remove(path);
}

TEST(ServiceHttp, RoutesAndToken) {
    SessionService svc(fast_config(), std::make_shared<SessionStore>(":memory:"));
    httplib::Server server;
    mount(server, svc, ServerOptions{"127.0.0.1", 0, "s3cret"});
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread runner([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    const httplib::Headers auth{{"X-Harvest-Token", "s3cret"}};
    auto health = client.Get("/v1/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);

    auto denied = client.Post("/v1/sessions", history_body(5), "application/json");
    ASSERT_TRUE(denied);
    EXPECT_EQ(denied->status, 401);
    EXPECT_EQ(json::parse(denied->body)["code"], "unauthorized");

    auto created = client.Post("/v1/sessions", auth, history_body(5), "application/json");
    ASSERT_TRUE(created);
    ASSERT_EQ(created->status, 201);
    const auto id = json::parse(created->body)["id"].get<std::string>();
    const std::string base = "/v1/sessions/" + id;

    auto obs = client.Post(base + "/observe", auth, observation(2.4, 3.2), "application/json");
    EXPECT_EQ(obs->status, 200);
    auto view = client.Get(base, auth);
    EXPECT_EQ(view->status, 200);
    EXPECT_EQ(json::parse(view->body)["trajectory"].size(), 2u);
    auto rec = client.Get(base + "/recommendation?mode=myopic", auth);
    EXPECT_EQ(rec->status, 200);
    EXPECT_EQ(json::parse(rec->body)["epoch"], 1);
    auto what_if = client.Get(base + "/recommendation?mode=myopic&p=5&i=6", auth);
    EXPECT_TRUE(json::parse(what_if->body)["what_if"].get<bool>());
    EXPECT_EQ(client.Get(base + "/recommendation?resample=-1", auth)->status, 400);
    EXPECT_EQ(client.Get(base + "/recommendation?resample=x", auth)->status, 400);
    EXPECT_EQ(client.Get(base + "/recommendation?p=abc&i=2", auth)->status, 400);
    auto csv = client.Get(base + "/boundary?format=csv", auth);
    EXPECT_EQ(csv->status, 200);
    EXPECT_EQ(csv->get_header_value("Content-Type"), "text/csv");
    EXPECT_EQ(client.Post(base + "/harvest", auth, "", "application/json")->status, 200);
    EXPECT_EQ(client.Post(base + "/harvest", auth, "", "application/json")->status, 409);
    EXPECT_EQ(client.Get("/v1/sessions/0123/recommendation", auth)->status, 404);
    EXPECT_EQ(client.Get("/v1/nothing", auth)->status, 404);

    server.stop();
    runner.join();
}
