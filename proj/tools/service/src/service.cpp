#include "harvest/service.hpp"

#include <sqlite3.h>

#include <cmath>
#include <ctime>
#include <random>
#include <sstream>

#include "harvest/error.hpp"

namespace harvest::service {

json ApiError::body() const {
    json out{{"code", code}, {"message", message}};
    if (!field.empty()) out["field"] = field;
    return out;
}

namespace {

Response error(int status, std::string code, std::string message, std::string field = {}) {
    return {status, ApiError{status, std::move(code), std::move(message), std::move(field)}.body()};
}

Response from_error(const Error& e, int status) {
    return error(status, std::string(to_string(e.code())), e.what(), e.field());
}

std::string now_iso() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string new_id() {
    std::random_device rd;
    std::ostringstream os;
    os << std::hex;
    for (int k = 0; k < 4; ++k) os << static_cast<std::uint32_t>(rd());
    return os.str();
}

std::optional<json> parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    try {
        return json::parse(body);
    } catch (const json::parse_error&) {
        return std::nullopt;
    }
}

struct NotFound {};

}  // namespace

struct SessionStore::Impl {
    sqlite3* db = nullptr;
};

SessionStore::SessionStore(const std::string& path) : impl_(std::make_unique<Impl>()) {
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
    if (sqlite3_open_v2(path.c_str(), &impl_->db, flags, nullptr) != SQLITE_OK) {
        const std::string msg = impl_->db ? sqlite3_errmsg(impl_->db) : "out of memory";
        sqlite3_close(impl_->db);
        throw std::runtime_error("cannot open session store: " + msg);
    }
    char* err = nullptr;
    if (sqlite3_exec(impl_->db, "CREATE TABLE IF NOT EXISTS sessions (id TEXT PRIMARY KEY, doc TEXT NOT NULL)",
                     nullptr, nullptr, &err) != SQLITE_OK) {
        const std::string msg = err ? err : "unknown";
        sqlite3_free(err);
        throw std::runtime_error("cannot initialise session store: " + msg);
    }
}

SessionStore::~SessionStore() { sqlite3_close(impl_->db); }

void SessionStore::put(const std::string& id, const json& doc) {
    sqlite3_stmt* stmt = nullptr;
    sqlite3_prepare_v2(impl_->db, "INSERT OR REPLACE INTO sessions (id, doc) VALUES (?1, ?2)", -1, &stmt, nullptr);
    const std::string text = doc.dump();
    sqlite3_bind_text(stmt, 1, id.c_str(), -1, SQLITE_TRANSIENT);
    sqlite3_bind_text(stmt, 2, text.c_str(), -1, SQLITE_TRANSIENT);
    const int rc = sqlite3_step(stmt);
    sqlite3_finalize(stmt);
    if (rc != SQLITE_DONE) throw std::runtime_error(std::string("session store write failed: ") + sqlite3_errmsg(impl_->db));
}

std::optional<json> SessionStore::get(const std::string& id) const {
    sqlite3_stmt* stmt = nullptr;
    sqlite3_prepare_v2(impl_->db, "SELECT doc FROM sessions WHERE id = ?1", -1, &stmt, nullptr);
    sqlite3_bind_text(stmt, 1, id.c_str(), -1, SQLITE_TRANSIENT);
    std::optional<json> out;
    if (sqlite3_step(stmt) == SQLITE_ROW)
        out = json::parse(reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0)));
    sqlite3_finalize(stmt);
    return out;
}

SessionService::SessionService(ExperimentConfig defaults, std::shared_ptr<SessionStore> store)
    : defaults_(std::move(defaults)), store_(std::move(store)) {}

std::mutex& SessionService::lock_for(const std::string& id) {
    std::lock_guard guard(locks_mutex_);
    auto& slot = locks_[id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

json SessionService::load(const std::string& id) const {
    auto doc = store_->get(id);
    if (!doc) throw NotFound{};
    return *doc;
}

KnowledgeState SessionService::fold_knowledge(const json& doc) {
    KnowledgeState k = knowledge_from_json(doc.at("prior"));
    for (const auto& o : doc.at("log")) k = update(k, Observation{o.at("phi").get<double>(), o.at("psi").get<double>()});
    return k;
}

namespace {

struct Live {
    ExperimentConfig cfg;
    HyperState h;
};

Live live_state(const json& doc) {
    Live out{parse_config(doc.at("config")), {}};
    const auto& last = doc.at("trajectory").back();
    out.h.physical = {last.at("p").get<double>(), last.at("i").get<double>()};
    out.h.t = doc.at("epoch").get<int>();
    out.h.knowledge = SessionService::fold_knowledge(doc);
    return out;
}

json state_json(const HyperState& h, const ProcessLimits& limits) {
    const auto c = clamp_and_classify(h.physical, h.t, limits);
    return {{"p", c.state.protein}, {"i", c.state.impurity}, {"t", h.t}, {"regime", std::string(to_string(c.regime))}};
}

}  // namespace

Response SessionService::create(const std::string& body) {
    const auto req = parse_body(body);
    if (!req || !req->is_object()) return error(400, "malformed_json", "request body is not a JSON object");
    try {
        json cfg_doc = to_json(defaults_);
        if (req->contains("config")) {
            if (!req->at("config").is_object()) return error(400, "invalid_argument", "config must be an object", "config");
            cfg_doc.merge_patch(req->at("config"));
        }
        const ExperimentConfig cfg = parse_config(cfg_doc);

        KnowledgeState prior;
        if (req->contains("prior")) {
            prior = knowledge_from_json(req->at("prior"));
            if (!has_predictive_variance(prior))
                return error(400, "invalid_argument", "prior must be proper: lambda > 1, nu > 0, beta > 0 on both channels",
                             "prior");
        } else if (req->contains("historical_data")) {
            const auto& data = req->at("historical_data");
            if (!data.is_array()) return error(400, "invalid_argument", "expected an array", "historical_data");
            std::vector<Observation> obs;
            for (const auto& o : data) {
                if (!o.is_object() || !o.contains("phi") || !o.contains("psi") || !o.at("phi").is_number() ||
                    !o.at("psi").is_number())
                    return error(400, "invalid_argument", "each entry needs numeric phi and psi", "historical_data");
                obs.push_back({o.at("phi").get<double>(), o.at("psi").get<double>()});
            }
            if (obs.size() < 3)
                return error(400, "invalid_argument",
                             "historical_data needs at least 3 observations so that lambda > 1 (got " +
                                 std::to_string(obs.size()) + ")",
                             "historical_data");
            prior = fit_improper(obs);
        } else {
            return error(400, "invalid_argument", "provide historical_data or prior", "historical_data");
        }

        std::uint64_t seed = 0;
        if (req->contains("seed")) {
            if (!req->at("seed").is_number_unsigned()) return error(400, "invalid_argument", "expected a non-negative integer", "seed");
            seed = req->at("seed").get<std::uint64_t>();
        } else {
            seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) | std::random_device{}();
        }

        const std::string id = new_id();
        const std::string ts = now_iso();
        json doc{{"id", id},
                 {"config", to_json(cfg)},
                 {"seed", seed},
                 {"prior", to_json(prior)},
                 {"log", json::array()},
                 {"trajectory", json::array({{{"p", cfg.limits.p0}, {"i", cfg.limits.i0}}})},
                 {"epoch", 0},
                 {"status", "live"},
                 {"total_reward", 0.0},
                 {"created", ts},
                 {"updated", ts}};
        store_->put(id, doc);
        const auto s = live_state(doc);
        return {201,
                {{"id", id},
                 {"seed", seed},
                 {"initial_state", state_json(s.h, cfg.limits)},
                 {"knowledge", to_json(s.h.knowledge)},
                 {"variance_decomposition", variance_json(s.h.knowledge)}}};
    } catch (const Error& e) {
        return from_error(e, 400);
    }
}

Response SessionService::get(const std::string& id) {
    std::lock_guard guard(lock_for(id));
    try {
        const json doc = load(id);
        const auto s = live_state(doc);
        json out{{"id", id},
                 {"status", doc.at("status")},
                 {"seed", doc.at("seed")},
                 {"epoch", s.h.t},
                 {"state", state_json(s.h, s.cfg.limits)},
                 {"trajectory", doc.at("trajectory")},
                 {"knowledge", to_json(s.h.knowledge)},
                 {"variance_decomposition", variance_json(s.h.knowledge)},
                 {"total_reward", doc.at("total_reward")},
                 {"config", doc.at("config")},
                 {"created", doc.at("created")},
                 {"updated", doc.at("updated")}};
        if (doc.contains("stopping_time")) out["stopping_time"] = doc.at("stopping_time");
        return {200, out};
    } catch (const NotFound&) {
        return error(404, "not_found", "unknown session " + id);
    }
}

Response SessionService::observe(const std::string& id, const std::string& body) {
    std::lock_guard guard(lock_for(id));
    try {
        json doc = load(id);
        if (doc.at("status") != "live") return error(409, "conflict", "session already harvested");
        const auto req = parse_body(body);
        if (!req || !req->is_object()) return error(400, "malformed_json", "request body is not a JSON object");
        if (req->contains("epoch")) {
            if (!req->at("epoch").is_number_integer())
                return error(400, "invalid_argument", "expected an integer", "epoch");
            if (req->at("epoch").get<int>() != doc.at("epoch").get<int>())
                return error(409, "stale_epoch",
                             "observation is for epoch " + std::to_string(req->at("epoch").get<int>()) +
                                 " but the session is at epoch " + std::to_string(doc.at("epoch").get<int>()),
                             "epoch");
        }
        for (const char* key : {"p_next", "i_next"})
            if (!req->contains(key) || !req->at(key).is_number())
                return error(400, "invalid_argument", "expected a number", key);
        const double p_next = req->at("p_next").get<double>();
        const double i_next = req->at("i_next").get<double>();
        if (!(p_next > 0.0)) return error(422, "invalid_measurement", "measurements must be positive", "p_next");
        if (!(i_next > 0.0)) return error(422, "invalid_measurement", "measurements must be positive", "i_next");

        auto s = live_state(doc);
        const auto c = clamp_and_classify(s.h.physical, s.h.t, s.cfg.limits);
        if (c.regime != Regime::FreeChoice)
            return error(409, "conflict", std::string("harvest is forced (") + std::string(to_string(c.regime)) + ")");

        const Observation o{std::log(p_next / s.h.physical.protein), std::log(i_next / s.h.physical.impurity)};
        const bool usable = i_next < s.cfg.limits.i_bar;
        if (usable) doc["log"].push_back({{"phi", o.phi}, {"psi", o.psi}});
        doc["trajectory"].push_back({{"p", p_next}, {"i", i_next}});
        const int epoch = doc.at("epoch").get<int>() + 1;
        doc["epoch"] = epoch;
        doc["total_reward"] = doc.at("total_reward").get<double>() -
                              std::pow(s.cfg.economics.gamma, epoch - 1) * s.cfg.economics.c_u;
        doc["updated"] = now_iso();
        store_->put(id, doc);

        s = live_state(doc);
        return {200,
                {{"epoch", epoch},
                 {"phi", o.phi},
                 {"psi", o.psi},
                 {"learned", usable},
                 {"state", state_json(s.h, s.cfg.limits)},
                 {"knowledge", to_json(s.h.knowledge)},
                 {"variance_decomposition", variance_json(s.h.knowledge)}}};
    } catch (const NotFound&) {
        return error(404, "not_found", "unknown session " + id);
    } catch (const Error& e) {
        return from_error(e, 400);
    }
}

Response SessionService::recommendation(const std::string& id, const std::string& mode_name,
                                        std::optional<std::uint64_t> resample,
                                        std::optional<PhysicalState> what_if) {
    std::lock_guard guard(lock_for(id));
    try {
        const json doc = load(id);
        if (doc.at("status") != "live") return error(409, "conflict", "session already harvested");
        RecommendMode mode;
        try {
            mode = recommend_mode_from_string(mode_name.empty() ? "planner" : mode_name);
        } catch (const Error& e) {
            return from_error(e, 400);
        }
        auto s = live_state(doc);
        if (what_if) {
            if (!(what_if->protein > 0.0) || !(what_if->impurity > 0.0))
                return error(422, "invalid_measurement", "measurements must be positive", "p");
            const auto c = clamp_and_classify(s.h.physical, s.h.t, s.cfg.limits);
            if (c.regime != Regime::FreeChoice)
                return error(409, "conflict", std::string("harvest is forced (") + std::string(to_string(c.regime)) + ")");
            if (what_if->impurity < s.cfg.limits.i_bar)
                s.h.knowledge = update(s.h.knowledge, Observation{std::log(what_if->protein / s.h.physical.protein),
                                                                  std::log(what_if->impurity / s.h.physical.impurity)});
            s.h.physical = *what_if;
            s.h.t += 1;
        }
        std::uint64_t seed = doc.at("seed").get<std::uint64_t>();
        if (resample) seed = derive_seed(seed, {*resample});
        try {
            auto out = to_json(recommend(s.h, mode, s.cfg, seed));
            out["epoch"] = s.h.t;
            out["seed"] = seed;
            out["what_if"] = what_if.has_value();
            return {200, out};
        } catch (const Error& e) {
            return from_error(e, 422);
        }
    } catch (const NotFound&) {
        return error(404, "not_found", "unknown session " + id);
    }
}

Response SessionService::boundary(const std::string& id, const std::string& format) {
    std::lock_guard guard(lock_for(id));
    try {
        const json doc = load(id);
        const auto s = live_state(doc);
        if (!has_predictive_variance(s.h.knowledge))
            return error(422, "insufficient_data", "boundary needs lambda > 1 on both channels");
        const auto b = trace_boundary(s.h.knowledge, s.cfg.economics, s.cfg.limits);
        if (format == "csv") {
            std::ostringstream os;
            write_boundary_csv(os, b);
            return Response::text(200, os.str(), "text/csv");
        }
        json pts = json::array();
        for (const auto& pt : b.points)
            pts.push_back({{"p", pt.p}, {"i_star", pt.i_star}, {"status", std::string(to_string(pt.status))}});
        return {200, {{"epoch", s.h.t}, {"points", pts}}};
    } catch (const NotFound&) {
        return error(404, "not_found", "unknown session " + id);
    } catch (const Error& e) {
        return from_error(e, 422);
    }
}

Response SessionService::harvest(const std::string& id) {
    std::lock_guard guard(lock_for(id));
    try {
        json doc = load(id);
        if (doc.at("status") != "live") return error(409, "conflict", "session already harvested");
        const auto s = live_state(doc);
        const auto c = clamp_and_classify(s.h.physical, s.h.t, s.cfg.limits);
        const double reward = terminal_value(c.state, c.regime, s.cfg.economics, s.cfg.limits);
        const double total =
            doc.at("total_reward").get<double>() + std::pow(s.cfg.economics.gamma, s.h.t) * reward;
        doc["status"] = "harvested";
        doc["total_reward"] = total;
        doc["stopping_time"] = s.h.t;
        doc["updated"] = now_iso();
        store_->put(id, doc);
        return {200,
                {{"total_reward", total},
                 {"stopping_time", s.h.t},
                 {"reward", reward},
                 {"regime", std::string(to_string(c.regime))}}};
    } catch (const NotFound&) {
        return error(404, "not_found", "unknown session " + id);
    } catch (const Error& e) {
        return from_error(e, 400);
    }
}

}  // namespace harvest::service
