#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "harvest/io.hpp"

namespace httplib {
class Server;
}

namespace harvest::service {

/// Error surfaced to HTTP clients as {code, message, field?}.
struct ApiError {
    int status = 400;
    std::string code;
    std::string message;
    std::string field = {};

    json body() const;
};

struct Response {
    Response() = default;
    Response(int s, json b) : status(s), body(std::move(b)) {}
    static Response text(int s, std::string content, std::string type) {
        Response r;
        r.status = s;
        r.content_type = std::move(type);
        r.raw = std::move(content);
        return r;
    }

    int status = 200;
    json body;
    std::string content_type = "application/json";
    std::string raw;  // used instead of body for non-JSON payloads
};

/// Key-value persistence of session documents in an SQLite file.
class SessionStore {
public:
    /// ":memory:" keeps sessions for the lifetime of the store only.
    explicit SessionStore(const std::string& path);
    ~SessionStore();
    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    void put(const std::string& id, const json& doc);
    std::optional<json> get(const std::string& id) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Session lifecycle, independent of the transport.
/// A session's knowledge is always recomputed as the fold of update() over its log.
class SessionService {
public:
    SessionService(ExperimentConfig defaults, std::shared_ptr<SessionStore> store);

    Response create(const std::string& body);
    /// Full session view: trajectory, knowledge, variance split and accounting.
    Response get(const std::string& id);
    /// Body {p_next, i_next, epoch?}; a present epoch must equal the session's current epoch.
    Response observe(const std::string& id, const std::string& body);
    /// `what_if` evaluates a hypothetical next-epoch state without committing it.
    Response recommendation(const std::string& id, const std::string& mode, std::optional<std::uint64_t> resample,
                            std::optional<PhysicalState> what_if = {});
    Response boundary(const std::string& id, const std::string& format);
    Response harvest(const std::string& id);

    /// Knowledge rebuilt from the stored prior and observation log.
    static KnowledgeState fold_knowledge(const json& doc);

private:
    std::mutex& lock_for(const std::string& id);
    json load(const std::string& id) const;

    ExperimentConfig defaults_;
    std::shared_ptr<SessionStore> store_;
    std::mutex locks_mutex_;
    std::unordered_map<std::string, std::unique_ptr<std::mutex>> locks_;
};

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string token;  // empty disables the X-Harvest-Token check
};

/// Registers the /v1 routes on `server`.
void mount(httplib::Server& server, SessionService& svc, const ServerOptions& opts);

/// Blocks serving HTTP until the process is stopped.
void serve(SessionService& svc, const ServerOptions& opts);

}  // namespace harvest::service
