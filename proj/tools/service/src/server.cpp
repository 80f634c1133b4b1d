#include <httplib.h>

#include "harvest/service.hpp"

namespace harvest::service {

namespace {

void send(httplib::Response& res, const Response& r) {
    res.status = r.status;
    if (!r.raw.empty() || r.content_type != "application/json")
        res.set_content(r.raw, r.content_type.c_str());
    else
        res.set_content(r.body.dump(), "application/json");
}

bool authorized(const httplib::Request& req, httplib::Response& res, const ServerOptions& opts) {
    if (opts.token.empty() || req.get_header_value("X-Harvest-Token") == opts.token) return true;
    send(res, {401, ApiError{401, "unauthorized", "missing or invalid X-Harvest-Token"}.body()});
    return false;
}

template <class F>
auto guarded(const ServerOptions& opts, F f) {
    return [opts, f](const httplib::Request& req, httplib::Response& res) {
        if (!authorized(req, res, opts)) return;
        try {
            send(res, f(req));
        } catch (const std::exception& e) {
            send(res, {500, ApiError{500, "internal", e.what()}.body()});
        }
    };
}

}  // namespace

void mount(httplib::Server& server, SessionService& svc, const ServerOptions& opts) {
    const std::string sid = R"(/v1/sessions/([0-9a-f]+))";

    server.Post("/v1/sessions", guarded(opts, [&svc](const httplib::Request& req) { return svc.create(req.body); }));

    server.Get(sid, guarded(opts, [&svc](const httplib::Request& req) { return svc.get(req.matches[1]); }));

    server.Post(sid + "/observe", guarded(opts, [&svc](const httplib::Request& req) {
                    return svc.observe(req.matches[1], req.body);
                }));

    server.Get(sid + "/recommendation", guarded(opts, [&svc](const httplib::Request& req) -> Response {
                   std::optional<std::uint64_t> resample;
                   if (req.has_param("resample")) {
                       try {
                           std::size_t used = 0;
                           const std::string v = req.get_param_value("resample");
                           resample = std::stoull(v, &used);
                           if (used != v.size() || v.find('-') != std::string::npos) throw std::invalid_argument(v);
                       } catch (const std::exception&) {
                           return {400, ApiError{400, "invalid_argument", "expected a non-negative integer", "resample"}
                                            .body()};
                       }
                   }
                   std::optional<PhysicalState> what_if;
                   if (req.has_param("p") || req.has_param("i")) {
                       try {
                           what_if = PhysicalState{std::stod(req.get_param_value("p")),
                                                   std::stod(req.get_param_value("i"))};
                       } catch (const std::exception&) {
                           return {400, ApiError{400, "invalid_argument", "what-if needs numeric p and i", "p"}.body()};
                       }
                   }
                   return svc.recommendation(req.matches[1], req.get_param_value("mode"), resample, what_if);
               }));

    server.Get(sid + "/boundary", guarded(opts, [&svc](const httplib::Request& req) {
                   return svc.boundary(req.matches[1], req.get_param_value("format"));
               }));

    server.Post(sid + "/harvest",
                guarded(opts, [&svc](const httplib::Request& req) { return svc.harvest(req.matches[1]); }));

    server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
}

void serve(SessionService& svc, const ServerOptions& opts) {
    httplib::Server server;
    mount(server, svc, opts);
    if (!server.listen(opts.host, opts.port))
        throw std::runtime_error("cannot listen on " + opts.host + ":" + std::to_string(opts.port));
}

}  // namespace harvest::service
