#pragma once

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "saac/advisor.hpp"

namespace saac {

inline int http_status_for(const std::string& code) {
  if (code == "NOT_FOUND") return 404;
  if (code == "NOT_READY" || code == "TERMINAL" || code == "OUT_OF_ORDER") return 409;
  return 400;
}

// JSON over HTTP. Every error body is {"code", "message", "detail"?}.
//
//   POST /sessions                       create, 201 {"id"}
//   GET  /sessions/:id                   public state + prediction status
//   POST /sessions/:id/rounds            record observed round
//   GET  /sessions/:id/prediction        p* progress
//   POST /sessions/:id/recommendation    start search, 202
//   GET  /sessions/:id/recommendation    poll
//   POST /sessions/:id/whatif            start what-if, 202 {"job"}
//   GET  /sessions/:id/whatif/:job       poll
//   PUT  /sessions/:id/profiles          edit estimates (recomputes p*)
//   GET  /sessions/:id/trace             trace file (text/plain)
inline void install_advisor_routes(httplib::Server& server, AdvisorService& service) {
  using httplib::Request;
  using httplib::Response;

  auto guarded = [](auto fn) {
    return [fn](const Request& req, Response& res) {
      try {
        fn(req, res);
      } catch (const AdvisorError& e) {
        res.status = http_status_for(e.code());
        res.set_content(e.to_json().dump(), "application/json");
      } catch (const nlohmann::json::exception& e) {
        res.status = 400;
        res.set_content(AdvisorError("INVALID_REQUEST", e.what()).to_json().dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(AdvisorError("INTERNAL", e.what()).to_json().dump(), "application/json");
      }
    };
  };
  auto reply = [](Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  };
  auto body_of = [](const Request& req) {
    try {
      return nlohmann::json::parse(req.body.empty() ? std::string("{}") : req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw AdvisorError("INVALID_REQUEST", std::string("request body is not JSON: ") + e.what());
    }
  };

  server.Get("/health", [reply](const Request&, Response& res) { reply(res, {{"status", "ok"}}); });
  server.Post("/sessions", guarded([&service, reply, body_of](const Request& req, Response& res) {
                reply(res, {{"id", service.create_session(body_of(req))}}, 201);
              }));
  server.Get(R"(/sessions/([^/]+))", guarded([&service, reply](const Request& req, Response& res) {
               reply(res, service.state(req.matches[1]));
             }));
  server.Post(R"(/sessions/([^/]+)/rounds)", guarded([&service, reply, body_of](const Request& req, Response& res) {
                reply(res, service.record_round(req.matches[1], body_of(req)));
              }));
  server.Get(R"(/sessions/([^/]+)/prediction)", guarded([&service, reply](const Request& req, Response& res) {
               reply(res, service.prediction(req.matches[1]));
             }));
  server.Post(R"(/sessions/([^/]+)/recommendation)", guarded([&service, reply](const Request& req, Response& res) {
                reply(res, service.start_recommend(req.matches[1]), 202);
              }));
  server.Get(R"(/sessions/([^/]+)/recommendation)", guarded([&service, reply](const Request& req, Response& res) {
               reply(res, service.get_recommend(req.matches[1]));
             }));
  server.Post(R"(/sessions/([^/]+)/whatif)", guarded([&service, reply, body_of](const Request& req, Response& res) {
                reply(res, service.start_what_if(req.matches[1], body_of(req)), 202);
              }));
  server.Get(R"(/sessions/([^/]+)/whatif/([^/]+))", guarded([&service, reply](const Request& req, Response& res) {
               reply(res, service.get_what_if(req.matches[1], req.matches[2]));
             }));
  server.Put(R"(/sessions/([^/]+)/profiles)", guarded([&service, reply, body_of](const Request& req, Response& res) {
               reply(res, service.edit_profiles(req.matches[1], body_of(req)));
             }));
  server.Get(R"(/sessions/([^/]+)/trace)", guarded([&service](const Request& req, Response& res) {
               res.set_content(service.export_trace(req.matches[1]), "text/plain");
             }));
}

}  // namespace saac
