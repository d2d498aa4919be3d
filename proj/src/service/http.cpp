#include "crm/service/http.hpp"

#include <iostream>

namespace crm::service {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, "bad_request", std::string("malformed JSON: ") + e.what());
  }
}

// Wraps a handler so that every failure becomes a JSON error body.
template <class F>
httplib::Server::Handler handler(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_json(res, e.status(), error_body(e));
    } catch (const std::exception& e) {
      std::clog << "error: " << req.method << " " << req.path << ": " << e.what() << "\n";
      send_json(res, 500, error_body(ServiceError(500, "internal", e.what())));
    }
  };
}

}  // namespace

std::string bearer_token(const httplib::Request& request) {
  const auto header = request.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (header.size() > prefix.size() && header.compare(0, prefix.size(), prefix) == 0) {
    return header.substr(prefix.size());
  }
  return {};
}

void install_routes(httplib::Server& server, SessionService& service) {
  server.Get("/v1/health", handler([](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, {{"api_version", kApiVersion}, {"status", "ok"}});
             }));

  server.Get("/v1/languages", handler([&service](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, {{"api_version", kApiVersion}, {"languages", service.languages()}});
             }));

  server.Post("/v1/sessions", handler([&service](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 201, service.create_session(create_request_from_json(parse_body(req))));
              }));

  server.Get("/v1/sessions/:id/state", handler([&service](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, service.state(req.path_params.at("id")));
             }));

  server.Get("/v1/sessions/:id/trial", handler([&service](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, service.current_trial(req.path_params.at("id"), bearer_token(req)));
             }));

  server.Post("/v1/sessions/:id/responses",
              handler([&service](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, service.post_response(req.path_params.at("id"), bearer_token(req), parse_body(req)));
              }));

  server.Post("/v1/sessions/:id/break-replies",
              handler([&service](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, service.break_reply(req.path_params.at("id"), bearer_token(req), parse_body(req)));
              }));

  server.Post("/v1/sessions/:id/advance", handler([&service](const httplib::Request& req, httplib::Response& res) {
                send_json(res, 200, service.advance(req.path_params.at("id"), bearer_token(req)));
              }));

  server.Get("/v1/sessions/:id/metrics", handler([&service](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_content(service.metrics_csv(req.path_params.at("id")), "text/csv");
             }));

  server.Get("/v1/stimuli/:token", handler([&service](const httplib::Request& req, httplib::Response& res) {
               res.status = 200;
               res.set_header("Cache-Control", "no-store");
               res.set_content(service.take_stimulus(req.path_params.at("token")), "audio/wav");
             }));
}

}  // namespace crm::service
