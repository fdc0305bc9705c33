#pragma once

#include <string>

#include <nlohmann/json.hpp>

// Eigen first: <resolv.h>, pulled in by httplib, defines a `_res` macro that
// collides with Eigen parameter names.
#include "hsi/label_service.hpp"

#include <httplib.h>

namespace hsi::service {

namespace detail {

inline void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump() + "\n", "application/json");
}

inline void send_png(httplib::Response& res, const std::vector<std::uint8_t>& bytes) {
  res.status = 200;
  res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
}

inline nlohmann::json body_json(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ServiceError(400, std::string("invalid JSON body: ") + e.what());
  }
}

template <class F>
httplib::Server::Handler handle(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_json(res, {{"error", e.what()}}, e.status());
    } catch (const Error& e) {
      send_json(res, {{"error", e.what()}}, http_status(e));
    } catch (const nlohmann::json::exception& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}}, 500);
    }
  };
}

}  // namespace detail

inline void register_routes(httplib::Server& server, LabelService& svc) {
  using detail::handle;
  using detail::send_json;
  using detail::send_png;
  using Req = httplib::Request;
  using Res = httplib::Response;

  server.Get("/cubes", handle([&svc](const Req&, Res& res) { send_json(res, svc.list_cubes()); }));

  server.Get(R"(/cubes/([^/]+)/rgb)", handle([&svc](const Req& req, Res& res) {
               double gamma = 1.0;
               if (req.has_param("gamma")) gamma = io::parse_double(req.get_param_value("gamma"), "gamma");
               send_png(res, svc.rgb_png(req.matches[1], gamma));
             }));

  server.Post(R"(/cubes/([^/]+)/sam)", handle([&svc](const Req& req, Res& res) {
                const auto j = detail::body_json(req);
                const auto& ref = j.at("ref");
                if (!ref.is_array() || ref.size() != 2 || !ref[0].is_number_unsigned() || !ref[1].is_number_unsigned())
                  throw ServiceError(400, "ref must be [row, col] with non-negative integers");
                send_json(res, svc.sam(req.matches[1], ref[0].get<std::size_t>(), ref[1].get<std::size_t>(),
                                       j.at("threshold").get<double>()));
              }));

  server.Post(R"(/cubes/([^/]+)/labels)", handle([&svc](const Req& req, Res& res) {
                const auto j = detail::body_json(req);
                ClassCode cls;
                const auto& c = j.at("class");
                try {
                  cls = c.is_string() ? parse_class(c.get<std::string>()) : checked_class(c.get<long long>());
                } catch (const Error& e) {
                  throw ServiceError(400, e.what());
                }
                send_json(res, svc.commit(req.matches[1], rle_from_json(j.at("mask_rle")), cls));
              }));

  server.Post(R"(/cubes/([^/]+)/labels/undo)",
              handle([&svc](const Req& req, Res& res) { send_json(res, svc.undo(req.matches[1])); }));

  server.Get(R"(/cubes/([^/]+)/summary)",
             handle([&svc](const Req& req, Res& res) { send_json(res, svc.summary(req.matches[1])); }));

  server.Post(R"(/cubes/([^/]+)/classify)", handle([&svc](const Req& req, Res& res) {
                const auto j = detail::body_json(req);
                send_json(res, svc.classify(req.matches[1], j.contains("config") ? j["config"] : nlohmann::json()), 202);
              }));

  server.Get(R"(/cubes/([^/]+)/classify)",
             handle([&svc](const Req& req, Res& res) { send_json(res, svc.classify_status(req.matches[1])); }));

  server.Get(R"(/cubes/([^/]+)/maps/([^/]+))", handle([&svc](const Req& req, Res& res) {
               send_png(res, svc.map_png(req.matches[1], req.matches[2]));
             }));
}

}  // namespace hsi::service
