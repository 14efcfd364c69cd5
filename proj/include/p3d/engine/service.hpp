#pragma once

#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "p3d/core/log.hpp"
#include "p3d/engine/pipeline.hpp"
#include "p3d/graph/vocabulary.hpp"

namespace p3d {

struct HttpResponse {
  int status = 200;
  std::string body;
};

namespace service {

using nlohmann::json;

inline json error_body(const std::string& message, const std::string& path = {}) {
  json j{{"error", message}};
  if (!path.empty()) j["path"] = path;
  return j;
}

inline const json& field(const json& body, const char* key) { return detail::require(body, key, ""); }

inline SceneGraph graph_field(const json& body) {
  return scene_graph_from_json(field(body, "graph"), default_vocabulary());
}

inline std::uint64_t seed_field(const json& body, const char* key, std::uint64_t fallback) {
  auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
    throw SchemaError("expected nonnegative integer", std::string("/") + key);
  return it->get<std::uint64_t>();
}

inline json synthesize(const Engine& e, const json& body) {
  const SceneGraph g = graph_field(body);
  const auto r = p3d::synthesize(e, g, seed_field(body, "seed", e.config().seed));
  return {{"layouts", layouts_to_json(r.layouts)}, {"consistency", report_to_json(r.report)}};
}

inline json solve(const Engine& e, const json& body) {
  const SceneGraph g = graph_field(body);
  SolverConfig cfg = e.config().solver;
  if (auto it = body.find("solver_config"); it != body.end()) apply_solver_json(cfg, *it);
  cfg.seed = seed_field(body, "seed", cfg.seed);
  const auto r = solve_from_graph(g, cfg, e.sizes());
  return {{"layouts", layouts_to_json(r.layouts)},
          {"trace", trace_to_json(r.trace)},
          {"consistency", report_to_json(consistency_report(g, r.layouts, cfg.thresholds))},
          {"feasible", r.feasible},
          {"converged", r.converged},
          {"bounds_infeasible", r.bounds_infeasible}};
}

inline json refine(const Engine& e, const json& body) {
  const SceneGraph g = graph_field(body);
  SolverConfig cfg = e.config().solver;
  if (auto it = body.find("solver_config"); it != body.end()) apply_solver_json(cfg, *it);
  const auto initial = layouts_for_graph(g, field(body, "layouts"), "/layouts");
  std::vector<Layout7DoF> targets;
  if (auto it = body.find("targets"); it != body.end() && !it->is_null())
    targets = layouts_for_graph(g, *it, "/targets");
  else
    targets = default_refine_targets(e, g, cfg);
  const auto r = refine_layouts(initial, targets, cfg, &g);
  return {{"layouts", layouts_to_json(r.layouts)}, {"trace", trace_to_json(r.trace)}};
}

inline json check(const Engine& e, const json& body) {
  const SceneGraph g = graph_field(body);
  const auto layouts = layouts_for_graph(g, field(body, "layouts"), "/layouts");
  return report_to_json(consistency_report(g, layouts, e.config().solver.thresholds));
}

inline json health(const Engine& e) {
  return {{"status", "ok"}, {"version", kVersion}, {"model", {{"hidden", e.weights().config().hidden}}}};
}

}  // namespace service

/// Dispatches one request. Pure apart from logging; safe to call
/// concurrently on a shared engine.
inline HttpResponse handle_request(const Engine& engine, const std::string& method, const std::string& path,
                                   const std::string& body) {
  using service::json;
  auto ok = [](const json& j) { return HttpResponse{200, j.dump()}; };
  try {
    if (method == "GET") {
      if (path == "/health") return ok(service::health(engine));
      if (path == "/vocab") return ok(vocabulary_to_json(*default_vocabulary()));
    } else if (method == "POST") {
      using Handler = json (*)(const Engine&, const json&);
      Handler h = nullptr;
      if (path == "/synthesize") h = service::synthesize;
      if (path == "/solve") h = service::solve;
      if (path == "/refine") h = service::refine;
      if (path == "/check") h = service::check;
      if (h) {
        const json doc = detail::parse_text(body);
        if (!doc.is_object()) throw SchemaError("request body must be a JSON object", "/");
        return ok(h(engine, doc));
      }
    }
    return {404, service::error_body("no route for " + method + " " + path).dump()};
  } catch (const SchemaError& e) {
    return {400, service::error_body(e.what(), e.path()).dump()};
  } catch (const ValidationError& e) {
    return {422, service::error_body(e.what(), e.path()).dump()};
  } catch (const std::exception& e) {
    log::warn(std::string("request failed: ") + e.what());
    return {500, service::error_body("internal error").dump()};
  }
}

/// HTTP server with every route bound to `engine`; not yet listening.
inline std::unique_ptr<httplib::Server> make_server(const Engine& engine) {
  auto server = std::make_unique<httplib::Server>();
  auto bind = [&engine](const char* method) {
    return [&engine, method](const httplib::Request& req, httplib::Response& res) {
      const auto r = handle_request(engine, method, req.path, req.body);
      res.status = r.status;
      res.set_content(r.body, "application/json");
    };
  };
  for (const char* route : {"/health", "/vocab"}) server->Get(route, bind("GET"));
  for (const char* route : {"/synthesize", "/solve", "/refine", "/check"}) server->Post(route, bind("POST"));
  return server;
}

/// Blocks serving on host:port until the process is stopped.
inline void serve(const Engine& engine, int port, const std::string& host = "127.0.0.1") {
  auto server = make_server(engine);
  log::info("listening on " + host + ":" + std::to_string(port));
  if (!server->listen(host, port)) throw IoError("cannot listen on port " + std::to_string(port));
}

}  // namespace p3d
