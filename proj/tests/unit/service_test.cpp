#include <gtest/gtest.h>

#include <future>
#include <map>
#include <thread>

#include "fixtures.hpp"
#include "small_model.hpp"
#include "p3d/engine/config.hpp"
#include "p3d/engine/service.hpp"

using namespace p3d;
using nlohmann::json;

namespace {

const Engine& small_engine() {
  static const Engine engine([] {
    EngineConfig c;
    c.model = p3d::testing::small_config();
    c.solver.max_iters = 300;
    return c;
  }());
  return engine;
}

json graph_json() { return detail::parse_text(read_text_file(p3d::testing::fixture("bedroom_graph.json"))); }
json layouts_json() { return detail::parse_text(read_text_file(p3d::testing::fixture("bedroom_layouts.json"))); }

HttpResponse post(const std::string& path, const json& body) {
  return handle_request(small_engine(), "POST", path, body.dump());
}

}  // namespace

TEST(Config, DefaultsFollowModelDimensions) {
  const EngineConfig c;
  EXPECT_EQ(c.model.q, 64u);
  EXPECT_EQ(c.model.clip_dim, 512u);
  EXPECT_EQ(c.model.llm_dim, 768u);
  EXPECT_EQ(c.diffusion.steps, 1000u);
  EXPECT_EQ(c.diffusion.latent_side, 16u);
  EXPECT_EQ(c.diffusion.sdf_resolution, 64u);
  EXPECT_EQ(c.port, 8080);
  EXPECT_EQ(c.points, 512u);
}

TEST(Config, FileThenEnvPrecedence) {
  EngineConfig c;
  apply_config_json(c, detail::parse_text(R"({"seed": 4, "port": 9000, "weights": "file.p3dw",
      "solver": {"max_iters": 50, "bounds": [4, 5, 2.5]}, "model": {"hidden": 32}, "loss": {"eta": 0.5}})"));
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.solver.max_iters, 50u);
  EXPECT_EQ(c.solver.bounds.length, 5.0);
  EXPECT_EQ(c.model.hidden, 32u);
  EXPECT_EQ(c.loss.eta, 0.5);
  EXPECT_EQ(c.solver.step_size, 0.01);

  std::map<std::string, std::string> env = {{"P3D_PORT", "9100"}, {"P3D_SEED", "12"}, {"P3D_WEIGHTS", "env.p3dw"}};
  apply_env(c, [&](const char* name) -> std::optional<std::string> {
    auto it = env.find(name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  });
  EXPECT_EQ(c.port, 9100);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.weights, "env.p3dw");
  EXPECT_EQ(c.embeddings, "");
}

TEST(Config, Errors) {
  EngineConfig c;
  EXPECT_EQ(p3d::testing::error_text<SchemaError>([&] { apply_config_json(c, json{{"port", "x"}}); }), "/port: wrong type");
  EXPECT_EQ(p3d::testing::error_text<SchemaError>(
                [&] { apply_config_json(c, json{{"solver", {{"bounds", {1, 2}}}}}); }),
            "/solver/bounds: expected [width, length, height]");
  EXPECT_THROW(apply_config_json(c, json::array()), SchemaError);
  EXPECT_THROW(apply_env(c, [](const char* n) -> std::optional<std::string> {
                 if (std::string(n) == "P3D_PORT") return "80a";
                 return std::nullopt;
               }),
               ValidationError);
}

TEST(Config, SolverJsonRoundTrip) {
  SolverConfig s;
  s.max_iters = 77;
  s.overlap_weight = 0.0;
  s.bounds = {3, 4, 5};
  SolverConfig back;
  apply_solver_json(back, solver_to_json(s));
  EXPECT_EQ(back.max_iters, 77u);
  EXPECT_EQ(back.overlap_weight, 0.0);
  EXPECT_EQ(back.bounds.height, 5.0);
}

TEST(Service, Health) {
  const auto r = handle_request(small_engine(), "GET", "/health", "");
  EXPECT_EQ(r.status, 200);
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(j["version"], kVersion);
}

TEST(Service, Vocab) {
  const auto r = handle_request(small_engine(), "GET", "/vocab", "");
  EXPECT_EQ(r.status, 200);
  const auto j = json::parse(r.body);
  EXPECT_TRUE(j.contains("objects"));
  EXPECT_EQ(j["relations"].size(), 15u);
}

TEST(Service, SynthesizeFixture) {
  const auto r = post("/synthesize", json{{"graph", graph_json()}, {"seed", 3}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["layouts"].size(), 3u);
  EXPECT_TRUE(j["consistency"].contains("msg_micro"));
  EXPECT_EQ(post("/synthesize", json{{"graph", graph_json()}, {"seed", 3}}).body, r.body);
}

TEST(Service, SolveReturnsTraceAndConsistency) {
  const auto r = post("/solve", json{{"graph", graph_json()}, {"seed", 1}, {"solver_config", {{"max_iters", 40}}}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["layouts"].size(), 3u);
  EXPECT_LE(j["trace"]["objective"].size(), 40u);
  EXPECT_EQ(j["trace"]["objective"].size(), j["trace"]["violations"].size());
  EXPECT_TRUE(j["consistency"].contains("per_column"));
  EXPECT_TRUE(j["feasible"].is_boolean());
}

TEST(Service, RefineWithAndWithoutTargets) {
  auto start = layouts_json();
  for (auto& rec : start) rec["box"][3] = rec["box"][3].get<double>() + 0.2;
  const auto r = post("/refine", json{{"graph", graph_json()}, {"layouts", start}, {"targets", layouts_json()}});
  ASSERT_EQ(r.status, 200) << r.body;
  const auto j = json::parse(r.body);
  EXPECT_EQ(j["layouts"].size(), 3u);
  EXPECT_NEAR(j["layouts"][0]["box"][3].get<double>(), 0.0, 1e-2);
  const auto d = post("/refine", json{{"graph", graph_json()}, {"layouts", start}, {"solver_config", {{"max_iters", 20}}}});
  EXPECT_EQ(d.status, 200) << d.body;
}

TEST(Service, CheckFixture) {
  const auto r = post("/check", json{{"graph", graph_json()}, {"layouts", layouts_json()}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(json::parse(r.body)["msg_micro"], 1.0);
}

TEST(Service, MismatchedCountIs422) {
  auto two = layouts_json();
  two.erase(2);
  const auto r = post("/check", json{{"graph", graph_json()}, {"layouts", two}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(json::parse(r.body)["path"], "/layouts");
}

TEST(Service, SchemaErrorsAre400) {
  auto r = handle_request(small_engine(), "POST", "/check", "{not json");
  EXPECT_EQ(r.status, 400);
  r = handle_request(small_engine(), "POST", "/check", "[1, 2]");
  EXPECT_EQ(r.status, 400);
  r = post("/check", json{{"layouts", layouts_json()}});
  EXPECT_EQ(r.status, 400);
  EXPECT_TRUE(json::parse(r.body).contains("error"));
  r = post("/solve", json{{"graph", graph_json()}, {"solver_config", {{"max_iters", "many"}}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(json::parse(r.body)["path"], "/solver_config/max_iters");
  r = post("/synthesize", json{{"graph", graph_json()}, {"seed", -1}});
  EXPECT_EQ(r.status, 400);
}

TEST(Service, DomainErrorsAre422) {
  auto g = graph_json();
  g["edges"][0]["subject"] = 0;
  g["edges"][0]["object"] = 0;
  EXPECT_EQ(post("/check", json{{"graph", g}, {"layouts", layouts_json()}}).status, 422);
  auto bad = layouts_json();
  bad[0]["box"][0] = -1.0;
  EXPECT_EQ(post("/check", json{{"graph", graph_json()}, {"layouts", bad}}).status, 422);
  auto cfg = json{{"graph", graph_json()}, {"solver_config", {{"step_size", 0.0}}}};
  EXPECT_EQ(post("/solve", cfg).status, 422);
}

TEST(Service, InternalErrorDoesNotLeak) {
  auto huge = layouts_json();
  for (auto& rec : huge) rec["box"] = {1e308, 1e308, 1e308, 1e308, 1e308, 0};
  const auto r = post("/refine", json{{"graph", graph_json()}, {"layouts", layouts_json()}, {"targets", huge}});
  EXPECT_EQ(r.status, 500);
  EXPECT_EQ(json::parse(r.body), json({{"error", "internal error"}}));
}

TEST(Service, UnknownRoute) {
  EXPECT_EQ(handle_request(small_engine(), "GET", "/nope", "").status, 404);
  EXPECT_EQ(handle_request(small_engine(), "GET", "/solve", "").status, 404);
}

TEST(Service, ConcurrentIdenticalRequests) {
  const std::string synth = json{{"graph", graph_json()}, {"seed", 9}}.dump();
  const std::string solve = json{{"graph", graph_json()}, {"seed", 9}, {"solver_config", {{"max_iters", 60}}}}.dump();
  std::vector<std::future<std::pair<std::string, std::string>>> jobs;
  for (int i = 0; i < 6; ++i)
    jobs.push_back(std::async(std::launch::async, [&] {
      return std::make_pair(handle_request(small_engine(), "POST", "/synthesize", synth).body,
                            handle_request(small_engine(), "POST", "/solve", solve).body);
    }));
  const auto first = jobs[0].get();
  for (std::size_t i = 1; i < jobs.size(); ++i) EXPECT_EQ(jobs[i].get(), first);
}

TEST(Service, HttpServerRoundTrip) {
  auto server = make_server(small_engine());
  const int port = server->bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server->listen_after_bind(); });
  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["version"], kVersion);
  auto check = client.Post("/check", json{{"graph", graph_json()}, {"layouts", layouts_json()}}.dump(), "application/json");
  ASSERT_TRUE(check);
  EXPECT_EQ(check->status, 200);
  server->stop();
  t.join();
}
