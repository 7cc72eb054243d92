#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "httplib.h"
#include "tailforge/json_io.hpp"
#include "tailforge/service.hpp"

using namespace tailforge;

namespace {

struct Fixture {
  Service service;
  int port = service.start("127.0.0.1", 0);
  httplib::Client client{"127.0.0.1", port};

  Fixture() { client.set_read_timeout(120, 0); }

  Json get(const std::string& path, int expect) {
    auto res = client.Get(path);
    REQUIRE(res);
    CHECK(res->status == expect);
    return Json::parse(res->body);
  }

  Json post(const std::string& path, const std::string& body, const std::string& type, int expect) {
    auto res = client.Post(path, body, type);
    REQUIRE(res);
    CHECK(res->status == expect);
    return Json::parse(res->body);
  }
};

}  // namespace

TEST_CASE("dataset upload and Hill path") {
  Fixture f;
  const auto up = f.post("/datasets?id=tiny", "x\n1\n2\n4\n8\n", "text/csv", 201);
  CHECK(up["id"] == "tiny");
  CHECK(up["n"] == 4);
  CHECK(up["schema_version"] == kSchemaVersion);
  const auto path = f.get("/datasets/tiny/path?method=ParetoML&k=3", 200);
  REQUIRE(path["entries"].size() == 1);
  CHECK(path["entries"][0]["xi"].get<double>() == doctest::Approx(1.38629436111989).epsilon(1e-13));
  CHECK(path["schema_version"] == kSchemaVersion);
  const auto list = f.get("/datasets", 200);
  CHECK(list["datasets"].size() == 1);
  const auto one = f.get("/datasets/tiny", 200);
  CHECK(one["checksum"] == up["checksum"]);
}

TEST_CASE("error statuses") {
  Fixture f;
  f.post("/datasets?id=d", "1\n2\n3\n4\n5\n6\n7\n8\n9\n10\n", "text/csv", 201);
  const auto missing = f.get("/datasets/none/path?method=ParetoML&k=3", 404);
  CHECK(missing["error"]["kind"] == "not_found");
  CHECK(missing["schema_version"] == kSchemaVersion);
  f.post("/datasets?id=d", "1\n2\n", "text/csv", 409);
  const auto bad = f.post("/datasets", "1\nabc\n2\n", "text/csv", 400);
  CHECK(bad["error"]["kind"] == "invalid_argument");
  f.get("/datasets/d/path?method=Nope", 400);
  f.get("/datasets/d/path?method=Ep", 400);
  f.get("/datasets/d/path?method=ParetoML&k=abc", 400);
  f.get("/datasets/d/path?method=GpdML&k_min=20&k_max=30", 422);
  f.post("/datasets?id=neg", "-3\n-2\n-1\n-0.5\n-0.2\n-0.1\n", "text/csv", 201);
  f.get("/datasets/neg/path?method=ParetoML&k=3", 422);
  f.get("/jobs/job999", 404);
  f.get("/nowhere", 404);
  f.post("/simulate", "{", "application/json", 400);
  f.post("/simulate", R"({"distribution": {"family": "burr", "params": {"tau": 1, "lambda": 2}},
    "replications": 0, "methods": [{"method": "ParetoML"}]})", "application/json", 400);
}

TEST_CASE("tail and goodness-of-fit endpoints") {
  Fixture f;
  f.post("/datasets?id=d&header=false", "8\n1\n4\n2\n16\n32\n64\n", "text/csv", 201);
  const auto tail = f.get("/datasets/d/tail?method=ParetoML&k=3&c=64", 200);
  REQUIRE(tail["entries"].size() == 1);
  CHECK(tail["entries"][0]["converged"] == true);
  CHECK(tail["entries"][0]["value"].get<double>() > 0.0);
  f.get("/datasets/d/tail?method=ParetoML&k=3&c=64&p=0.01", 400);
  const auto gof = f.get("/datasets/d/gof?xi0=0.5&sigma0=1", 200);
  CHECK(gof["x"].size() == 7);
  CHECK(gof["y"].size() == 7);
  CHECK(gof.contains("correlation"));
  f.get("/datasets/d/gof?xi0=0.5&sigma0=0", 400);
}

TEST_CASE("concurrent path requests") {
  Fixture f;
  std::string csv = "x\n";
  for (int i = 1; i <= 300; ++i) csv += std::to_string(1.0 / std::pow(i / 301.0, 0.5)) + "\n";
  f.post("/datasets?id=d", csv, "text/csv", 201);
  const auto expect = f.get("/datasets/d/path?method=Ep%2B&rho=-0.5&k_min=5&k_max=120", 200);
  std::vector<Json> got(4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", f.port);
      c.set_read_timeout(120, 0);
      auto res = c.Get("/datasets/d/path?method=Ep%2B&rho=-0.5&k_min=5&k_max=120");
      if (res && res->status == 200) got[t] = Json::parse(res->body);
    });
  for (auto& th : threads) th.join();
  for (const auto& g : got) CHECK(g == expect);
}

TEST_CASE("simulation jobs") {
  Fixture f;
  const auto sub = f.post("/simulate", R"({"distribution": {"family": "pareto", "params": {"xi": 1}},
    "n": 100, "replications": 4, "ks": [10, 50], "methods": [{"method": "ParetoML"}]})", "application/json", 202);
  const std::string id = sub["job_id"];
  Json st;
  for (int i = 0; i < 600; ++i) {
    st = f.get("/jobs/" + id, 200);
    if (st["status"] == "done" || st["status"] == "failed") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  CHECK(st["status"] == "done");
  CHECK(st["result"]["cells"].size() == 2);
}
