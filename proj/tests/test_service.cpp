#include <doctest.h>

#include <cstring>
#include <thread>

#include <nlohmann/json.hpp>

#include "lrr/service.hpp"
#include "support.hpp"

// After Eigen: <resolv.h> defines a _res macro that collides with Eigen internals.
#include <httplib.h>

using namespace lrr;
using nlohmann::json;

namespace {

// PCA-backed surrogate with a random basis; enough to exercise the service
// at full mesh size without fitting on N-dimensional data.
SurrogateModel synthetic_model(Quantity q, Index n, Index r, std::uint64_t seed) {
  PcaModel pca;
  pca.basis = test::random_matrix(n, r, seed, 1e-3);
  pca.mean = test::random_vector(n, seed + 1);
  pca.singular_values = Vector::LinSpaced(r, static_cast<double>(r), 1.0);
  const Matrix mus = test::random_unit(12, 3, seed + 2);
  const Matrix targets = test::random_matrix(12, r, seed + 3);

  SurrogateModel m;
  m.reducer = std::move(pca);
  m.regressor = gp_fit(mus, targets, KernelFunction::polynomial(1.0, 1.15, 6));
  m.quantity = q;
  m.n = n;
  m.r = r;
  m.kappa = 12;
  m.provenance = {{"toolkit_version", kToolkitVersion}};
  return m;
}

std::shared_ptr<ServiceState> small_state() {
  auto s = std::make_shared<ServiceState>();
  s->load(synthetic_model(Quantity::Displacement, 30, 10, 1));
  s->load(synthetic_model(Quantity::VonMisesStress, 7, 13, 2));
  s->set_geometry(test::random_matrix(10, 3, 3));
  return s;
}

json body(const HttpResponse& r) { return json::parse(r.body); }

std::string header(const HttpResponse& r, const std::string& name) {
  for (const auto& [k, v] : r.headers)
    if (k == name) return v;
  return {};
}

Matrix decode(const std::string& bytes, Index rows, Index cols) {
  Matrix m(rows, cols);
  REQUIRE(bytes.size() == static_cast<std::size_t>(rows * cols) * sizeof(double));
  std::memcpy(m.data(), bytes.data(), bytes.size());
  return m;
}

}  // namespace

TEST_CASE("predict returns reduced coordinates") {
  const auto s = small_state();
  const auto r = s->predict(R"({"quantity":"disp","mu":[0.2,0.5,0.9]})");
  CHECK(r.status == 200);
  const auto j = body(r);
  CHECK(j["quantity"] == "disp");
  CHECK(j["reduced"].size() == 10);
  CHECK(j["warnings"].empty());
  CHECK_FALSE(j.contains("stats"));
  Vector mu(3);
  mu << 0.2, 0.5, 0.9;
  const auto oracle = online_predict(s->model(Quantity::Displacement), mu);
  for (Index l = 0; l < 10; ++l) CHECK(j["reduced"][static_cast<std::size_t>(l)].get<double>() == oracle.reduced(l));

  const auto stress = body(s->predict(R"({"quantity":"stress","mu":[0.2,0.5,0.9],"detail":"stats"})"));
  CHECK(stress["reduced"].size() == 13);
  CHECK(stress["stats"]["block_size"] == 1);
  CHECK(stress["stats"]["min"].get<double>() <= stress["stats"]["mean"].get<double>());
}

TEST_CASE("predict rejects bad requests") {
  const auto s = small_state();
  auto r = s->predict(R"({"quantity":"disp","mu":[0.2,0.5]})");
  CHECK(r.status == 422);
  CHECK(body(r)["error"].get<std::string>().find("length 2") != std::string::npos);
  CHECK(body(r)["error"].get<std::string>().find("3") != std::string::npos);
  CHECK(s->predict("not json").status == 400);
  CHECK(s->predict("[1,2]").status == 400);
  CHECK(s->predict(R"({"mu":[0,0,0]})").status == 422);
  CHECK(s->predict(R"({"quantity":"velocity","mu":[0,0,0]})").status == 404);
  CHECK(s->predict(R"({"quantity":"disp","mu":"abc"})").status == 422);
  CHECK(s->predict(R"({"quantity":"disp","mu":[0,"x",0]})").status == 422);
  CHECK(s->predict(R"({"quantity":"disp","mu":[0,0,0],"detail":"everything"})").status == 422);
  CHECK(s->predict(R"({"quantity":"disp","mu":[0,0,0],"detail":"decimated:0"})").status == 422);
  CHECK(s->predict(R"({"quantity":"disp","mu":[0,0,0],"detail":"decimated:x"})").status == 422);

  ServiceState empty;
  CHECK(empty.predict(R"({"quantity":"disp","mu":[0,0,0]})").status == 503);
}

TEST_CASE("extrapolation is flagged") {
  const auto s = small_state();
  const auto j = body(s->predict(R"({"quantity":"disp","mu":[0.2,1.4,0.9]})"));
  CHECK_FALSE(j["warnings"].empty());
}

TEST_CASE("full and decimated fields") {
  const auto s = small_state();
  const auto full = s->predict(R"({"quantity":"disp","mu":[0.1,0.2,0.3],"detail":"full"})");
  CHECK(full.status == 200);
  CHECK(full.content_type == "application/octet-stream");
  CHECK(header(full, "X-Shape") == "10,3");
  Vector mu(3);
  mu << 0.1, 0.2, 0.3;
  const Vector state = online_predict(s->model(Quantity::Displacement), mu).state;
  CHECK(decode(full.body, 30, 1).col(0) == state);

  const auto dec = body(s->predict(R"({"quantity":"disp","mu":[0.1,0.2,0.3],"detail":"decimated:4"})"));
  CHECK(dec["decimated"]["count"] == 3);
  CHECK(dec["decimated"]["values"].size() == 9);
  CHECK(dec["decimated"]["values"][3].get<double>() == state(12));
  CHECK(dec.contains("stats"));
}

TEST_CASE("decimation at full mesh size") {
  ServiceState s;
  s.load(synthetic_model(Quantity::Displacement, 144636, 10, 4));
  const auto j = body(s.predict(R"({"quantity":"disp","mu":[0.5,0.5,0.5],"detail":"decimated:10"})"));
  CHECK(j["decimated"]["count"] == 4822);
  CHECK(j["decimated"]["values"].size() == 4822 * 3);
  CHECK(strided_nodes(48212, 10).back() == 48210);
  CHECK(strided_nodes(10, 1).size() == 10);
  CHECK(strided_nodes(10, 20).size() == 1);
}

TEST_CASE("meta") {
  ServiceState empty;
  const auto e = body(empty.meta());
  CHECK(e["quantities"].empty());
  CHECK(e["geometry_available"] == false);

  const auto j = body(small_state()->meta());
  CHECK(j["quantities"] == json::array({"disp", "stress"}));
  CHECK(j["models"]["disp"]["r"] == 10);
  CHECK(j["models"]["stress"]["r"] == 13);
  CHECK(j["models"]["disp"]["p"] == 3);
  CHECK(j["models"]["disp"]["block_size"] == 3);
  CHECK(j["models"]["disp"]["reducer"] == "pca");
  CHECK(j["geometry_nodes"] == 10);
}

TEST_CASE("geometry") {
  ServiceState none;
  CHECK(none.geometry(std::nullopt).status == 404);

  const auto s = small_state();
  const auto all = s->geometry(std::nullopt);
  CHECK(all.status == 200);
  CHECK(header(all, "X-Shape") == "10,3");
  const Matrix xyz = decode(all.body, 3, 10);
  const Matrix expected = test::random_matrix(10, 3, 3).transpose();
  CHECK(xyz == expected);

  const auto thin = s->geometry(std::string("4"));
  CHECK(header(thin, "X-Shape") == "2,3");
  CHECK(decode(thin.body, 3, 2).col(1) == expected.col(4));
  CHECK(s->geometry(std::string("0")).status == 422);

  ServiceState big;
  big.set_geometry(Matrix::Zero(48212, 3));
  CHECK(header(big.geometry(std::string("100")), "X-Shape") == "482,3");

  ServiceState mismatch;
  mismatch.load(synthetic_model(Quantity::Displacement, 30, 10, 1));
  CHECK_THROWS_AS(mismatch.set_geometry(Matrix::Zero(11, 3)), Error);
}

TEST_CASE("metrics histogram") {
  const auto s = small_state();
  s->record(0.5, true);
  s->record(7.0, true);
  s->record(1000.0, false);
  const auto j = body(s->metrics());
  CHECK(j["requests"] == 3);
  CHECK(j["errors"] == 1);
  const auto& h = j["latency_histogram"];
  REQUIRE(h.size() == kLatencyBucketsMs.size() + 1);
  CHECK(h[0]["count"] == 1);
  CHECK(h[2]["count"] == 1);
  CHECK(h[7]["count"] == 1);
  CHECK(h[7]["le_ms"] == "inf");
}

TEST_CASE("bind addresses") {
  CHECK(parse_bind_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
  CHECK(parse_bind_address("9000") == std::pair<std::string, int>{"127.0.0.1", 9000});
  CHECK(parse_bind_address(":0") == std::pair<std::string, int>{"127.0.0.1", 0});
  CHECK_THROWS_AS(parse_bind_address("host:99999"), Error);
  CHECK_THROWS_AS(parse_bind_address("host:abc"), Error);
  CHECK(parse_stride("7") == 7);
  CHECK_THROWS_AS(parse_stride("-1"), Error);
}

TEST_CASE("HTTP endpoints") {
  const auto s = small_state();
  HttpServer server(s);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->body == "ok");

  auto meta = client.Get("/meta");
  REQUIRE(meta);
  CHECK(json::parse(meta->body)["models"]["stress"]["r"] == 13);

  auto geo = client.Get("/geometry?decimate=5");
  REQUIRE(geo);
  CHECK(geo->get_header_value("X-Shape") == "2,3");
  CHECK(client.Get("/nothing")->status == 404);

  const std::string req = R"({"quantity":"disp","mu":[0.3,0.3,0.3],"detail":"stats"})";
  auto one = client.Post("/predict", req, "application/json");
  REQUIRE(one);
  CHECK(one->status == 200);
  const auto reference = json::parse(one->body)["reduced"];
  CHECK(client.Post("/predict", R"({"quantity":"disp","mu":[1]})", "application/json")->status == 422);

  // Concurrent clients see the same answers as sequential ones.
  std::vector<std::thread> workers;
  std::atomic<int> mismatches{0}, failures{0};
  for (int t = 0; t < 4; ++t)
    workers.emplace_back([&] {
      httplib::Client c("127.0.0.1", port);
      for (int i = 0; i < 10; ++i) {
        auto res = c.Post("/predict", req, "application/json");
        if (!res || res->status != 200) {
          ++failures;
          continue;
        }
        if (json::parse(res->body)["reduced"] != reference) ++mismatches;
      }
    });
  for (auto& w : workers) w.join();
  CHECK(failures == 0);
  CHECK(mismatches == 0);

  const auto metrics = json::parse(client.Get("/metrics")->body);
  CHECK(metrics["requests"] == 42);
  CHECK(metrics["errors"] == 1);

  server.stop();
  loop.join();
}
