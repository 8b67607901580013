#include "lrr/service.hpp"

#include <chrono>
#include <charconv>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lrr/io.hpp"

namespace lrr {

using nlohmann::json;

namespace {

HttpResponse json_response(int status, const json& j) { return {status, "application/json", j.dump(), {}}; }

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

std::string bytes_to_string(const std::vector<std::byte>& bytes) {
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

json to_array(const Eigen::Ref<const Vector>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

Index parse_stride(const std::string& text) {
  Index k = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, k);
  require(ec == std::errc() && ptr == end && k >= 1, ErrorKind::InvalidArgument,
          "decimation stride must be a positive integer, got '" + text + "'");
  return k;
}

std::vector<Index> strided_nodes(Index nodes, Index k) {
  std::vector<Index> out;
  for (Index i = 0; i < nodes; i += k) out.push_back(i);
  return out;
}

void ServiceState::load(SurrogateModel model) {
  const Quantity q = model.quantity;
  models_.insert_or_assign(q, std::move(model));
  check_geometry();
}

void ServiceState::set_geometry(Matrix nodes_by_xyz) {
  require(nodes_by_xyz.cols() == 3, ErrorKind::ShapeMismatch, "geometry must have 3 coordinates per node");
  geometry_ = std::move(nodes_by_xyz);
  check_geometry();
}

void ServiceState::check_geometry() const {
  if (!geometry_ || !has_model(Quantity::Displacement)) return;
  const Index n = model(Quantity::Displacement).n;
  require(geometry_->rows() * 3 == n, ErrorKind::ShapeMismatch,
          "geometry has " + std::to_string(geometry_->rows()) + " nodes but the displacement model has N/3 = " +
              std::to_string(n / 3));
}

void ServiceState::record(double latency_ms, bool ok) const {
  requests_.fetch_add(1, std::memory_order_relaxed);
  if (!ok) errors_.fetch_add(1, std::memory_order_relaxed);
  std::size_t b = 0;
  while (b < kLatencyBucketsMs.size() && latency_ms > kLatencyBucketsMs[b]) ++b;
  histogram_[b].fetch_add(1, std::memory_order_relaxed);
}

HttpResponse ServiceState::predict(const std::string& body) const {
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception& e) {
    return error_response(400, std::string("request body is not valid JSON: ") + e.what());
  }
  if (!req.is_object()) return error_response(400, "request body must be a JSON object");
  if (!req.contains("quantity") || !req["quantity"].is_string())
    return error_response(422, "field 'quantity' must be \"disp\" or \"stress\"");
  Quantity q;
  try {
    q = parse_quantity(req["quantity"].get<std::string>());
  } catch (const Error& e) {
    return error_response(404, e.what());
  }
  if (!has_model(q)) return error_response(503, "no model loaded for quantity '" + std::string(to_string(q)) + "'");
  const SurrogateModel& m = model(q);

  const auto p = m.p();
  if (!req.contains("mu") || !req["mu"].is_array())
    return error_response(422, "field 'mu' must be an array of " + std::to_string(p) + " numbers");
  const auto& mu_json = req["mu"];
  if (static_cast<Index>(mu_json.size()) != p)
    return error_response(422, "mu has length " + std::to_string(mu_json.size()) + ", expected " + std::to_string(p));
  Vector mu(p);
  for (Index j = 0; j < p; ++j) {
    const auto& v = mu_json[static_cast<std::size_t>(j)];
    if (!v.is_number()) return error_response(422, "mu[" + std::to_string(j) + "] is not a number");
    mu(j) = v.get<double>();
    if (!std::isfinite(mu(j))) return error_response(422, "mu[" + std::to_string(j) + "] is not finite");
  }

  const std::string detail = req.value("detail", std::string("reduced"));
  Index stride = 0;
  if (detail.rfind("decimated:", 0) == 0) {
    try {
      stride = parse_stride(detail.substr(10));
    } catch (const Error& e) {
      return error_response(422, e.what());
    }
  } else if (detail != "reduced" && detail != "stats" && detail != "full") {
    return error_response(422, "detail must be reduced, stats, full or decimated:k");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Prediction pred = online_predict(m, mu);
  const double latency = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const Index block = block_size(q);
  if (detail == "full") {
    HttpResponse r{200, "application/octet-stream", bytes_to_string(io::encode_f64(pred.state)), {}};
    r.headers.emplace_back("X-Shape", std::to_string(m.n / block) + "," + std::to_string(block));
    std::string reduced;
    for (Index l = 0; l < pred.reduced.size(); ++l) reduced += (l ? "," : "") + io::shortest_repr(pred.reduced(l));
    r.headers.emplace_back("X-Reduced", reduced);
    r.headers.emplace_back("X-Latency-Ms", io::shortest_repr(latency));
    return r;
  }

  json out = {{"quantity", std::string(to_string(q))},
              {"reduced", to_array(pred.reduced)},
              {"latency_ms", latency},
              {"warnings", pred.warnings}};
  if (detail != "reduced") {
    out["stats"] = {{"min", pred.state.minCoeff()},
                    {"max", pred.state.maxCoeff()},
                    {"mean", pred.state.mean()},
                    {"block_size", block}};
  }
  if (stride > 0) {
    const auto nodes = strided_nodes(m.n / block, stride);
    std::vector<double> values;
    values.reserve(nodes.size() * static_cast<std::size_t>(block));
    for (Index node : nodes)
      for (Index c = 0; c < block; ++c) values.push_back(pred.state(node * block + c));
    out["decimated"] = {{"k", stride}, {"count", nodes.size()}, {"block_size", block}, {"values", std::move(values)}};
  }
  return json_response(200, out);
}

HttpResponse ServiceState::meta() const {
  json quantities = json::array();
  json models = json::object();
  for (const auto& [q, m] : models_) {
    const std::string name(to_string(q));
    quantities.push_back(name);
    models[name] = {{"p", m.p()},
                    {"r", m.r},
                    {"n", m.n},
                    {"kappa", m.kappa},
                    {"reducer", reducer_type(m.reducer)},
                    {"block_size", block_size(q)},
                    {"provenance", m.provenance}};
  }
  json out = {{"quantities", quantities}, {"models", models}, {"geometry_available", has_geometry()}};
  if (geometry_) out["geometry_nodes"] = geometry_->rows();
  return json_response(200, out);
}

HttpResponse ServiceState::geometry(const std::optional<std::string>& decimate) const {
  if (!geometry_) return error_response(404, "no geometry was supplied at startup");
  Index k = 1;
  if (decimate) {
    try {
      k = parse_stride(*decimate);
    } catch (const Error& e) {
      return error_response(422, e.what());
    }
  }
  const Index count = geometry_->rows() / k;
  Matrix xyz(3, count);
  for (Index i = 0; i < count; ++i) xyz.col(i) = geometry_->row(i * k).transpose();
  HttpResponse r{200, "application/octet-stream", bytes_to_string(io::encode_f64(xyz)), {}};
  r.headers.emplace_back("X-Shape", std::to_string(count) + ",3");
  return r;
}

HttpResponse ServiceState::metrics() const {
  json buckets = json::array();
  for (std::size_t b = 0; b < histogram_.size(); ++b) {
    json bucket = {{"count", histogram_[b].load(std::memory_order_relaxed)}};
    if (b < kLatencyBucketsMs.size())
      bucket["le_ms"] = kLatencyBucketsMs[b];
    else
      bucket["le_ms"] = "inf";
    buckets.push_back(bucket);
  }
  return json_response(200, {{"requests", requests_.load()}, {"errors", errors_.load()}, {"latency_histogram", buckets}});
}

std::pair<std::string, int> parse_bind_address(const std::string& text) {
  const auto colon = text.rfind(':');
  const std::string host = colon == std::string::npos ? "127.0.0.1" : text.substr(0, colon);
  const std::string port_text = colon == std::string::npos ? text : text.substr(colon + 1);
  int port = -1;
  const auto* end = port_text.data() + port_text.size();
  auto [ptr, ec] = std::from_chars(port_text.data(), end, port);
  require(ec == std::errc() && ptr == end && port >= 0 && port <= 65535, ErrorKind::InvalidArgument,
          "bind address must be host:port, got '" + text + "'");
  return {host.empty() ? "127.0.0.1" : host, port};
}

struct HttpServer::Impl {
  std::shared_ptr<const ServiceState> state;
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const HttpResponse& r) {
  res.status = r.status;
  for (const auto& [k, v] : r.headers) res.set_header(k, v);
  res.set_content(r.body, r.content_type);
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<const ServiceState> state, std::optional<std::filesystem::path> ui_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->state = std::move(state);
  auto& srv = impl_->server;
  const ServiceState* st = impl_->state.get();

  srv.Post("/predict", [st](const httplib::Request& req, httplib::Response& res) {
    const auto t0 = std::chrono::steady_clock::now();
    HttpResponse r;
    try {
      r = st->predict(req.body);
    } catch (const std::exception& e) {
      r = error_response(500, e.what());
    }
    st->record(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count(), r.status == 200);
    send(res, r);
  });
  srv.Get("/meta", [st](const httplib::Request&, httplib::Response& res) { send(res, st->meta()); });
  srv.Get("/metrics", [st](const httplib::Request&, httplib::Response& res) { send(res, st->metrics()); });
  srv.Get("/geometry", [st](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> k;
    if (req.has_param("decimate")) k = req.get_param_value("decimate");
    send(res, st->geometry(k));
  });
  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
  if (ui_dir) {
    require(std::filesystem::is_directory(*ui_dir), ErrorKind::Io, "ui directory " + ui_dir->string() + " does not exist");
    srv.set_mount_point("/", ui_dir->string());
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    require(bound > 0, ErrorKind::Io, "cannot bind to " + host);
    return bound;
  }
  require(impl_->server.bind_to_port(host, port), ErrorKind::Io, "cannot bind to " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace lrr
