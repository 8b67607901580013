#pragma once

#include <array>
#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrr/pipeline.hpp"

namespace lrr {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// Latency buckets in milliseconds; the last bucket is open-ended.
inline constexpr std::array<double, 7> kLatencyBucketsMs = {1, 5, 10, 25, 50, 100, 250};

/// Loaded surrogates plus the only mutable state, the request metrics.
/// Models and geometry are set before serving and read-only afterwards.
class ServiceState {
 public:
  void load(SurrogateModel model);
  /// Rest coordinates, one row per node.
  void set_geometry(Matrix nodes_by_xyz);

  bool has_model(Quantity q) const { return models_.count(q) > 0; }
  const SurrogateModel& model(Quantity q) const { return models_.at(q); }
  bool has_geometry() const { return geometry_.has_value(); }

  HttpResponse predict(const std::string& body) const;
  HttpResponse meta() const;
  HttpResponse geometry(const std::optional<std::string>& decimate) const;
  HttpResponse metrics() const;

  void record(double latency_ms, bool ok) const;

 private:
  void check_geometry() const;

  std::map<Quantity, SurrogateModel> models_;
  std::optional<Matrix> geometry_;

  mutable std::atomic<std::uint64_t> requests_{0};
  mutable std::atomic<std::uint64_t> errors_{0};
  mutable std::array<std::atomic<std::uint64_t>, kLatencyBucketsMs.size() + 1> histogram_{};
};

/// Parses "decimated:k" style strides; k must be a positive integer.
Index parse_stride(const std::string& text);

/// Node indices 0, k, 2k, ... below `nodes` (ceil(nodes / k) of them).
std::vector<Index> strided_nodes(Index nodes, Index k);

class HttpServer {
 public:
  HttpServer(std::shared_ptr<const ServiceState> state, std::optional<std::filesystem::path> ui_dir = std::nullopt);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "host:port" with an optional host.
std::pair<std::string, int> parse_bind_address(const std::string& text);

}  // namespace lrr
