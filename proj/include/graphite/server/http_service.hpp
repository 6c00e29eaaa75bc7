#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "../error.hpp"
#include "jobs.hpp"
#include "session_server.hpp"

namespace graphite::server {

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class T>
T query_or(const httplib::Request& req, const char* key, T fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      return std::stod(v);
    } else {
      return static_cast<T>(std::stoull(v));
    }
  } catch (const std::exception&) {
    throw ValidationError(std::string("bad value for '") + key + "'");
  }
}

}  // namespace detail

/// Reads job parameters from query fields: iters, cooling, seed,
/// community_seed, and optionally sample=rn|re|rw with p, fraction,
/// sample_seed.
inline JobParams params_from_query(const httplib::Request& req) {
  JobParams p;
  p.layout.max_iterations = detail::query_or<std::size_t>(req, "iters", p.layout.max_iterations);
  p.layout.cooling_exponent = detail::query_or<double>(req, "cooling", p.layout.cooling_exponent);
  p.layout.rng_seed = detail::query_or<std::uint64_t>(req, "seed", p.layout.rng_seed);
  p.community_seed = detail::query_or<std::uint64_t>(req, "community_seed", p.community_seed);
  if (req.has_param("sample")) {
    SampleSpec s;
    s.scheme = parse_scheme(req.get_param_value("sample"));
    s.p = detail::query_or<double>(req, "p", s.p);
    s.target_fraction = detail::query_or<double>(req, "fraction", s.target_fraction);
    s.rng_seed = detail::query_or<std::uint64_t>(req, "sample_seed", s.rng_seed);
    p.sample = s;
  }
  return p;
}

/// HTTP front for the job service and the session stream bridge.
class HttpService {
 public:
  HttpService(JobManager& jobs, SessionServer& session) : jobs_(jobs), session_(session) { routes(); }

  ~HttpService() { stop(); }

  /// Binds and serves on a background thread; port 0 picks a free port.
  int start(const std::string& host, int port) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error("cannot bind HTTP port " + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  void stop() {
    stopping_ = true;
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }

 private:
  void routes() {
    using httplib::Request;
    using httplib::Response;

    server_.Get("/healthz", [](const Request&, Response& res) { detail::send_json(res, 200, {{"status", "ok"}}); });

    server_.Post("/jobs", [this](const Request& req, Response& res) {
      try {
        const auto id = jobs_.submit(req.body, params_from_query(req));
        detail::send_json(res, 202, {{"job_id", id}});
      } catch (const ParseError& e) {
        detail::send_json(res, 400, {{"error", e.what()}, {"offset", e.offset()}});
      } catch (const ValidationError& e) {
        detail::send_json(res, 400, {{"error", e.what()}});
      }
    });

    server_.Get("/jobs", [this](const Request&, Response& res) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& job : jobs_.list()) list.push_back(job.to_json());
      detail::send_json(res, 200, list);
    });

    server_.Get(R"(/jobs/([A-Za-z0-9\-]+))", [this](const Request& req, Response& res) {
      try {
        detail::send_json(res, 200, jobs_.status(req.matches[1]).to_json());
      } catch (const NotFound& e) {
        detail::send_json(res, 404, {{"error", e.what()}});
      }
    });

    server_.Get(R"(/jobs/([A-Za-z0-9\-]+)/result)", [this](const Request& req, Response& res) {
      try {
        res.set_content(jobs_.fetch_result(req.matches[1]), "application/json");
      } catch (const NotFound& e) {
        detail::send_json(res, 404, {{"error", e.what()}});
      } catch (const Conflict& e) {
        detail::send_json(res, 409, {{"error", e.what()}, {"state", e.state()}});
      }
    });

    // Stream bridge, server -> client: snapshot first, then live frames.
    server_.Get("/session", [this](const Request& req, Response& res) {
      std::uint16_t client = 0;
      try {
        client = detail::query_or<std::uint16_t>(req, "client", 0);
      } catch (const ValidationError& e) {
        detail::send_json(res, 400, {{"error", e.what()}});
        return;
      }
      auto sub = session_.subscribe(client);
      res.set_chunked_content_provider(
          "application/octet-stream",
          [this, sub](std::size_t, httplib::DataSink& sink) {
            while (!stopping_ && !sub->closed()) {
              for (const auto& frame : sub->take(std::chrono::milliseconds(100))) {
                if (!sink.write(reinterpret_cast<const char*>(frame.data()), frame.size())) return false;
              }
              if (!sink.is_writable()) return false;
            }
            sink.done();
            return true;
          },
          [this, sub](bool) { session_.unsubscribe(sub); });
    });

    // Stream bridge, client -> server: a body of concatenated frames.
    server_.Post("/session", [this](const Request& req, Response& res) {
      try {
        const auto client = detail::query_or<std::uint16_t>(req, "client", 0);
        protocol::BridgeDecoder decoder;
        const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
        const auto messages = decoder.feed(std::span<const std::uint8_t>(data, req.body.size()));
        for (const auto& m : messages) session_.publish(client, m);
        detail::send_json(res, 200, {{"accepted", messages.size()}});
      } catch (const Error& e) {
        detail::send_json(res, 400, {{"error", e.what()}});
      }
    });
  }

  JobManager& jobs_;
  SessionServer& session_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  int port_{-1};
};

}  // namespace graphite::server
