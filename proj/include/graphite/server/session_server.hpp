#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "../error.hpp"
#include "../protocol.hpp"
#include "../session_hub.hpp"

namespace graphite::server {

/// Outbound bridge frames for one stream client.
class StreamSubscriber {
 public:
  explicit StreamSubscriber(std::uint16_t client) : client_(client) {}

  std::uint16_t client() const noexcept { return client_; }

  /// Waits up to `timeout` for frames; returns whatever is queued.
  std::vector<protocol::Bytes> take(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return !frames_.empty() || closed_; });
    std::vector<protocol::Bytes> out(std::make_move_iterator(frames_.begin()), std::make_move_iterator(frames_.end()));
    frames_.clear();
    return out;
  }

  bool closed() const {
    std::lock_guard lock(mu_);
    return closed_;
  }

  void close() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  friend class SessionServer;

  /// Reassembles relayed datagrams and queues them as bridge frames.
  void deliver(std::span<const std::uint8_t> datagram) {
    std::lock_guard lock(mu_);
    if (auto m = reassembly_.push(datagram)) frames_.push_back(protocol::encode_bridge_frame(*m));
    cv_.notify_all();
  }

  std::uint16_t client_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<protocol::Bytes> frames_;
  protocol::ReassemblyBuffer reassembly_;
  bool closed_{false};
};

struct SessionServerStats {
  std::uint64_t udp_received{0};
  std::uint64_t udp_sent{0};
  std::uint64_t udp_unregistered{0};
};

/// One shared session reachable over UDP datagrams and over the
/// length-prefixed stream bridge. Access to the hub is serialized.
class SessionServer {
 public:
  explicit SessionServer(HubConfig cfg = {}) : hub_(cfg) {}

  ~SessionServer() { stop_udp(); }

  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  // --- stream bridge -------------------------------------------------------

  std::shared_ptr<StreamSubscriber> subscribe(std::uint16_t client) {
    auto sub = std::make_shared<StreamSubscriber>(client);
    std::lock_guard lock(mu_);
    if (auto old = streams_.find(client); old != streams_.end()) old->second->close();
    streams_[client] = sub;
    for (auto& d : hub_.join(client)) sub->deliver(d.datagram);
    return sub;
  }

  void unsubscribe(const std::shared_ptr<StreamSubscriber>& sub) {
    std::lock_guard lock(mu_);
    auto it = streams_.find(sub->client());
    if (it != streams_.end() && it->second == sub) {
      streams_.erase(it);
      hub_.leave(sub->client());
    }
    sub->close();
  }

  /// Messages sent by a stream client are fanned out like its datagrams.
  void publish(std::uint16_t from, const protocol::Message& m) {
    std::lock_guard lock(mu_);
    if (!hub_.has_client(from)) hub_.join(from);
    for (const auto& d : protocol::encode_message(m, hub_.config().mtu)) route(hub_.fan_out(from, d));
  }

  // --- UDP -----------------------------------------------------------------

  /// Binds 127.0.0.1/0.0.0.0:`port` (0 picks a free port) and starts the
  /// receive loop. Returns the bound port.
  std::uint16_t start_udp(std::uint16_t port, bool any_address = true) {
    fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0);
    if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(any_address ? INADDR_ANY : INADDR_LOOPBACK);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      const int err = errno;
      ::close(fd_);
      fd_ = -1;
      throw Error(std::string("bind: ") + std::strerror(err));
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    running_ = true;
    udp_thread_ = std::thread([this] { udp_loop(); });
    return ntohs(addr.sin_port);
  }

  void stop_udp() {
    running_ = false;
    if (udp_thread_.joinable()) udp_thread_.join();
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  /// Handles one datagram from `from`. A PRESENCE datagram from an unknown
  /// address registers that address under the datagram's client id.
  void on_udp(const sockaddr_in& from, std::span<const std::uint8_t> datagram) {
    std::lock_guard lock(mu_);
    ++stats_.udp_received;
    const auto key = addr_key(from);
    auto it = udp_clients_.find(key);
    if (it == udp_clients_.end()) {
      auto parsed = protocol::parse_datagram(datagram);
      if (!parsed || parsed->first.type != protocol::MsgType::Presence) {
        ++stats_.udp_unregistered;
        return;
      }
      const auto client = parsed->first.client_id;
      it = udp_clients_.emplace(key, client).first;
      udp_addrs_[client] = from;
      route(hub_.join(client));
    }
    route(hub_.fan_out(it->second, datagram));
  }

  HubStats hub_stats() const {
    std::lock_guard lock(mu_);
    return hub_.stats();
  }

  SessionServerStats stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }

  protocol::StateStore snapshot() const {
    std::lock_guard lock(mu_);
    return hub_.snapshot();
  }

 private:
  static std::uint64_t addr_key(const sockaddr_in& a) {
    return (static_cast<std::uint64_t>(a.sin_addr.s_addr) << 16) | a.sin_port;
  }

  void route(const std::vector<Delivery>& deliveries) {
    for (const auto& d : deliveries) {
      if (auto s = streams_.find(d.to); s != streams_.end()) {
        s->second->deliver(d.datagram);
      } else if (auto u = udp_addrs_.find(d.to); u != udp_addrs_.end() && fd_ >= 0) {
        ::sendto(fd_, d.datagram.data(), d.datagram.size(), 0, reinterpret_cast<const sockaddr*>(&u->second),
                 sizeof u->second);
        ++stats_.udp_sent;
      }
    }
  }

  void udp_loop() {
    std::vector<std::uint8_t> buf(65536);
    while (running_) {
      pollfd p{fd_, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      sockaddr_in from{};
      socklen_t len = sizeof from;
      const ssize_t n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &len);
      if (n < 0) continue;
      on_udp(from, std::span<const std::uint8_t>(buf.data(), static_cast<std::size_t>(n)));
    }
  }

  mutable std::mutex mu_;
  SessionHub hub_;
  std::map<std::uint16_t, std::shared_ptr<StreamSubscriber>> streams_;
  std::map<std::uint64_t, std::uint16_t> udp_clients_;
  std::map<std::uint16_t, sockaddr_in> udp_addrs_;
  SessionServerStats stats_;
  int fd_{-1};
  std::atomic<bool> running_{false};
  std::thread udp_thread_;
};

}  // namespace graphite::server
