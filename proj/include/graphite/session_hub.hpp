#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "protocol.hpp"

namespace graphite {

struct HubConfig {
  std::size_t mtu{protocol::kDefaultMtu};
  /// Only the master client's TRANSFORM messages are relayed.
  bool master_mode{false};
  /// Defaults to the first client to join.
  std::optional<std::uint16_t> master;
};

struct HubStats {
  std::uint64_t forwarded{0};        // datagrams accepted for relay
  std::uint64_t unknown_source{0};
  std::uint64_t malformed{0};
  std::uint64_t master_filtered{0};
};

struct Delivery {
  std::uint16_t to;
  protocol::Bytes datagram;
};

/// Server-side relay for one session. Every datagram from a registered
/// client goes unmodified to every other client; complete messages are also
/// merged into a latest-wins store that late joiners receive first.
///
/// Not thread-safe: callers serialize access per session.
class SessionHub {
 public:
  explicit SessionHub(HubConfig cfg = {}) : cfg_(cfg) {}

  /// Registers `client` and returns the current state snapshot for it.
  std::vector<Delivery> join(std::uint16_t client) {
    clients_.insert(client);
    if (cfg_.master_mode && !cfg_.master) cfg_.master = client;
    std::vector<Delivery> out;
    for (const auto& [key, msg] : store_.entries()) {
      if (key.first == client) continue;
      for (auto& d : protocol::encode_message(msg, cfg_.mtu)) out.push_back({client, std::move(d)});
    }
    return out;
  }

  void leave(std::uint16_t client) {
    clients_.erase(client);
    store_.erase_client(client);
  }

  bool has_client(std::uint16_t client) const { return clients_.contains(client); }
  const std::set<std::uint16_t>& clients() const noexcept { return clients_; }
  std::optional<std::uint16_t> master() const noexcept { return cfg_.master; }

  std::vector<Delivery> fan_out(std::uint16_t from, std::span<const std::uint8_t> datagram) {
    if (!clients_.contains(from)) {
      ++stats_.unknown_source;
      return {};
    }
    auto parsed = protocol::parse_datagram(datagram);
    if (!parsed) {
      ++stats_.malformed;
      return {};
    }
    if (cfg_.master_mode && parsed->first.type == protocol::MsgType::Transform && cfg_.master != from) {
      ++stats_.master_filtered;
      return {};
    }
    if (auto msg = reassembly_.push(datagram)) store_.merge(*msg);

    ++stats_.forwarded;
    std::vector<Delivery> out;
    for (auto c : clients_) {
      if (c == from) continue;
      out.push_back({c, protocol::Bytes(datagram.begin(), datagram.end())});
    }
    return out;
  }

  const protocol::StateStore& snapshot() const noexcept { return store_; }
  const HubStats& stats() const noexcept { return stats_; }
  const HubConfig& config() const noexcept { return cfg_; }

 private:
  HubConfig cfg_;
  std::set<std::uint16_t> clients_;
  protocol::ReassemblyBuffer reassembly_;
  protocol::StateStore store_;
  HubStats stats_;
};

inline std::vector<Delivery> fan_out(SessionHub& hub, std::uint16_t from, std::span<const std::uint8_t> datagram) {
  return hub.fan_out(from, datagram);
}

}  // namespace graphite
