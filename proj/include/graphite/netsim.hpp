#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "interaction.hpp"
#include "kdtree.hpp"
#include "protocol.hpp"
#include "random.hpp"
#include "session_hub.hpp"

// Tick-driven simulation of a session over a lossy datagram network.
namespace graphite::netsim {

using protocol::MsgType;

struct NetworkModel {
  double loss_rate{0.0};
  double latency_min_ms{0.0};
  double latency_max_ms{0.0};
  double reorder_rate{0.0};
  double duplicate_rate{0.0};
  std::uint64_t rng_seed{0};

  void validate() const {
    for (double p : {loss_rate, reorder_rate, duplicate_rate}) {
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("network probabilities must be in [0, 1]");
    }
    if (!(latency_min_ms >= 0.0 && latency_min_ms <= latency_max_ms)) {
      throw ValidationError("latency must satisfy 0 <= min <= max");
    }
  }
};

/// Counts, per type, how many consecutive scheduler picks a type has been
/// waiting with data queued (the serving pick included).
class GapTracker {
 public:
  template <class Item>
  void before_pick(const protocol::FairScheduler<Item>& s) {
    for (std::size_t i = 0; i < 4; ++i) {
      if (s.pending(protocol::kAllTypes[i]) > 0) {
        ++waiting_[i];
      } else {
        waiting_[i] = 0;
      }
    }
  }

  void served(MsgType t) {
    const auto i = static_cast<std::size_t>(t) - 1;
    max_gap_[i] = std::max(max_gap_[i], waiting_[i]);
    waiting_[i] = 0;
  }

  std::uint64_t max_gap(MsgType t) const { return max_gap_[static_cast<std::size_t>(t) - 1]; }

 private:
  std::array<std::uint64_t, 4> waiting_{};
  std::array<std::uint64_t, 4> max_gap_{};
};

struct TypeMetrics {
  std::uint64_t injected{0};
  std::uint64_t delivered{0};
  std::uint64_t dropped{0};
  std::uint64_t duplicated{0};
  std::uint64_t max_send_gap{0};

  friend bool operator==(const TypeMetrics&, const TypeMetrics&) = default;
};

struct SimMetrics {
  std::map<MsgType, TypeMetrics> per_type;
  std::vector<double> staleness_ms;  // per receiver, worst age of any stored entry
  double max_staleness_ms{0.0};
  bool converged{false};
  /// Whether receivers that apply per-tick translation deltas (the
  /// event-based alternative) end up at the senders' transforms.
  bool event_strawman_converged{false};
  std::uint64_t partial_deliveries{0};
  std::uint64_t malformed{0};
  std::uint64_t evicted{0};

  nlohmann::json to_json() const {
    nlohmann::json types = nlohmann::json::object();
    for (const auto& [t, m] : per_type) {
      types[protocol::type_name(t)] = {{"injected", m.injected},
                                       {"delivered", m.delivered},
                                       {"dropped", m.dropped},
                                       {"duplicated", m.duplicated},
                                       {"max_send_gap", m.max_send_gap}};
    }
    return {{"per_type", types},
            {"staleness_ms", staleness_ms},
            {"max_staleness_ms", max_staleness_ms},
            {"converged", converged},
            {"event_strawman_converged", event_strawman_converged},
            {"partial_deliveries", partial_deliveries},
            {"malformed", malformed},
            {"evicted", evicted}};
  }

  friend bool operator==(const SimMetrics&, const SimMetrics&) = default;
};

struct Scenario {
  std::size_t clients{2};
  NetworkModel model;
  /// One frame trace per client; the last frame is held once a trace ends.
  std::vector<std::vector<HandFrame>> scripts;
  std::size_t ticks{100};
  double tick_ms{1000.0 / 30.0};
  std::size_t mtu{protocol::kDefaultMtu};
  /// Server datagrams sent per tick; 0 = everything queued.
  std::size_t server_budget{0};
  /// Also apply the network model on the client -> server leg.
  bool lossy_uplink{false};
  bool master_mode{false};
};

namespace detail {

struct InFlight {
  double at;
  std::uint64_t order;
  bool to_server;
  std::uint16_t peer;  // source client (to server) or destination client
  protocol::Bytes bytes;
};

struct Later {
  bool operator()(const InFlight& a, const InFlight& b) const {
    return a.at > b.at || (a.at == b.at && a.order > b.order);
  }
};

struct Receiver {
  protocol::ReassemblyBuffer reassembly;
  protocol::StateStore store;
  std::map<std::uint16_t, Vec3> strawman;  // accumulated translation per sender
};

}  // namespace detail

inline SimMetrics run_scenario(const Scenario& sc) {
  sc.model.validate();
  if (sc.clients == 0) throw ValidationError("scenario needs at least one client");
  if (sc.scripts.size() != sc.clients) throw ValidationError("one frame script per client required");
  for (const auto& s : sc.scripts) {
    if (s.empty()) throw ValidationError("empty frame script");
  }

  Rng rng(sc.model.rng_seed);
  SimMetrics metrics;
  for (auto t : protocol::kAllTypes) metrics.per_type[t] = {};

  SessionHub hub(HubConfig{sc.mtu, sc.master_mode, std::nullopt});
  protocol::FairScheduler<Delivery> outbound;
  GapTracker gaps;
  std::priority_queue<detail::InFlight, std::vector<detail::InFlight>, detail::Later> network;
  std::uint64_t order = 0;

  const Graph empty_graph;
  const KdTree empty_tree;
  std::vector<InteractionState> states(sc.clients);
  std::vector<detail::Receiver> receivers(sc.clients);
  std::vector<std::map<MsgType, protocol::Bytes>> last_payload(sc.clients);
  // (sender, sequence) -> translation delta the event-based variant would carry.
  std::map<std::pair<std::uint16_t, std::uint32_t>, Vec3> deltas;
  std::map<std::pair<std::uint16_t, std::uint32_t>, double> emitted_at;

  for (std::uint16_t c = 0; c < sc.clients; ++c) hub.join(c);

  auto type_of = [](const protocol::Bytes& d) {
    return static_cast<MsgType>(d.size() > 3 ? d[3] : 1);
  };

  auto transmit = [&](double now, bool to_server, std::uint16_t peer, protocol::Bytes bytes) {
    auto& tm = metrics.per_type[type_of(bytes)];
    ++tm.injected;
    const bool modeled = !to_server || sc.lossy_uplink;
    if (!modeled) {
      network.push({now, order++, to_server, peer, std::move(bytes)});
      return;
    }
    if (rng.bernoulli(sc.model.loss_rate)) {
      ++tm.dropped;
      return;
    }
    auto delay = [&] {
      double d = rng.uniform(sc.model.latency_min_ms, sc.model.latency_max_ms);
      if (rng.bernoulli(sc.model.reorder_rate)) d += rng.uniform(0.0, sc.model.latency_max_ms + sc.tick_ms);
      return d;
    };
    if (rng.bernoulli(sc.model.duplicate_rate)) {
      ++tm.duplicated;
      network.push({now + delay(), order++, to_server, peer, bytes});
    }
    network.push({now + delay(), order++, to_server, peer, std::move(bytes)});
  };

  auto deliver_due = [&](double now) {
    while (!network.empty() && network.top().at <= now) {
      detail::InFlight ev = network.top();
      network.pop();
      ++metrics.per_type[type_of(ev.bytes)].delivered;
      if (ev.to_server) {
        for (auto& d : hub.fan_out(ev.peer, ev.bytes)) {
          const auto t = type_of(d.datagram);
          outbound.push(t, std::move(d));
        }
        continue;
      }
      auto& rx = receivers[ev.peer];
      auto msg = rx.reassembly.push(ev.bytes);
      if (!msg) continue;
      if (!protocol::well_formed(*msg)) {
        ++metrics.partial_deliveries;
        continue;
      }
      rx.store.merge(*msg);
      if (msg->type == MsgType::Transform) {
        auto it = deltas.find({msg->client_id, msg->sequence});
        if (it != deltas.end()) rx.strawman[msg->client_id] += it->second;
      }
    }
  };

  auto server_send = [&](double now) {
    std::size_t sent = 0;
    while (sc.server_budget == 0 || sent < sc.server_budget) {
      gaps.before_pick(outbound);
      auto next = outbound.next();
      if (!next) break;
      gaps.served(next->first);
      transmit(now, false, next->second.to, std::move(next->second.datagram));
      ++sent;
    }
  };

  double now = 0.0;
  for (std::size_t tick = 0; tick < sc.ticks; ++tick) {
    now = static_cast<double>(tick) * sc.tick_ms;
    deliver_due(now);

    const auto seq = static_cast<std::uint32_t>(tick);
    for (std::uint16_t c = 0; c < sc.clients; ++c) {
      const auto& script = sc.scripts[c];
      const HandFrame& frame = script[std::min(tick, script.size() - 1)];
      const Vec3 before = states[c].current.translation;
      auto step = step_session(states[c], frame, empty_tree, empty_graph, SessionConfig{c, 0.05}, seq);
      states[c] = step.state;
      deltas[{c, seq}] = states[c].current.translation - before;
      emitted_at[{c, seq}] = now;
      for (const auto& m : step.messages) {
        last_payload[c][m.type] = m.payload;
        for (auto& d : protocol::encode_message(m, sc.mtu)) transmit(now, true, c, std::move(d));
      }
    }
    deliver_due(now);  // zero-delay uplink arrivals
    server_send(now);
  }

  // Staleness: age of each receiver's stored entries at the last tick.
  metrics.staleness_ms.assign(sc.clients, 0.0);
  for (std::uint16_t r = 0; r < sc.clients; ++r) {
    for (std::uint16_t c = 0; c < sc.clients; ++c) {
      if (c == r) continue;
      for (auto t : {MsgType::Pose, MsgType::Transform, MsgType::Highlight}) {
        const auto* m = receivers[r].store.find(c, t);
        const double age = m ? now - emitted_at[{c, m->sequence}] : now;
        metrics.staleness_ms[r] = std::max(metrics.staleness_ms[r], age);
      }
    }
    metrics.max_staleness_ms = std::max(metrics.max_staleness_ms, metrics.staleness_ms[r]);
  }

  // Drain everything still in flight.
  while (!network.empty() || outbound.pending() > 0) {
    if (!network.empty()) now = std::max(now, network.top().at);
    deliver_due(now);
    server_send(now);
  }

  bool converged = true;
  bool strawman = true;
  for (std::uint16_t r = 0; r < sc.clients; ++r) {
    for (std::uint16_t c = 0; c < sc.clients; ++c) {
      if (c == r) continue;
      for (auto t : {MsgType::Pose, MsgType::Transform, MsgType::Highlight}) {
        if (sc.master_mode && t == MsgType::Transform && hub.master() != c) continue;
        const auto* m = receivers[r].store.find(c, t);
        if (m == nullptr || m->payload != last_payload[c][t]) converged = false;
      }
      const Vec3 err = receivers[r].strawman[c] - states[c].current.translation;
      if (norm(err) > 1e-9) strawman = false;
    }
  }
  metrics.converged = converged;
  metrics.event_strawman_converged = strawman;
  for (auto t : protocol::kAllTypes) metrics.per_type[t].max_send_gap = gaps.max_gap(t);
  for (const auto& rx : receivers) {
    metrics.malformed += rx.reassembly.stats().malformed;
    metrics.evicted += rx.reassembly.stats().evicted;
  }
  metrics.malformed += hub.stats().malformed;
  return metrics;
}

/// Client 0 grabs (fist) and drags along +x, then holds still for the last
/// `hold_ticks` ticks; every other client idles with an open hand.
inline std::vector<std::vector<HandFrame>> grab_and_hold_scripts(std::size_t clients, std::size_t ticks,
                                                                 std::size_t hold_ticks, double step = 0.01) {
  std::vector<std::vector<HandFrame>> scripts(clients);
  const std::size_t moving = ticks > hold_ticks ? ticks - hold_ticks : 0;
  for (std::size_t t = 0; t < ticks; ++t) {
    const double x = step * static_cast<double>(std::min(t, moving));
    const auto ms = static_cast<std::int64_t>(t) * 33;
    if (clients > 0) scripts[0].push_back(synthetic_pose({x, 1.2, 0.3}, PoseCode::fist(), ms));
    for (std::size_t c = 1; c < clients; ++c) {
      scripts[c].push_back(synthetic_pose({0.1 * static_cast<double>(c), 1.0, 0.0}, PoseCode::open_hand(), ms));
    }
  }
  return scripts;
}

struct FairnessReport {
  std::uint64_t sends{0};
  std::array<std::uint64_t, 4> sent{};
  std::array<std::uint64_t, 4> max_gap{};
  std::size_t active_types{0};
};

/// Saturated scheduler under skewed arrivals. A backlog of one round is
/// queued up front; afterwards every pick is preceded by one arrival, where
/// each round holds `loads[i]` arrivals of type i in shuffled order.
inline FairnessReport run_fairness(const std::array<std::uint64_t, 4>& loads, std::uint64_t sends,
                                   std::uint64_t seed) {
  Rng rng(seed);
  protocol::FairScheduler<std::uint64_t> sched;
  GapTracker gaps;
  FairnessReport report;
  for (auto l : loads) report.active_types += l > 0 ? 1 : 0;

  std::uint64_t round = 0;
  for (auto l : loads) round += l;
  if (round == 0) throw ValidationError("fairness run needs a non-zero load");

  std::vector<MsgType> arrivals;
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::uint64_t k = 0; k < loads[i]; ++k) sched.push(protocol::kAllTypes[i], id++);
  }
  while (report.sends < sends) {
    arrivals.clear();
    for (std::size_t i = 0; i < 4; ++i) arrivals.insert(arrivals.end(), loads[i], protocol::kAllTypes[i]);
    rng.shuffle(arrivals);
    for (auto t : arrivals) {
      sched.push(t, id++);
      gaps.before_pick(sched);
      auto next = sched.next();
      gaps.served(next->first);
      ++report.sent[static_cast<std::size_t>(next->first) - 1];
      if (++report.sends >= sends) break;
    }
  }
  for (std::size_t i = 0; i < 4; ++i) report.max_gap[i] = gaps.max_gap(protocol::kAllTypes[i]);
  return report;
}

}  // namespace graphite::netsim
