#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "vec3.hpp"

// Wire protocol for the real-time session: fixed little-endian framing,
// MTU-bounded fragmentation, least-recently-sent scheduling and a
// latest-wins state store. There are no acknowledgements anywhere.
namespace graphite::protocol {

using Bytes = std::vector<std::uint8_t>;

enum class MsgType : std::uint8_t { Pose = 1, Transform = 2, Highlight = 3, Presence = 4 };

inline constexpr std::array<MsgType, 4> kAllTypes = {MsgType::Pose, MsgType::Transform, MsgType::Highlight,
                                                     MsgType::Presence};

inline const char* type_name(MsgType t) {
  switch (t) {
    case MsgType::Pose: return "pose";
    case MsgType::Transform: return "transform";
    case MsgType::Highlight: return "highlight";
    case MsgType::Presence: return "presence";
  }
  return "unknown";
}

inline constexpr std::uint16_t kMagic = 0x474A;  // "GJ"
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::size_t kDefaultMtu = 1400;
inline constexpr std::size_t kMaxPayload = 64 * 1024;

struct Message {
  MsgType type{MsgType::Pose};
  std::uint16_t client_id{0};
  std::uint32_t sequence{0};
  Bytes payload;

  friend bool operator==(const Message&, const Message&) = default;
};

/// b is newer than a iff 0 < (b - a) mod 2^32 < 2^31.
constexpr bool sequence_newer(std::uint32_t b, std::uint32_t a) {
  const std::uint32_t diff = b - a;
  return diff != 0 && diff < 0x80000000u;
}

// ---------------------------------------------------------------------------
// Little-endian primitives

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void vec3(const Vec3& v) {
    f32(static_cast<float>(v.x));
    f32(static_cast<float>(v.y));
    f32(static_cast<float>(v.z));
  }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

 private:
  template <class T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  Bytes& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const { return in_.size() - pos_; }

  std::uint8_t u8() { return static_cast<std::uint8_t>(get<1>()); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get<2>()); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get<4>()); }
  float f32() { return std::bit_cast<float>(u32()); }
  Vec3 vec3() {
    const float x = f32();
    const float y = f32();
    const float z = f32();
    return {x, y, z};
  }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    if (remaining() < n) throw SizeError("truncated buffer");
    auto out = in_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  template <std::size_t N>
  std::uint64_t get() {
    if (remaining() < N) throw SizeError("truncated buffer");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < N; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += N;
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_{0};
};

// ---------------------------------------------------------------------------
// Payload bodies

struct FingerJoints {
  Vec3 knuckle;
  Vec3 tip;
  friend bool operator==(const FingerJoints&, const FingerJoints&) = default;
};

struct PoseBody {
  Vec3 hand_position;
  Vec3 hand_forward;
  std::uint8_t pose_code{0};
  std::array<FingerJoints, 5> fingers{};
  friend bool operator==(const PoseBody&, const PoseBody&) = default;
};

struct TransformBody {
  Vec3 translation;
  float scale{1.0f};
  friend bool operator==(const TransformBody&, const TransformBody&) = default;
};

inline constexpr std::uint32_t kNoVertex = 0xFFFFFFFFu;

struct HighlightBody {
  std::uint32_t vertex{kNoVertex};
  friend bool operator==(const HighlightBody&, const HighlightBody&) = default;
};

struct PresenceBody {
  Vec3 head_position;
  std::array<float, 4> orientation{0, 0, 0, 1};  // quaternion x, y, z, w
  friend bool operator==(const PresenceBody&, const PresenceBody&) = default;
};

inline constexpr std::size_t kPoseBodySize = 3 * 4 + 3 * 4 + 1 + 5 * 6 * 4;
inline constexpr std::size_t kTransformBodySize = 16;
inline constexpr std::size_t kHighlightBodySize = 4;
inline constexpr std::size_t kPresenceBodySize = 28;

inline std::size_t body_size(MsgType t) {
  switch (t) {
    case MsgType::Pose: return kPoseBodySize;
    case MsgType::Transform: return kTransformBodySize;
    case MsgType::Highlight: return kHighlightBodySize;
    case MsgType::Presence: return kPresenceBodySize;
  }
  return 0;
}

inline Bytes encode_body(const PoseBody& b) {
  Bytes out;
  out.reserve(kPoseBodySize);
  Writer w(out);
  w.vec3(b.hand_position);
  w.vec3(b.hand_forward);
  w.u8(b.pose_code);
  for (const auto& f : b.fingers) {
    w.vec3(f.knuckle);
    w.vec3(f.tip);
  }
  return out;
}

inline Bytes encode_body(const TransformBody& b) {
  Bytes out;
  Writer w(out);
  w.vec3(b.translation);
  w.f32(b.scale);
  return out;
}

inline Bytes encode_body(const HighlightBody& b) {
  Bytes out;
  Writer w(out);
  w.u32(b.vertex);
  return out;
}

inline Bytes encode_body(const PresenceBody& b) {
  Bytes out;
  Writer w(out);
  w.vec3(b.head_position);
  for (float q : b.orientation) w.f32(q);
  return out;
}

namespace detail {

inline Reader body_reader(const Message& m, MsgType expected) {
  if (m.type != expected) throw ValidationError(std::string("message is not ") + type_name(expected));
  if (m.payload.size() != body_size(expected)) {
    throw SizeError(std::string(type_name(expected)) + " body has wrong size");
  }
  return Reader(m.payload);
}

}  // namespace detail

inline PoseBody decode_pose(const Message& m) {
  Reader r = detail::body_reader(m, MsgType::Pose);
  PoseBody b;
  b.hand_position = r.vec3();
  b.hand_forward = r.vec3();
  b.pose_code = r.u8();
  for (auto& f : b.fingers) {
    f.knuckle = r.vec3();
    f.tip = r.vec3();
  }
  return b;
}

inline TransformBody decode_transform(const Message& m) {
  Reader r = detail::body_reader(m, MsgType::Transform);
  TransformBody b;
  b.translation = r.vec3();
  b.scale = r.f32();
  return b;
}

inline HighlightBody decode_highlight(const Message& m) {
  Reader r = detail::body_reader(m, MsgType::Highlight);
  return HighlightBody{r.u32()};
}

inline PresenceBody decode_presence(const Message& m) {
  Reader r = detail::body_reader(m, MsgType::Presence);
  PresenceBody b;
  b.head_position = r.vec3();
  for (auto& q : b.orientation) q = r.f32();
  return b;
}

/// True when the payload size matches the body layout of its type.
inline bool well_formed(const Message& m) { return m.payload.size() == body_size(m.type); }

// ---------------------------------------------------------------------------
// Datagram framing

struct DatagramHeader {
  MsgType type{MsgType::Pose};
  std::uint16_t client_id{0};
  std::uint32_t sequence{0};
  std::uint16_t frag_index{0};
  std::uint16_t frag_count{1};
  std::uint16_t payload_len{0};
};

inline std::size_t fragment_capacity(std::size_t mtu) {
  if (mtu < kHeaderSize + 1) throw ValidationError("mtu must leave room for at least one payload byte");
  return std::min<std::size_t>(mtu - kHeaderSize, 0xFFFF);
}

/// Splits `m` into datagrams no larger than `mtu`. An empty payload still
/// produces one datagram.
inline std::vector<Bytes> encode_message(const Message& m, std::size_t mtu = kDefaultMtu) {
  const std::size_t cap = fragment_capacity(mtu);
  if (m.payload.size() > kMaxPayload) throw SizeError("payload exceeds 64 KiB");
  const std::size_t count = m.payload.empty() ? 1 : (m.payload.size() + cap - 1) / cap;
  if (count > 0xFFFF) throw SizeError("payload needs more than 65535 fragments at this mtu");

  std::vector<Bytes> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t begin = i * cap;
    const std::size_t len = std::min(cap, m.payload.size() - std::min(begin, m.payload.size()));
    Bytes d;
    d.reserve(kHeaderSize + len);
    Writer w(d);
    w.u16(kMagic);
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(m.type));
    w.u16(m.client_id);
    w.u32(m.sequence);
    w.u16(static_cast<std::uint16_t>(i));
    w.u16(static_cast<std::uint16_t>(count));
    w.u16(static_cast<std::uint16_t>(len));
    w.bytes(std::span<const std::uint8_t>(m.payload).subspan(begin, len));
    out.push_back(std::move(d));
  }
  return out;
}

/// Parses and validates a datagram header. Returns nullopt for anything that
/// is not a well-formed datagram.
inline std::optional<std::pair<DatagramHeader, std::span<const std::uint8_t>>> parse_datagram(
    std::span<const std::uint8_t> d) {
  if (d.size() < kHeaderSize) return std::nullopt;
  Reader r(d);
  if (r.u16() != kMagic || r.u8() != kVersion) return std::nullopt;
  DatagramHeader h;
  const std::uint8_t type = r.u8();
  if (type < 1 || type > 4) return std::nullopt;
  h.type = static_cast<MsgType>(type);
  h.client_id = r.u16();
  h.sequence = r.u32();
  h.frag_index = r.u16();
  h.frag_count = r.u16();
  h.payload_len = r.u16();
  if (h.frag_count == 0 || h.frag_index >= h.frag_count) return std::nullopt;
  if (r.remaining() != h.payload_len) return std::nullopt;
  return std::pair{h, r.bytes(h.payload_len)};
}

struct ReassemblyStats {
  std::uint64_t malformed{0};
  std::uint64_t evicted{0};  // incomplete messages discarded for a newer sequence
  std::uint64_t stale{0};    // fragments older than the reassembly in progress
  std::uint64_t delivered{0};
};

/// Per-(client, type) reassembly with whole-message discard: an incomplete
/// message is dropped as soon as a newer sequence for the same stream shows up.
class ReassemblyBuffer {
 public:
  std::optional<Message> push(std::span<const std::uint8_t> datagram) {
    auto parsed = parse_datagram(datagram);
    if (!parsed) {
      ++stats_.malformed;
      return std::nullopt;
    }
    const auto& [h, body] = *parsed;
    const Key key{h.client_id, h.type};
    auto it = pending_.find(key);

    if (it != pending_.end() && it->second.sequence != h.sequence) {
      if (sequence_newer(h.sequence, it->second.sequence)) {
        pending_.erase(it);
        it = pending_.end();
        ++stats_.evicted;
      } else if (h.frag_count > 1) {
        ++stats_.stale;
        return std::nullopt;
      }
    }

    if (h.frag_count == 1) {
      ++stats_.delivered;
      return Message{h.type, h.client_id, h.sequence, Bytes(body.begin(), body.end())};
    }

    if (it == pending_.end()) {
      Partial p;
      p.sequence = h.sequence;
      p.fragments.resize(h.frag_count);
      it = pending_.emplace(key, std::move(p)).first;
    }
    Partial& p = it->second;
    if (p.fragments.size() != h.frag_count) {
      ++stats_.malformed;
      return std::nullopt;
    }
    auto& slot = p.fragments[h.frag_index];
    if (slot) return std::nullopt;  // duplicate fragment
    slot = Bytes(body.begin(), body.end());
    p.total += body.size();
    if (p.total > kMaxPayload) {
      ++stats_.malformed;
      pending_.erase(it);
      return std::nullopt;
    }
    if (++p.received < p.fragments.size()) return std::nullopt;

    Message m{h.type, h.client_id, h.sequence, {}};
    m.payload.reserve(p.total);
    for (const auto& f : p.fragments) m.payload.insert(m.payload.end(), f->begin(), f->end());
    pending_.erase(it);
    ++stats_.delivered;
    return m;
  }

  const ReassemblyStats& stats() const noexcept { return stats_; }
  std::size_t pending() const noexcept { return pending_.size(); }

 private:
  using Key = std::pair<std::uint16_t, MsgType>;
  struct Partial {
    std::uint32_t sequence{0};
    std::vector<std::optional<Bytes>> fragments;
    std::size_t received{0};
    std::size_t total{0};
  };

  std::map<Key, Partial> pending_;
  ReassemblyStats stats_;
};

inline std::optional<Message> decode_datagram(std::span<const std::uint8_t> d, ReassemblyBuffer& r) {
  return r.push(d);
}

// ---------------------------------------------------------------------------
// Least-recently-sent scheduling

/// Per-type outbound queues. Each pick serves the non-empty queue whose type
/// was sent least recently (never-sent first, ties to the lower type id).
template <class Item>
class FairScheduler {
 public:
  void push(MsgType type, Item item) { queues_[index(type)].push_back(std::move(item)); }

  std::optional<std::pair<MsgType, Item>> next() {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < queues_.size(); ++i) {
      if (queues_[i].empty()) continue;
      if (!pick || last_sent_[i] < last_sent_[*pick]) pick = i;
    }
    if (!pick) return std::nullopt;
    last_sent_[*pick] = ++clock_;
    Item item = std::move(queues_[*pick].front());
    queues_[*pick].pop_front();
    return std::pair{kAllTypes[*pick], std::move(item)};
  }

  std::size_t pending(MsgType type) const { return queues_[index(type)].size(); }

  std::size_t pending() const {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.size();
    return n;
  }

  std::size_t active_types() const {
    std::size_t n = 0;
    for (const auto& q : queues_) n += q.empty() ? 0 : 1;
    return n;
  }

  std::uint64_t last_sent(MsgType type) const { return last_sent_[index(type)]; }

 private:
  static std::size_t index(MsgType t) { return static_cast<std::size_t>(t) - 1; }

  std::array<std::deque<Item>, 4> queues_;
  std::array<std::uint64_t, 4> last_sent_{};
  std::uint64_t clock_{0};
};

inline std::optional<std::pair<MsgType, Message>> next_to_send(FairScheduler<Message>& s) { return s.next(); }

// ---------------------------------------------------------------------------
// Latest-wins state

class StateStore {
 public:
  using Key = std::pair<std::uint16_t, MsgType>;

  /// Stores `m` iff it is newer than what is held for its (client, type).
  bool merge(const Message& m) {
    const Key key{m.client_id, m.type};
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      entries_.emplace(key, m);
      return true;
    }
    if (!sequence_newer(m.sequence, it->second.sequence)) return false;
    it->second = m;
    return true;
  }

  const Message* find(std::uint16_t client, MsgType type) const {
    auto it = entries_.find({client, type});
    return it == entries_.end() ? nullptr : &it->second;
  }

  void erase_client(std::uint16_t client) {
    for (auto it = entries_.begin(); it != entries_.end();) {
      it = it->first.first == client ? entries_.erase(it) : std::next(it);
    }
  }

  const std::map<Key, Message>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  friend bool operator==(const StateStore&, const StateStore&) = default;

 private:
  std::map<Key, Message> entries_;
};

inline StateStore merge_state(StateStore store, const Message& m) {
  store.merge(m);
  return store;
}

// ---------------------------------------------------------------------------
// Stream bridge framing: u32 body length, then u8 type, u16 client,
// u32 sequence, payload.

inline constexpr std::size_t kBridgeHeader = 7;

inline Bytes encode_bridge_frame(const Message& m) {
  if (m.payload.size() > kMaxPayload) throw SizeError("payload exceeds 64 KiB");
  Bytes out;
  out.reserve(4 + kBridgeHeader + m.payload.size());
  Writer w(out);
  w.u32(static_cast<std::uint32_t>(kBridgeHeader + m.payload.size()));
  w.u8(static_cast<std::uint8_t>(m.type));
  w.u16(m.client_id);
  w.u32(m.sequence);
  w.bytes(m.payload);
  return out;
}

/// Incremental decoder for a byte stream of bridge frames.
class BridgeDecoder {
 public:
  /// Appends bytes and returns every complete frame. Throws on a corrupt
  /// frame; the stream cannot be resynchronized after that.
  std::vector<Message> feed(std::span<const std::uint8_t> data) {
    buffer_.insert(buffer_.end(), data.begin(), data.end());
    std::vector<Message> out;
    std::size_t pos = 0;
    while (buffer_.size() - pos >= 4) {
      Reader len_reader(std::span<const std::uint8_t>(buffer_).subspan(pos, 4));
      const std::uint32_t len = len_reader.u32();
      if (len < kBridgeHeader || len > kBridgeHeader + kMaxPayload) throw SizeError("bad bridge frame length");
      if (buffer_.size() - pos - 4 < len) break;
      Reader r(std::span<const std::uint8_t>(buffer_).subspan(pos + 4, len));
      const std::uint8_t type = r.u8();
      if (type < 1 || type > 4) throw ValidationError("bad bridge frame type");
      Message m;
      m.type = static_cast<MsgType>(type);
      m.client_id = r.u16();
      m.sequence = r.u32();
      auto body = r.bytes(r.remaining());
      m.payload.assign(body.begin(), body.end());
      out.push_back(std::move(m));
      pos += 4 + len;
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos));
    return out;
  }

 private:
  Bytes buffer_;
};

}  // namespace graphite::protocol
