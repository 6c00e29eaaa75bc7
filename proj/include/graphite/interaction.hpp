#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "kdtree.hpp"
#include "protocol.hpp"
#include "vec3.hpp"

namespace graphite {

inline constexpr std::size_t kFingers = 5;  // thumb, index, middle, ring, pinky

struct FingerJoints {
  Vec3 knuckle;
  Vec3 tip;
};

/// Nine tracked points: the hand plus knuckle and tip per finger.
struct HandFrame {
  Vec3 hand_position;
  Vec3 hand_forward{0, 0, 1};  // palm-forward unit axis
  std::array<FingerJoints, kFingers> fingers{};
  std::int64_t timestamp_ms{0};
};

enum class FingerState : std::uint8_t { Closed, Open };
using FingerStates = std::array<FingerState, kFingers>;

/// Bit i set iff finger i is open (thumb = bit 0).
struct PoseCode {
  std::uint8_t bits{0};

  static constexpr PoseCode fist() { return {0b00000}; }
  static constexpr PoseCode open_hand() { return {0b11111}; }
  static constexpr PoseCode pinch() { return {0b00011}; }   // thumb + index
  static constexpr PoseCode point() { return {0b00010}; }   // index only

  constexpr bool open(std::size_t finger) const { return (bits >> finger) & 1u; }
  friend constexpr bool operator==(PoseCode, PoseCode) = default;
};

inline constexpr double kOpenBelowDeg = 80.0;
inline constexpr double kClosedAboveDeg = 100.0;

/// Angle in degrees between two non-zero vectors.
inline double angle_deg(const Vec3& a, const Vec3& b) {
  const double c = dot(a, b) / (norm(a) * norm(b));
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

/// Open below 80 degrees, closed above 100, unchanged inside the band.
inline FingerState classify_angle(double theta_deg, FingerState prev) {
  if (theta_deg < kOpenBelowDeg) return FingerState::Open;
  if (theta_deg > kClosedAboveDeg) return FingerState::Closed;
  return prev;
}

inline FingerState classify_finger(const Vec3& knuckle, const Vec3& tip, const Vec3& hand_forward,
                                   FingerState prev) {
  const Vec3 dir = tip - knuckle;
  if (norm2(dir) == 0.0 || norm2(hand_forward) == 0.0) return prev;
  return classify_angle(angle_deg(dir, hand_forward), prev);
}

inline std::pair<PoseCode, FingerStates> encode_pose(const HandFrame& f, const FingerStates& prev) {
  FingerStates next{};
  PoseCode code;
  for (std::size_t i = 0; i < kFingers; ++i) {
    next[i] = classify_finger(f.fingers[i].knuckle, f.fingers[i].tip, f.hand_forward, prev[i]);
    if (next[i] == FingerState::Open) code.bits |= static_cast<std::uint8_t>(1u << i);
  }
  return {code, next};
}

/// Synthetic hand whose finger i points at `angles_deg[i]` from hand_forward.
inline HandFrame synthetic_hand(const Vec3& position, const std::array<double, kFingers>& angles_deg,
                                std::int64_t timestamp_ms = 0) {
  HandFrame f;
  f.hand_position = position;
  f.hand_forward = {0, 0, 1};
  f.timestamp_ms = timestamp_ms;
  for (std::size_t i = 0; i < kFingers; ++i) {
    const double a = angles_deg[i] * std::numbers::pi / 180.0;
    const Vec3 knuckle = position + Vec3{0.02 * (static_cast<double>(i) - 2.0), 0.0, 0.05};
    f.fingers[i] = {knuckle, knuckle + Vec3{0.0, std::sin(a), std::cos(a)} * 0.04};
  }
  return f;
}

/// Synthetic hand showing `code`: open fingers at 10 degrees, closed at 170.
inline HandFrame synthetic_pose(const Vec3& position, PoseCode code, std::int64_t timestamp_ms = 0) {
  std::array<double, kFingers> angles{};
  for (std::size_t i = 0; i < kFingers; ++i) angles[i] = code.open(i) ? 10.0 : 170.0;
  return synthetic_hand(position, angles, timestamp_ms);
}

enum class Mode : std::uint8_t { Idle, Grabbing, Scaling };

struct ModeDecision {
  Mode mode{Mode::Idle};
  bool highlight{false};
  friend constexpr bool operator==(ModeDecision, ModeDecision) = default;
};

/// fist -> grab, thumb+index -> scale, index alone -> highlight, else idle.
constexpr ModeDecision pose_to_mode(PoseCode code) {
  if (code == PoseCode::fist()) return {Mode::Grabbing, false};
  if (code == PoseCode::pinch()) return {Mode::Scaling, false};
  if (code == PoseCode::point()) return {Mode::Idle, true};
  return {Mode::Idle, false};
}

/// world = scale * local + translation
struct GraphTransform {
  Vec3 translation;
  double scale{1.0};

  Vec3 apply(const Vec3& local) const { return local * scale + translation; }
  Vec3 inverse(const Vec3& world) const { return (world - translation) * (1.0 / scale); }

  /// (this ∘ inner)(p) = this(inner(p))
  GraphTransform compose(const GraphTransform& inner) const {
    return {inner.translation * scale + translation, scale * inner.scale};
  }

  friend bool operator==(const GraphTransform&, const GraphTransform&) = default;
};

inline constexpr double kScaleRate = 2.0;  // lambda, per unit of hand travel

struct InteractionState {
  Mode mode{Mode::Idle};
  Vec3 anchor;                      // hand position at gesture start
  GraphTransform anchor_transform;  // transform at gesture start
  Vec3 scale_axis{0, 0, 1};         // unit direction graph center -> anchor
  GraphTransform current;
  std::optional<VertexId> highlighted;
  Vec3 graph_center;                // local-space centroid of the layout
  FingerStates fingers{};
  PoseCode pose;

  friend bool operator==(const InteractionState&, const InteractionState&) = default;
};

/// Enters `mode`, recording the anchor and the transform in force.
inline InteractionState begin_gesture(InteractionState s, Mode mode, const Vec3& hand, const Vec3& hand_forward) {
  s.mode = mode;
  s.anchor = hand;
  s.anchor_transform = s.current;
  if (mode == Mode::Scaling) {
    const Vec3 radial = hand - s.current.apply(s.graph_center);
    const double len = norm(radial);
    if (len > 1e-12) {
      s.scale_axis = radial * (1.0 / len);
    } else {
      const double fl = norm(hand_forward);
      s.scale_axis = fl > 0.0 ? hand_forward * (1.0 / fl) : Vec3{0, 0, 1};
    }
  }
  return s;
}

inline InteractionState apply_grab(InteractionState s, const Vec3& hand) {
  s.current.translation = s.anchor_transform.translation + (hand - s.anchor);
  s.current.scale = s.anchor_transform.scale;
  return s;
}

inline double scale_factor(const InteractionState& s, const Vec3& hand) {
  return std::exp(kScaleRate * dot(hand - s.anchor, s.scale_axis));
}

/// Scales about the anchor: the anchor's world position stays fixed.
inline InteractionState apply_scale(InteractionState s, const Vec3& hand) {
  const double f = scale_factor(s, hand);
  s.current.scale = s.anchor_transform.scale * f;
  s.current.translation = s.anchor + (s.anchor_transform.translation - s.anchor) * f;
  return s;
}

struct HighlightHit {
  VertexId vertex;
  std::vector<Edge> edges;  // every edge incident to `vertex`
  std::string label;
};

/// `fingertip` must already be in graph-local coordinates.
inline std::optional<HighlightHit> update_highlight(const Graph& g, const KdTree& tree, const Vec3& fingertip,
                                                    double radius) {
  auto hit = tree.nearest_within(fingertip, radius);
  if (!hit) return std::nullopt;
  HighlightHit out{hit->id, {}, {}};
  for (VertexId u : g.neighbors(hit->id)) out.edges.emplace_back(std::min(hit->id, u), std::max(hit->id, u));
  const auto& meta = g.meta(hit->id);
  out.label = meta.label.value_or(meta.id);
  return out;
}

inline Vec3 centroid(const Graph& g) {
  Vec3 c;
  std::size_t n = 0;
  for (const auto& m : g.meta()) {
    if (m.position) {
      c += *m.position;
      ++n;
    }
  }
  return n ? c * (1.0 / static_cast<double>(n)) : c;
}

struct SessionConfig {
  std::uint16_t client_id{0};
  double highlight_radius{0.05};  // world units
};

/// Per-client frame driver: pose -> mode -> transform/highlight update, then
/// a full-state broadcast (pose, transform, highlight) stamped `sequence`.
struct StepResult {
  InteractionState state;
  std::vector<protocol::Message> messages;
};

inline protocol::Message pose_message(const HandFrame& f, PoseCode code, std::uint16_t client, std::uint32_t seq) {
  protocol::PoseBody body;
  body.hand_position = f.hand_position;
  body.hand_forward = f.hand_forward;
  body.pose_code = code.bits;
  for (std::size_t i = 0; i < kFingers; ++i) body.fingers[i] = {f.fingers[i].knuckle, f.fingers[i].tip};
  return {protocol::MsgType::Pose, client, seq, protocol::encode_body(body)};
}

inline protocol::Message transform_message(const GraphTransform& t, std::uint16_t client, std::uint32_t seq) {
  return {protocol::MsgType::Transform, client, seq,
          protocol::encode_body(protocol::TransformBody{t.translation, static_cast<float>(t.scale)})};
}

inline protocol::Message highlight_message(std::optional<VertexId> v, std::uint16_t client, std::uint32_t seq) {
  return {protocol::MsgType::Highlight, client, seq,
          protocol::encode_body(protocol::HighlightBody{v.value_or(protocol::kNoVertex)})};
}

inline StepResult step_session(const InteractionState& prev, const HandFrame& frame, const KdTree& tree,
                               const Graph& graph, const SessionConfig& cfg, std::uint32_t sequence) {
  InteractionState s = prev;
  auto [code, fingers] = encode_pose(frame, s.fingers);
  s.fingers = fingers;
  s.pose = code;
  const ModeDecision decision = pose_to_mode(code);

  if (decision.mode == Mode::Idle) {
    s.mode = Mode::Idle;
    s.anchor = {};
    s.anchor_transform = {};
  } else if (decision.mode != s.mode) {
    s = begin_gesture(std::move(s), decision.mode, frame.hand_position, frame.hand_forward);
  }
  if (s.mode == Mode::Grabbing) s = apply_grab(std::move(s), frame.hand_position);
  if (s.mode == Mode::Scaling) s = apply_scale(std::move(s), frame.hand_position);

  s.highlighted.reset();
  if (decision.highlight && !tree.empty()) {
    const Vec3 tip_local = s.current.inverse(frame.fingers[1].tip);
    if (auto hit = update_highlight(graph, tree, tip_local, cfg.highlight_radius / s.current.scale)) {
      s.highlighted = hit->vertex;
    }
  }

  StepResult out{s, {}};
  out.messages.push_back(pose_message(frame, code, cfg.client_id, sequence));
  out.messages.push_back(transform_message(s.current, cfg.client_id, sequence));
  out.messages.push_back(highlight_message(s.highlighted, cfg.client_id, sequence));
  return out;
}

/// What a receiver reconstructs from the latest TRANSFORM message.
inline GraphTransform transform_from(const protocol::Message& m) {
  const auto body = protocol::decode_transform(m);
  return {body.translation, body.scale};
}

}  // namespace graphite
