#include <gtest/gtest.h>

#include <cmath>

#include "graphite/generators.hpp"
#include "graphite/interaction.hpp"

using namespace graphite;

namespace {

constexpr auto kOpen = FingerState::Open;
constexpr auto kClosed = FingerState::Closed;

Vec3 random_vec(Rng& rng, double r) { return {rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)}; }

struct Scene {
  Graph graph;
  KdTree tree;
};

// Star with labelled hub at the origin and leaves on the x axis, plus one
// isolated vertex far away.
Scene star_scene() {
  std::vector<VertexMeta> meta(6);
  for (std::size_t i = 0; i < 6; ++i) meta[i].id = "v" + std::to_string(i);
  meta[0].label = "@hub";
  meta[5].label = "@loner";
  for (std::size_t i = 0; i < 5; ++i) meta[i].position = Vec3{0.3 * double(i), 0, 0};
  meta[5].position = Vec3{0, 2, 0};
  Graph g(std::move(meta), {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  KdTree t = KdTree::from_graph(g);
  return {std::move(g), std::move(t)};
}

}  // namespace

TEST(Finger, ClassifyExtremes) {
  const Vec3 fwd{0, 0, 1};
  EXPECT_EQ(classify_finger({0, 0, 0}, {0, 0, 1}, fwd, kClosed), kOpen);
  EXPECT_EQ(classify_finger({0, 0, 0}, {0, 0, -1}, fwd, kOpen), kClosed);
  EXPECT_EQ(classify_finger({1, 1, 1}, {1, 1, 1}, fwd, kOpen), kOpen);  // zero-length keeps prev
  EXPECT_EQ(classify_finger({1, 1, 1}, {1, 1, 1}, fwd, kClosed), kClosed);
}

TEST(Finger, DeadBandKeepsState) {
  FingerState s = kOpen;
  for (int i = 0; i < 200; ++i) {
    s = classify_angle(i % 2 ? 88.0 : 92.0, s);
    ASSERT_EQ(s, kOpen);
  }
  s = kClosed;
  for (int i = 0; i < 200; ++i) {
    s = classify_angle(i % 2 ? 88.0 : 92.0, s);
    ASSERT_EQ(s, kClosed);
  }
  EXPECT_EQ(classify_angle(79.9, kClosed), kOpen);
  EXPECT_EQ(classify_angle(100.1, kOpen), kClosed);
  EXPECT_EQ(classify_angle(80.0, kClosed), kClosed);
  EXPECT_EQ(classify_angle(100.0, kOpen), kOpen);
}

TEST(Pose, Examples) {
  FingerStates prev{};
  EXPECT_EQ(encode_pose(synthetic_hand({}, {10, 10, 10, 10, 10}), prev).first.bits, 31);
  EXPECT_EQ(encode_pose(synthetic_hand({}, {170, 170, 170, 170, 170}), prev).first.bits, 0);
  EXPECT_EQ(encode_pose(synthetic_hand({}, {170, 10, 170, 170, 170}), prev).first.bits, 2);
}

TEST(Pose, EveryCodeReachable) {
  for (std::uint8_t bits = 0; bits < 32; ++bits) {
    for (FingerState start : {kOpen, kClosed}) {
      FingerStates prev;
      prev.fill(start);
      const auto [code, states] = encode_pose(synthetic_pose({0.1, 0.2, 0.3}, PoseCode{bits}), prev);
      EXPECT_EQ(code.bits, bits);
      for (std::size_t i = 0; i < kFingers; ++i) EXPECT_EQ(states[i] == kOpen, ((bits >> i) & 1u) != 0);
    }
  }
}

TEST(Pose, HysteresisOverRandomTrajectories) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    FingerStates states;
    for (auto& s : states) s = rng.bernoulli(0.5) ? kOpen : kClosed;
    const FingerStates initial = states;
    for (int frame = 0; frame < 1000; ++frame) {
      std::array<double, kFingers> angles{};
      for (auto& a : angles) a = rng.uniform(80.0 + 1e-6, 100.0 - 1e-6);
      states = encode_pose(synthetic_hand({}, angles), states).second;
      ASSERT_EQ(states, initial);
    }
  }
}

TEST(Mode, Table) {
  EXPECT_EQ(pose_to_mode(PoseCode{0}).mode, Mode::Grabbing);
  EXPECT_EQ(pose_to_mode(PoseCode{3}).mode, Mode::Scaling);
  EXPECT_EQ(pose_to_mode(PoseCode{31}).mode, Mode::Idle);
  EXPECT_EQ(pose_to_mode(PoseCode{2}), (ModeDecision{Mode::Idle, true}));
  for (std::uint8_t b = 0; b < 32; ++b) {
    if (b == 0 || b == 2 || b == 3) continue;
    EXPECT_EQ(pose_to_mode(PoseCode{b}), (ModeDecision{Mode::Idle, false})) << int(b);
  }
}

TEST(Grab, Examples) {
  InteractionState s;
  s.current = {{1, 2, 3}, 2.0};
  s = begin_gesture(s, Mode::Grabbing, {0.5, 0.5, 0.5}, {0, 0, 1});
  EXPECT_EQ(apply_grab(s, {0.5, 0.5, 0.5}).current, s.current);
  const auto moved = apply_grab(s, {1.5, 0.5, 0.5});
  EXPECT_EQ(moved.current.translation, (Vec3{2, 2, 3}));
  EXPECT_EQ(moved.current.scale, 2.0);

  // Only the final hand position matters.
  const auto two_step = apply_grab(apply_grab(s, {0.9, 0.1, 0.7}), {1.2, -0.4, 0.5});
  const auto one_step = apply_grab(s, {1.2, -0.4, 0.5});
  EXPECT_EQ(two_step.current, one_step.current);
}

TEST(Scale, Examples) {
  InteractionState s;
  s.graph_center = {0, 0, 0};
  s = begin_gesture(s, Mode::Scaling, {1, 0, 0}, {0, 0, 1});
  EXPECT_EQ(s.scale_axis, (Vec3{1, 0, 0}));
  EXPECT_EQ(apply_scale(s, {1, 0, 0}).current, s.current);
  EXPECT_NEAR(scale_factor(s, {1.5, 0, 0}), std::exp(1.0), 1e-12);
  EXPECT_NEAR(apply_scale(s, {1.5, 0, 0}).current.scale, 2.718281828, 1e-9);
  EXPECT_NEAR(scale_factor(s, {0.5, 0, 0}), std::exp(-1.0), 1e-12);
}

TEST(Scale, DegenerateAxisFallsBackToHandForward) {
  InteractionState s;
  s.graph_center = {1, 1, 1};
  s = begin_gesture(s, Mode::Scaling, {1, 1, 1}, {0, 2, 0});
  EXPECT_EQ(s.scale_axis, (Vec3{0, 1, 0}));
}

TEST(Scale, AnchorIsFixedPoint) {
  Rng rng(10);
  for (int i = 0; i < 1000; ++i) {
    InteractionState s;
    s.current = {random_vec(rng, 2), rng.uniform(0.2, 5)};
    s.graph_center = random_vec(rng, 1);
    const Vec3 anchor = random_vec(rng, 1);
    s = begin_gesture(s, Mode::Scaling, anchor, {0, 0, 1});
    const Vec3 local = s.anchor_transform.inverse(anchor);
    const auto scaled = apply_scale(s, anchor + random_vec(rng, 0.5));
    EXPECT_NEAR(norm(scaled.current.apply(local) - anchor), 0.0, 1e-9);
  }
}

TEST(Transform, ComposeIsAssociativeAndInvertible) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const GraphTransform a{random_vec(rng, 3), rng.uniform(0.1, 4)};
    const GraphTransform b{random_vec(rng, 3), rng.uniform(0.1, 4)};
    const GraphTransform c{random_vec(rng, 3), rng.uniform(0.1, 4)};
    const auto l = a.compose(b).compose(c);
    const auto r = a.compose(b.compose(c));
    EXPECT_NEAR(norm(l.translation - r.translation), 0.0, 1e-12);
    EXPECT_NEAR(l.scale, r.scale, 1e-12);
    const Vec3 p = random_vec(rng, 2);
    EXPECT_NEAR(norm(a.inverse(a.apply(p)) - p), 0.0, 1e-12);
    EXPECT_NEAR(norm(l.apply(p) - a.apply(b.apply(c.apply(p)))), 0.0, 1e-12);
  }
}

TEST(Highlight, Examples) {
  const auto [g, t] = star_scene();
  EXPECT_FALSE(update_highlight(g, t, {5, 5, 5}, 0.1));

  const auto loner = update_highlight(g, t, {0, 2.01, 0}, 0.1);
  ASSERT_TRUE(loner);
  EXPECT_EQ(loner->vertex, 5u);
  EXPECT_TRUE(loner->edges.empty());
  EXPECT_EQ(loner->label, "@loner");

  const auto hub = update_highlight(g, t, {0.01, 0, 0}, 0.1);
  ASSERT_TRUE(hub);
  EXPECT_EQ(hub->vertex, 0u);
  EXPECT_EQ(hub->edges.size(), g.degree(0));
  for (const auto& e : hub->edges) EXPECT_TRUE(g.has_edge(e.first, e.second));
  EXPECT_EQ(hub->label, "@hub");

  // Falls back to the document id without a label.
  EXPECT_EQ(update_highlight(g, t, {0.3, 0, 0}, 0.1)->label, "v1");
}

TEST(Session, FistAccumulatesDisplacement) {
  const Graph g;
  const KdTree t;
  InteractionState s;
  const Vec3 start{0.1, 1.0, 0.2};
  for (int i = 0; i < 3; ++i) {
    const auto r = step_session(s, synthetic_pose(start + Vec3{0.05 * i, 0, 0}, PoseCode::fist()), t, g, {}, i);
    s = r.state;
    EXPECT_EQ(s.mode, Mode::Grabbing);
  }
  EXPECT_NEAR(s.current.translation.x, 0.1, 1e-12);
  EXPECT_EQ(s.anchor, start);
}

TEST(Session, OpenHandBroadcastsUnchangedState) {
  const Graph g;
  const KdTree t;
  InteractionState s;
  s.current = {{1, 1, 1}, 1.5};
  for (std::uint32_t i = 0; i < 5; ++i) {
    const auto r = step_session(s, synthetic_pose({0.3, 0.3, 0.3}, PoseCode::open_hand()), t, g, {7, 0.05}, i);
    EXPECT_EQ(r.state.current, s.current);
    EXPECT_EQ(r.state.mode, Mode::Idle);
    ASSERT_EQ(r.messages.size(), 3u);
    for (const auto& m : r.messages) {
      EXPECT_EQ(m.client_id, 7);
      EXPECT_EQ(m.sequence, i);
      EXPECT_TRUE(protocol::well_formed(m));
    }
  }
}

TEST(Session, PointHighlightsInLocalCoordinates) {
  const auto [g, t] = star_scene();
  InteractionState s;
  s.current = {{10, 0, 0}, 2.0};  // local v2 = (0.6, 0, 0) sits at world (11.2, 0, 0)
  // Index fingertip of a synthetic point pose, 10 degrees off +z.
  auto frame = synthetic_pose({0, 0, 0}, PoseCode::point());
  const Vec3 tip_offset = frame.fingers[1].tip;
  frame = synthetic_pose(Vec3{11.2, 0, 0} - tip_offset, PoseCode::point());
  const auto r = step_session(s, frame, t, g, {0, 0.05}, 0);
  ASSERT_TRUE(r.state.highlighted);
  EXPECT_EQ(*r.state.highlighted, 2u);
  EXPECT_EQ(protocol::decode_highlight(r.messages[2]).vertex, 2u);
}

TEST(Session, IdleClearsAnchor) {
  const Graph g;
  const KdTree t;
  InteractionState s;
  s = step_session(s, synthetic_pose({1, 1, 1}, PoseCode::fist()), t, g, {}, 0).state;
  EXPECT_EQ(s.anchor, (Vec3{1, 1, 1}));
  s = step_session(s, synthetic_pose({2, 2, 2}, PoseCode::open_hand()), t, g, {}, 1).state;
  EXPECT_EQ(s.mode, Mode::Idle);
  EXPECT_EQ(s.anchor, Vec3{});
  EXPECT_EQ(s.anchor_transform, GraphTransform{});
}

TEST(Session, LastMessageAloneReproducesFinalTransform) {
  const Graph g;
  const KdTree t;
  Rng rng(4);
  InteractionState s;
  s.graph_center = {0, 1, 0};
  std::vector<protocol::Message> transforms;
  const PoseCode poses[] = {PoseCode::fist(), PoseCode::pinch(), PoseCode::open_hand()};
  for (std::uint32_t i = 0; i < 300; ++i) {
    const PoseCode code = poses[(i / 20) % 3];
    const auto r = step_session(s, synthetic_pose(random_vec(rng, 0.3), code), t, g, {}, i);
    s = r.state;
    transforms.push_back(r.messages[1]);
  }
  // Any lossy subsequence ending with the final message yields the final transform.
  protocol::StateStore store;
  for (const auto& m : transforms) {
    if (rng.bernoulli(0.7) && &m != &transforms.back()) continue;
    store.merge(m);
  }
  const auto received = transform_from(*store.find(0, protocol::MsgType::Transform));
  EXPECT_NEAR(norm(received.translation - s.current.translation), 0.0, 1e-5);
  EXPECT_NEAR(received.scale / s.current.scale, 1.0, 1e-6);
}

TEST(Session, DeterministicTraces) {
  const Graph g;
  const KdTree t;
  auto run = [&] {
    Rng rng(99);
    InteractionState s;
    std::vector<InteractionState> trace;
    for (std::uint32_t i = 0; i < 200; ++i) {
      std::array<double, kFingers> angles{};
      for (auto& a : angles) a = rng.uniform(0, 180);
      s = step_session(s, synthetic_hand(random_vec(rng, 1), angles), t, g, {}, i).state;
      trace.push_back(s);
    }
    return trace;
  };
  EXPECT_EQ(run(), run());
}
