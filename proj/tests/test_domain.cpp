#include <gtest/gtest.h>

#include "abtrack/domain.hpp"
#include "ec_property.hpp"

using namespace abtrack;

namespace {

const TrackId T1{1}, T2{2}, T3{3};

Prediction pred(TrackId id, BBox2D box, TrackState s = TrackState::active, int halted = 0) {
  return {id, "car", s, box, halted};
}

FluentStore store_with(std::initializer_list<TrackId> ids) {
  FluentStore s;
  for (TrackId t : ids) s.add_track(t);
  return s;
}

}  // namespace

TEST(Ids, Formatting) {
  EXPECT_EQ(to_string(TrackId{13}), "trk_13");
  EXPECT_EQ(to_string(DetectionId{0}), "det_0");
  EXPECT_EQ(occurs_at(make_event(EventKind::hides_behind, TrackId{13}, 235, TrackId{12})),
            "occurs_at(hides_behind(trk_13,trk_12),235)");
  EXPECT_EQ(event_term(make_event(EventKind::enters_fov, DetectionId{5}, 235)), "enters_fov(det_5)");
}

TEST(EventKind, RoundTripsNames) {
  for (auto k : {EventKind::hides_behind, EventKind::unhides_from_behind, EventKind::recover,
                 EventKind::missing_detections, EventKind::leaves_fov, EventKind::lost,
                 EventKind::enters_fov, EventKind::noise})
    EXPECT_EQ(event_kind_from_string(to_string(k)), k);
  EXPECT_FALSE(event_kind_from_string("teleports").has_value());
}

TEST(FluentStore, InitialValues) {
  const FluentStore s = store_with({T1, T2});
  EXPECT_EQ(s.visibility(T1), Visibility::fully_visible);
  EXPECT_FALSE(s.clipped(T1));
  EXPECT_TRUE(s.in_fov(T1));
  EXPECT_FALSE(s.hidden_by(T1, T2));
  EXPECT_TRUE(s.consistent());
  EXPECT_THROW(s.visibility(T3), std::logic_error);
}

TEST(FluentStore, DuplicateTrackRejected) {
  FluentStore s = store_with({T1});
  EXPECT_THROW(s.add_track(T1), std::logic_error);
}

TEST(FluentStore, HidesThenUnhides) {
  FluentStore s = store_with({T1, T2});
  s.apply(make_event(EventKind::hides_behind, T1, 10, T2));
  EXPECT_EQ(s.visibility(T1), Visibility::not_visible);
  EXPECT_TRUE(s.hidden_by(T1, T2));
  EXPECT_FALSE(s.hidden_by(T2, T1));
  EXPECT_EQ(s.visibility(T2), Visibility::fully_visible);
  s.apply(make_event(EventKind::unhides_from_behind, T1, 20, T2));
  EXPECT_EQ(s.visibility(T1), Visibility::fully_visible);
  EXPECT_FALSE(s.hidden_by(T1, T2));
}

TEST(FluentStore, ClippedAndRecover) {
  FluentStore s = store_with({T1});
  s.apply(make_event(EventKind::missing_detections, T1, 3));
  EXPECT_TRUE(s.clipped(T1));
  EXPECT_EQ(s.visibility(T1), Visibility::fully_visible);
  s.apply(make_event(EventKind::recover, T1, 4));
  EXPECT_FALSE(s.clipped(T1));
}

TEST(FluentStore, FovEvents) {
  FluentStore s = store_with({T1});
  s.apply(make_event(EventKind::leaves_fov, T1, 3));
  EXPECT_FALSE(s.in_fov(T1));
  s.apply(make_event(EventKind::enters_fov, T1, 4));
  EXPECT_TRUE(s.in_fov(T1));
}

TEST(FluentStore, LostAndNoiseChangeNothing) {
  FluentStore s = store_with({T1, T2});
  s.apply(make_event(EventKind::missing_detections, T1, 3));
  const FluentStore before = s;
  s.apply(make_event(EventKind::lost, T1, 4));
  s.apply(make_event(EventKind::noise, T2, 4));
  s.apply(make_event(EventKind::noise, DetectionId{3}, 4));
  EXPECT_EQ(s, before);
}

TEST(FluentStore, UnboundDetectionEventRejected) {
  FluentStore s = store_with({T1});
  EXPECT_THROW(s.apply(make_event(EventKind::enters_fov, DetectionId{2}, 4)), std::logic_error);
}

TEST(FluentStore, RemovingOccluderDropsPair) {
  FluentStore s = store_with({T1, T2});
  s.apply(make_event(EventKind::hides_behind, T1, 1, T2));
  s.remove_track(T2);
  EXPECT_FALSE(s.hidden_by_any(T1));
  EXPECT_EQ(s.visibility(T1), Visibility::not_visible);
  EXPECT_TRUE(s.consistent());
}

TEST(FluentStore, RecoverClearsOrphanedHiding) {
  FluentStore s = store_with({T1, T2});
  s.apply(make_event(EventKind::hides_behind, T1, 1, T2));
  s.remove_track(T2);
  const std::vector<Prediction> preds{pred(T1, BBox2D(10, 10, 20, 20), TrackState::halted, 1)};
  const SceneView view{preds, {}, std::nullopt, 0.0, 30};
  const auto e = make_event(EventKind::recover, T1, 2);
  EXPECT_TRUE(possible(s, view, e));
  s.apply(e);
  EXPECT_EQ(s.visibility(T1), Visibility::fully_visible);
}

TEST(FluentStore, RecoverKeepsHidingWhileOccluderLives) {
  FluentStore s = store_with({T1, T2});
  s.apply(make_event(EventKind::hides_behind, T1, 1, T2));
  s.apply(make_event(EventKind::recover, T1, 2));
  EXPECT_EQ(s.visibility(T1), Visibility::not_visible);
  EXPECT_TRUE(s.consistent());
}

TEST(Possible, HidesBehindNeedsOverlappingTop) {
  const FluentStore s = store_with({T1, T2, T3});
  const std::vector<Prediction> preds{pred(T1, BBox2D(0, 0, 10, 10)), pred(T2, BBox2D(5, 5, 10, 10)),
                                      pred(T3, BBox2D(100, 100, 10, 10))};
  const SceneView view{preds, {}, std::nullopt, 0.0, 30};
  EXPECT_TRUE(possible(s, view, make_event(EventKind::hides_behind, T1, 0, T2)));
  // T1's bottom edge is above T2's, so T2 cannot be the hidden one.
  EXPECT_FALSE(possible(s, view, make_event(EventKind::hides_behind, T2, 0, T1)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::hides_behind, T1, 0, T3)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::hides_behind, T1, 0, T1)));
}

TEST(Possible, HidesBehindNeedsBothVisible) {
  FluentStore s = store_with({T1, T2, T3});
  s.apply(make_event(EventKind::hides_behind, T2, 0, T3));
  const std::vector<Prediction> preds{pred(T1, BBox2D(0, 0, 10, 10)), pred(T2, BBox2D(5, 5, 10, 10)),
                                      pred(T3, BBox2D(5, 5, 20, 20))};
  const SceneView view{preds, {}, std::nullopt, 0.0, 30};
  EXPECT_FALSE(possible(s, view, make_event(EventKind::hides_behind, T1, 1, T2)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::hides_behind, T2, 1, T3)));
}

TEST(Possible, UnhidesOnlyFromTheOccluder) {
  FluentStore s = store_with({T1, T2, T3});
  s.apply(make_event(EventKind::hides_behind, T1, 0, T2));
  const std::vector<Prediction> preds{pred(T1, BBox2D(0, 0, 10, 10), TrackState::halted, 1),
                                      pred(T2, BBox2D(5, 5, 10, 10)), pred(T3, BBox2D(50, 5, 10, 10))};
  const SceneView view{preds, {}, std::nullopt, 0.0, 30};
  EXPECT_TRUE(possible(s, view, make_event(EventKind::unhides_from_behind, T1, 1, T2)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::unhides_from_behind, T1, 1, T3)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::unhides_from_behind, T2, 1, T1)));
}

TEST(Possible, MissingDetectionsAndRecover) {
  FluentStore s = store_with({T1});
  const std::vector<Prediction> preds{pred(T1, BBox2D(10, 10, 10, 10))};
  const SceneView view{preds, {}, std::nullopt, 0.0, 30};
  EXPECT_TRUE(possible(s, view, make_event(EventKind::missing_detections, T1, 0)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::recover, T1, 0)));
  s.apply(make_event(EventKind::missing_detections, T1, 0));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::missing_detections, T1, 1)));
  EXPECT_TRUE(possible(s, view, make_event(EventKind::recover, T1, 1)));
}

TEST(Possible, LeavesFovAtBorderOnly) {
  const FluentStore s = store_with({T1, T2});
  const std::vector<Prediction> preds{pred(T1, BBox2D(1, 40, 20, 20), TrackState::halted, 1),
                                      pred(T2, BBox2D(50, 40, 20, 20), TrackState::halted, 1)};
  const SceneView view{preds, {}, FrameGeometry{200, 100}, 2.0, 30};
  EXPECT_TRUE(possible(s, view, make_event(EventKind::leaves_fov, T1, 0)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::leaves_fov, T2, 0)));
  // Without a frame size nothing is at the border.
  const SceneView blind{preds, {}, std::nullopt, 2.0, 30};
  EXPECT_FALSE(possible(s, blind, make_event(EventKind::leaves_fov, T1, 0)));
}

TEST(Possible, LostAfterMaxHaltedAge) {
  const FluentStore s = store_with({T1, T2, T3});
  const std::vector<Prediction> preds{pred(T1, BBox2D(50, 40, 20, 20), TrackState::halted, 30),
                                      pred(T2, BBox2D(50, 40, 20, 20), TrackState::halted, 29),
                                      pred(T3, BBox2D(50, 40, 20, 20), TrackState::active)};
  const SceneView view{preds, {}, FrameGeometry{200, 100}, 2.0, 30};
  EXPECT_TRUE(possible(s, view, make_event(EventKind::lost, T1, 0)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::lost, T2, 0)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::lost, T3, 0)));
}

TEST(Possible, EntersFovAndNoiseForDetections) {
  const FluentStore s;
  const std::vector<Detection> dets{{DetectionId{0}, "car", 90, BBox2D(10, 10, 20, 20)},
                                    {DetectionId{1}, "car", 90, BBox2D(300, 10, 20, 20)}};
  const SceneView view{{}, dets, FrameGeometry{200, 100}, 2.0, 30};
  EXPECT_TRUE(possible(s, view, make_event(EventKind::enters_fov, DetectionId{0}, 0)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::enters_fov, DetectionId{1}, 0)));
  EXPECT_TRUE(possible(s, view, make_event(EventKind::noise, DetectionId{1}, 0)));
  EXPECT_FALSE(possible(s, view, make_event(EventKind::noise, DetectionId{7}, 0)));
}

TEST(EventOrder, FrameThenKindThenIds) {
  const auto a = make_event(EventKind::hides_behind, T1, 5, T3);
  const auto b = make_event(EventKind::hides_behind, T1, 5, T2);
  const auto c = make_event(EventKind::missing_detections, T1, 5);
  const auto d = make_event(EventKind::noise, T1, 4);
  EXPECT_LT(b, a);
  EXPECT_LT(a, c);
  EXPECT_LT(d, b);
}

TEST(TouchedFluents, DisjointAcrossSubjects) {
  const auto x = touched_fluents(make_event(EventKind::hides_behind, T1, 0, T2));
  const auto y = touched_fluents(make_event(EventKind::missing_detections, T2, 0));
  for (const auto& f : x)
    for (const auto& g : y) EXPECT_NE(f, g);
  EXPECT_TRUE(touched_fluents(make_event(EventKind::noise, T1, 0)).empty());
}

TEST(EventCalculus, PropertyInvariantsHoldOnRandomSequences) {
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto failure = test::event_calculus_case(seed);
    ASSERT_FALSE(failure.has_value()) << *failure;
  }
}
