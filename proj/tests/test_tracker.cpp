#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "abtrack/tracker.hpp"

using namespace abtrack;

namespace {

Detection det(int id, const std::string& cls, BBox2D box, int conf = 90) {
  return {DetectionId{id}, cls, conf, box};
}

std::vector<EventOccurrence> events_about(const std::vector<EventOccurrence>& all, TrackId t) {
  std::vector<EventOccurrence> out;
  for (const auto& e : all)
    if (e.subject_track() == t) out.push_back(e);
  return out;
}

// A car drives right behind a parked bus; its detections vanish for frames
// [hide, hide + gap) and come back where it would be.
struct OcclusionScript {
  Frame hide = 10;
  int gap = 5;
  Frame frames = 25;
  BBox2D bus{100, 100, 300, 150};

  BBox2D car(Frame f) const { return BBox2D(60 + 5.0 * static_cast<double>(f), 150, 40, 30); }

  std::vector<Detection> at(Frame f) const {
    std::vector<Detection> d{det(0, "bus", bus, 95)};
    if (f < hide || f >= hide + gap) d.push_back(det(1, "car", car(f)));
    return d;
  }
};

template <class T>
void run_script(T& tracker, const OcclusionScript& s) {
  for (Frame f = 0; f < s.frames; ++f) tracker.step(f, s.at(f));
}

}  // namespace

TEST(Engine, ThreeFrameScript) {
  EngineConfig cfg;
  cfg.thresholds.size_threshold = 50;  // a 10x10 box is 100 px^2
  Engine e(cfg);
  for (Frame f = 0; f < 3; ++f) e.step(f, {det(0, "car", BBox2D(0, 0, 10, 10))});
  const Explanation& exp = e.finalize();
  ASSERT_EQ(exp.tracks.size(), 1u);
  EXPECT_EQ(exp.tracks[0].history.size(), 3u);
  EXPECT_EQ(exp.tracks[0].state, TrackState::ended);
  ASSERT_EQ(exp.events.size(), 1u);
  EXPECT_EQ(exp.events[0], make_event(EventKind::enters_fov, TrackId{0}, 0));
}

TEST(Engine, StartRebindsEventToNewTrack) {
  EngineConfig cfg;
  cfg.first_track_id = 7;
  Engine e(cfg);
  const auto r = e.step(3, {det(0, "car", BBox2D(0, 0, 20, 20))});
  ASSERT_EQ(r.events().size(), 1u);
  EXPECT_EQ(r.events()[0].subject, EntityRef{TrackId{7}});
  EXPECT_TRUE(e.fluents().contains(TrackId{7}));
}

TEST(Engine, EmptyStream) {
  Engine e;
  const Explanation& exp = e.finalize();
  EXPECT_TRUE(exp.tracks.empty());
  EXPECT_TRUE(exp.events.empty());
}

TEST(Engine, FinalizeIsIdempotent) {
  Engine e;
  for (Frame f = 0; f < 4; ++f) e.step(f, {det(0, "car", BBox2D(10.0 * f, 0, 20, 20))});
  const Explanation a = e.finalize();
  const Explanation& b = e.finalize();
  ASSERT_EQ(a.tracks.size(), b.tracks.size());
  for (std::size_t i = 0; i < a.tracks.size(); ++i) {
    EXPECT_EQ(a.tracks[i].id, b.tracks[i].id);
    EXPECT_EQ(a.tracks[i].history, b.tracks[i].history);
  }
  EXPECT_EQ(a.events, b.events);
  EXPECT_THROW(e.step(10, {}), std::logic_error);
}

TEST(Engine, RejectsOutOfOrderFrames) {
  Engine e;
  e.step(5, {});
  EXPECT_THROW(e.step(5, {}), std::invalid_argument);
  EXPECT_THROW(e.step(4, {}), std::invalid_argument);
  EXPECT_NO_THROW(e.step(9, {}));
}

TEST(Engine, RejectsBadConfidence) {
  Engine e;
  EXPECT_THROW(e.step(0, {det(0, "car", BBox2D(0, 0, 20, 20), 101)}), std::invalid_argument);
}

TEST(Engine, OcclusionKeepsIdentity) {
  const OcclusionScript s;
  Engine e;
  run_script(e, s);
  const Explanation& exp = e.finalize();

  // Bus and car, nothing else.
  ASSERT_EQ(exp.tracks.size(), 2u);
  const Track& bus = exp.tracks[0].cls == "bus" ? exp.tracks[0] : exp.tracks[1];
  const Track& car = exp.tracks[0].cls == "bus" ? exp.tracks[1] : exp.tracks[0];
  EXPECT_EQ(car.cls, "car");
  EXPECT_EQ(car.history.size(), static_cast<std::size_t>(s.frames));

  const auto car_events = events_about(exp.events, car.id);
  const auto count = [&](EventKind k) {
    return std::count_if(car_events.begin(), car_events.end(), [&](const auto& ev) { return ev.kind == k; });
  };
  EXPECT_EQ(count(EventKind::hides_behind), 1);
  EXPECT_EQ(count(EventKind::unhides_from_behind), 1);
  const auto hide = std::find_if(car_events.begin(), car_events.end(),
                                 [](const auto& ev) { return ev.kind == EventKind::hides_behind; });
  const auto unhide = std::find_if(car_events.begin(), car_events.end(),
                                   [](const auto& ev) { return ev.kind == EventKind::unhides_from_behind; });
  EXPECT_EQ(*hide, make_event(EventKind::hides_behind, car.id, s.hide, bus.id));
  EXPECT_EQ(*unhide, make_event(EventKind::unhides_from_behind, car.id, s.hide + s.gap, bus.id));

  // The hidden span is back-filled.
  for (const auto& h : car.history) {
    const bool hidden = h.frame >= s.hide && h.frame < s.hide + s.gap;
    EXPECT_EQ(h.provenance, hidden ? Provenance::interpolated : Provenance::observed) << h.frame;
  }
}

TEST(Engine, OcclusionFluentsDuringAndAfter) {
  const OcclusionScript s;
  Engine e;
  for (Frame f = 0; f <= s.hide; ++f) e.step(f, s.at(f));
  const TrackId bus{0}, car{1};
  EXPECT_EQ(e.fluents().visibility(car), Visibility::not_visible);
  EXPECT_TRUE(e.fluents().hidden_by(car, bus));
  EXPECT_EQ(e.find(car)->state, TrackState::halted);
  for (Frame f = s.hide + 1; f <= s.hide + s.gap; ++f) e.step(f, s.at(f));
  EXPECT_EQ(e.fluents().visibility(car), Visibility::fully_visible);
  EXPECT_FALSE(e.fluents().hidden_by(car, bus));
  EXPECT_EQ(e.find(car)->state, TrackState::active);
}

TEST(Engine, BaselineSwitchesIdentityUnderOcclusion) {
  const OcclusionScript s;
  BaselineTracker b;
  run_script(b, s);
  const Explanation exp = b.finalize();
  const auto cars = std::count_if(exp.tracks.begin(), exp.tracks.end(), [](const Track& t) { return t.cls == "car"; });
  EXPECT_EQ(cars, 2);
}

TEST(Engine, LeavesFieldOfView) {
  EngineConfig cfg;
  cfg.frame_geometry = FrameGeometry{200, 100};
  Engine e(cfg);
  // Moves right until its box touches the right border, then disappears.
  Frame f = 0;
  for (; 20 + 10.0 * static_cast<double>(f) + 30 < 200; ++f)
    e.step(f, {det(0, "car", BBox2D(20 + 10.0 * static_cast<double>(f), 40, 30, 20))});
  const Frame gone = f;
  e.step(gone, {});
  e.step(gone + 1, {});
  const TrackId t{0};
  EXPECT_EQ(e.find(t)->state, TrackState::ended);
  EXPECT_FALSE(e.fluents().contains(t));
  const auto ev = events_about(e.events(), t);
  ASSERT_GE(ev.size(), 2u);
  EXPECT_EQ(ev.back(), make_event(EventKind::leaves_fov, t, gone + 1));
}

TEST(Engine, LostAfterMaxHaltedAge) {
  EngineConfig cfg;
  cfg.thresholds.max_halted_age = 3;
  cfg.frame_geometry = FrameGeometry{400, 300};
  Engine e(cfg);
  for (Frame f = 0; f < 5; ++f) e.step(f, {det(0, "car", BBox2D(100, 100, 40, 30))});
  for (Frame f = 5; f < 12; ++f) e.step(f, {});
  const TrackId t{0};
  const auto ev = events_about(e.events(), t);
  const std::vector<EventOccurrence> expect{
      make_event(EventKind::enters_fov, t, 0), make_event(EventKind::missing_detections, t, 5),
      make_event(EventKind::noise, t, 6),      make_event(EventKind::noise, t, 7),
      make_event(EventKind::lost, t, 8)};
  EXPECT_EQ(ev, expect);
  EXPECT_EQ(e.find(t)->state, TrackState::ended);
}

TEST(Engine, LastProblemMatchesStep) {
  Engine e;
  e.step(0, {det(0, "car", BBox2D(0, 0, 20, 20))});
  e.step(1, {det(0, "car", BBox2D(2, 0, 20, 20))});
  ASSERT_TRUE(e.last_problem());
  EXPECT_EQ(e.last_problem()->frame, 1);
  EXPECT_EQ(e.last_problem()->predictions.size(), 1u);
  EXPECT_GT(e.last_problem()->likelihood(TrackId{0}, DetectionId{0}), 80000);
}

namespace {

// Several cars on independent straight paths with dropouts.
std::vector<std::vector<Detection>> random_stream(std::uint64_t seed, Frame frames) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0, 600), vel(-4, 4), size(20, 60);
  std::bernoulli_distribution drop(0.15);
  struct Obj { double x, y, vx, vy, w, h; };
  std::vector<Obj> objs;
  for (int i = 0; i < 6; ++i) objs.push_back({pos(rng), pos(rng) / 2, vel(rng), vel(rng), size(rng), size(rng)});
  std::vector<std::vector<Detection>> out;
  for (Frame f = 0; f < frames; ++f) {
    std::vector<Detection> d;
    int id = 0;
    for (const auto& o : objs)
      if (!drop(rng))
        d.push_back(det(id++, "car", BBox2D(std::round(o.x + o.vx * f), std::round(o.y + o.vy * f), std::round(o.w),
                                            std::round(o.h))));
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

TEST(Engine, PropertyIdsUniqueAndIncreasing) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Engine e;
    const auto stream = random_stream(seed, 60);
    for (Frame f = 0; f < 60; ++f) e.step(f, stream[static_cast<std::size_t>(f)]);
    const auto& tracks = e.finalize().tracks;
    for (std::size_t i = 1; i < tracks.size(); ++i) {
      ASSERT_LT(tracks[i - 1].id, tracks[i].id);
      // Born later means a larger id.
      ASSERT_LE(tracks[i - 1].history.front().frame, tracks[i].history.front().frame);
    }
  }
}

TEST(Engine, PropertyHistoryContinuity) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Engine e;
    const auto stream = random_stream(seed, 60);
    for (Frame f = 0; f < 60; ++f) e.step(f, stream[static_cast<std::size_t>(f)]);
    for (const auto& t : e.finalize().tracks) {
      ASSERT_FALSE(t.history.empty());
      EXPECT_EQ(t.history.front().provenance, Provenance::observed);
      EXPECT_EQ(t.history.back().provenance, Provenance::observed);
      for (std::size_t i = 1; i < t.history.size(); ++i)
        ASSERT_EQ(t.history[i].frame, t.history[i - 1].frame + 1) << to_string(t.id);
    }
  }
}

TEST(Engine, PropertyEventsWithinProcessedRange) {
  Engine e;
  const auto stream = random_stream(7, 50);
  for (Frame f = 0; f < 50; ++f) e.step(f + 100, stream[static_cast<std::size_t>(f)]);
  Frame prev = 100;
  for (const auto& ev : e.finalize().events) {
    EXPECT_GE(ev.frame, prev);
    EXPECT_LT(ev.frame, 150);
    prev = ev.frame;
  }
}

TEST(Engine, PropertyOnlinePrefix) {
  // Results up to frame t do not depend on anything after t.
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto stream = random_stream(seed, 40);
    Engine full;
    std::vector<SolveResult> full_results;
    for (Frame f = 0; f < 40; ++f) full_results.push_back(full.step(f, stream[static_cast<std::size_t>(f)]));
    for (Frame cut : {5, 17, 33}) {
      Engine prefix;
      for (Frame f = 0; f <= cut; ++f)
        ASSERT_EQ(prefix.step(f, stream[static_cast<std::size_t>(f)]), full_results[static_cast<std::size_t>(f)]);
    }
  }
}

TEST(Engine, PropertyDeterministic) {
  const auto stream = random_stream(3, 40);
  Engine a, b;
  for (Frame f = 0; f < 40; ++f) {
    ASSERT_EQ(a.step(f, stream[static_cast<std::size_t>(f)]), b.step(f, stream[static_cast<std::size_t>(f)]));
  }
}
