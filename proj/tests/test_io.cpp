#include <gtest/gtest.h>

#include <random>
#include <regex>
#include <sstream>

#include "abtrack/io.hpp"

using namespace abtrack;

TEST(ParseMot, SingleLine) {
  const auto s = parse_mot("1,-1,100,200,50,80,0.9\n");
  ASSERT_EQ(s.frames.size(), 1u);
  EXPECT_EQ(s.frames[0].frame, 1);
  ASSERT_EQ(s.frames[0].detections.size(), 1u);
  const auto& d = s.frames[0].detections[0];
  EXPECT_EQ(d.id, DetectionId{0});
  EXPECT_EQ(d.cls, "car");
  EXPECT_EQ(d.confidence, 90);
  EXPECT_EQ(d.box, BBox2D(100, 200, 50, 80));
  EXPECT_EQ(s.format, "mot");
}

TEST(ParseMot, EmptyAndComments) {
  EXPECT_TRUE(parse_mot("").frames.empty());
  EXPECT_TRUE(parse_mot("# nothing\n\n   \n").frames.empty());
}

TEST(ParseMot, GroupsByFrameAndSorts) {
  const auto s = parse_mot("2,-1,0,0,5,5,0.5\n1,-1,0,0,5,5,0.5\n1,-1,10,0,5,5,1\n");
  ASSERT_EQ(s.frames.size(), 2u);
  EXPECT_EQ(s.frames[0].frame, 1);
  ASSERT_EQ(s.frames[0].detections.size(), 2u);
  EXPECT_EQ(s.frames[0].detections[0].box.x(), 0);
  EXPECT_EQ(s.frames[0].detections[1].id, DetectionId{1});
  EXPECT_EQ(s.frames[0].detections[1].confidence, 100);
  EXPECT_EQ(s.frames[1].frame, 2);
}

TEST(ParseMot, ConfidenceScales) {
  const auto s = parse_mot("0,-1,0,0,5,5,0.004\n0,-1,1,0,5,5,55\n0,-1,2,0,5,5,250\n");
  const auto& d = s.frames[0].detections;
  EXPECT_EQ(d[0].confidence, 0);
  EXPECT_EQ(d[1].confidence, 55);
  EXPECT_EQ(d[2].confidence, 100);
}

TEST(ParseMot, ErrorsCarryLineNumbers) {
  try {
    parse_mot("1,-1,0,0,5,5,0.5\n# c\n1,-1,0,0,5\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line, 3u);
  }
  try {
    parse_mot("1,-1,0,0,abc,5,0.5\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line, 1u);
  }
  EXPECT_THROW(parse_mot("1,-1,0,0,-5,5,0.5\n"), FormatError);
  EXPECT_THROW(parse_mot("1.5,-1,0,0,5,5,0.5\n"), FormatError);
}

TEST(ParseMot, RejectsDuplicates) {
  try {
    parse_mot("1,-1,0,0,5,5,0.5\n1,-1,0,0,5,5,0.7\n");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line, 2u);
  }
}

TEST(ParseKitti, ConvertsCornersAndFilters) {
  const std::string text =
      "0 -1 Car 0 0 -10 100 50 150 130 1.5 1.6 3.9 1 2 3 0.1 0.87\n"
      "0 -1 DontCare -1 -1 -10 0 0 10 10 -1 -1 -1 -1000 -1000 -1000 -10 0.5\n"
      "0 -1 Pedestrian 0 0 -10 300 50 320 100 1.5 1.6 3.9 1 2 3 0.1 0.6\n"
      "1 -1 Car 0 0 -10 102 50 152 130 1.5 1.6 3.9 1 2 3 0.1\n";
  const auto all = parse_kitti(text);
  ASSERT_EQ(all.frames.size(), 2u);
  ASSERT_EQ(all.frames[0].detections.size(), 2u);
  const auto& car = all.frames[0].detections[0];
  EXPECT_EQ(car.cls, "car");
  EXPECT_EQ(car.box, BBox2D(100, 50, 50, 80));
  EXPECT_EQ(car.confidence, 87);
  EXPECT_EQ(all.frames[0].detections[1].cls, "pedestrian");
  EXPECT_EQ(all.frames[1].detections[0].confidence, 100);  // no score column

  const auto cars = parse_kitti(text, {"car"});
  ASSERT_EQ(cars.frames[0].detections.size(), 1u);
  EXPECT_EQ(cars.frames[0].detections[0].cls, "car");
  EXPECT_THROW(parse_kitti("0 -1 Car 0 0\n"), FormatError);
}

TEST(ParseTracks, MotAndKitti) {
  const auto mot = parse_mot_tracks("1,3,10,20,30,40,1,-1,-1,-1\n2,3,11,20,30,40,1,-1,-1,-1\n");
  EXPECT_EQ(mot.box_count(), 2u);
  EXPECT_EQ(mot.frames.at(2)[0].id, 3);
  EXPECT_THROW(parse_mot_tracks("1,3,10,20,30,40\n1,3,0,0,1,1\n"), FormatError);

  const auto kitti = parse_kitti_tracks(
      "0 7 Car 0 0 -10 100 50 150 130 1.5 1.6 3.9 1 2 3 0.1\n"
      "0 -1 DontCare -1 -1 -10 0 0 10 10 -1 -1 -1 -1000 -1000 -1000 -10\n");
  ASSERT_EQ(kitti.box_count(), 1u);
  EXPECT_EQ(kitti.frames.at(0)[0].id, 7);
  EXPECT_EQ(kitti.frames.at(0)[0].box, BBox2D(100, 50, 50, 80));
}

TEST(WriteEvents, Lines) {
  const std::vector<EventOccurrence> ev{
      make_event(EventKind::hides_behind, TrackId{13}, 235, TrackId{12}),
      make_event(EventKind::enters_fov, TrackId{30}, 172)};
  EXPECT_EQ(write_events(ev), "occurs_at(hides_behind(trk_13,trk_12),235)\noccurs_at(enters_fov(trk_30),172)\n");
  EXPECT_EQ(write_events(std::vector<EventOccurrence>{}), "");
}

namespace {

Explanation sample_explanation() {
  Explanation exp;
  Track a(TrackId{2}, "car", BBox2D(0, 0, 10, 10));
  a.history = {{0, BBox2D(0, 0, 10, 10), Provenance::observed, 90},
               {1, BBox2D(1.5, 0, 10, 10), Provenance::interpolated, 0},
               {2, BBox2D(3, 0, 10, 10), Provenance::observed, 85}};
  Track b(TrackId{1}, "car", BBox2D(50, 0, 10, 10));
  b.history = {{1, BBox2D(50, 0, 10, 10), Provenance::observed, 70}};
  exp.tracks = {a, b};
  exp.events = {make_event(EventKind::enters_fov, TrackId{2}, 0), make_event(EventKind::enters_fov, TrackId{1}, 1),
                make_event(EventKind::hides_behind, TrackId{2}, 1, TrackId{1}),
                make_event(EventKind::unhides_from_behind, TrackId{2}, 2, TrackId{1})};
  return exp;
}

}  // namespace

TEST(WriteTracks, SortedMotLines) {
  const std::string out = write_tracks(sample_explanation());
  EXPECT_EQ(out,
            "0,2,0,0,10,10,0.9,-1,-1,-1\n"
            "1,1,50,0,10,10,0.7,-1,-1,-1\n"
            "1,2,1.5,0,10,10,0,-1,-1,-1\n"
            "2,2,3,0,10,10,0.85,-1,-1,-1\n");
  const std::regex grammar(R"(-?\d+,\d+,(-?[\d.e+-]+,){4}[\d.e+-]+,-1,-1,-1)");
  std::istringstream in(out);
  for (std::string l; std::getline(in, l);) EXPECT_TRUE(std::regex_match(l, grammar)) << l;
}

TEST(WriteTracks, PropertyRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-100, 1000), size(1, 200);
  for (int iter = 0; iter < 200; ++iter) {
    Explanation exp;
    for (int t = 0; t < 4; ++t) {
      Track tr(TrackId{t * 3}, "car", BBox2D(0, 0, 1, 1));
      for (Frame f = t; f < t + 6; ++f)
        tr.history.push_back({f, BBox2D(pos(rng), pos(rng), size(rng), size(rng)), Provenance::observed, 50});
      exp.tracks.push_back(tr);
    }
    const TrackSet back = parse_mot_tracks(write_tracks(exp));
    const TrackSet direct = to_track_set(exp);
    ASSERT_EQ(back.box_count(), direct.box_count());
    for (const auto& [f, boxes] : direct.frames) {
      const auto& got = back.frames.at(f);
      for (const auto& lb : boxes) {
        const auto it = std::find_if(got.begin(), got.end(), [&](const LabeledBox& g) { return g.id == lb.id; });
        ASSERT_NE(it, got.end());
        EXPECT_EQ(it->box, lb.box);  // shortest round-trip formatting is exact
      }
    }
  }
}

TEST(TracksJson, Structure) {
  const auto j = tracks_json(sample_explanation());
  ASSERT_EQ(j["tracks"].size(), 2u);
  EXPECT_EQ(j["tracks"][0]["id"], "trk_2");
  EXPECT_EQ(j["tracks"][0]["history"][1]["provenance"], "interpolated");
  EXPECT_EQ(j["events"].size(), 4u);
  EXPECT_EQ(j["events"][2]["event"], "hides_behind(trk_2,trk_1)");
  ASSERT_EQ(j["fluents"].size(), 3u);
  const auto& f1 = j["fluents"][1]["fluents"]["trk_2"];
  EXPECT_EQ(f1["visibility"], "not_visible");
  EXPECT_EQ(f1["hidden_by"], nlohmann::json::array({"trk_1"}));
  const auto& f2 = j["fluents"][2]["fluents"]["trk_2"];
  EXPECT_TRUE(f2["hidden_by"].empty());
  EXPECT_NE(f2["visibility"], "not_visible");
}
