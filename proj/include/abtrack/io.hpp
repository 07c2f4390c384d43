#pragma once

// Detection and track file formats, event logs, and structured run output.
//
// MOT:   frame,id,x,y,w,h,conf[,...]           id is -1 for detections
// KITTI: frame track_id type truncated occluded alpha left top right bottom
//        h w l x y z rotation_y [score]        space separated

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "abtrack/domain.hpp"
#include "abtrack/metrics.hpp"
#include "abtrack/tracker.hpp"

namespace abtrack {

struct FrameDetections {
  Frame frame = 0;
  std::vector<Detection> detections;  // ids det_0.. in input order
};

struct DetectionStream {
  std::vector<FrameDetections> frames;  // frame strictly increasing
  std::string format;
};

struct FormatError : std::runtime_error {
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
  std::size_t line;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  if (sep == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double to_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw FormatError(line, "expected a number, got '" + std::string(s) + "'");
  return v;
}

inline long to_long(std::string_view s, std::size_t line) {
  const double v = to_double(s, line);
  if (v != std::floor(v)) throw FormatError(line, "expected an integer, got '" + std::string(s) + "'");
  return static_cast<long>(v);
}

/// Fractions in [0, 1] become percent; larger scores are clamped to 100.
inline int confidence_percent(double c) {
  if (c <= 1.0) return static_cast<int>(std::lround(std::max(0.0, c) * 100.0));
  return static_cast<int>(std::lround(std::min(c, 100.0)));
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t n = 0;
  while (!text.empty()) {
    ++n;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    f(line, n);
  }
}

inline BBox2D make_box(double x, double y, double w, double h, std::size_t line) {
  try {
    return BBox2D(x, y, w, h);
  } catch (const std::invalid_argument& e) {
    throw FormatError(line, e.what());
  }
}

struct RawDet {
  Frame frame;
  std::string cls;
  int conf;
  BBox2D box;
  std::size_t line;
};

inline DetectionStream group(std::vector<RawDet> raw, std::string format) {
  std::stable_sort(raw.begin(), raw.end(), [](const RawDet& a, const RawDet& b) { return a.frame < b.frame; });
  std::set<std::tuple<Frame, double, double, double, double, std::string>> seen;
  DetectionStream s;
  s.format = std::move(format);
  for (auto& r : raw) {
    if (!seen.insert({r.frame, r.box.x(), r.box.y(), r.box.w(), r.box.h(), r.cls}).second)
      throw FormatError(r.line, "duplicate detection in frame " + std::to_string(r.frame));
    if (s.frames.empty() || s.frames.back().frame != r.frame) s.frames.push_back({r.frame, {}});
    auto& dets = s.frames.back().detections;
    dets.push_back({DetectionId{static_cast<std::int32_t>(dets.size())}, std::move(r.cls), r.conf, r.box});
  }
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline bool class_selected(const std::string& cls, const std::vector<std::string>& filter) {
  return filter.empty() || std::find(filter.begin(), filter.end(), cls) != filter.end();
}

}  // namespace detail

/// MOT detections. Lines starting with '#' are comments. Input order within
/// a frame is preserved; frames are sorted.
inline DetectionStream parse_mot(std::string_view text, const std::string& cls = "car") {
  std::vector<detail::RawDet> raw;
  detail::for_each_line(text, [&](std::string_view line, std::size_t n) {
    const auto f = detail::split(line, ',');
    if (f.size() < 7) throw FormatError(n, "expected at least 7 comma-separated fields");
    const Frame frame = detail::to_long(f[0], n);
    const BBox2D box = detail::make_box(detail::to_double(f[2], n), detail::to_double(f[3], n),
                                        detail::to_double(f[4], n), detail::to_double(f[5], n), n);
    raw.push_back({frame, cls, detail::confidence_percent(detail::to_double(f[6], n)), box, n});
  });
  return detail::group(std::move(raw), "mot");
}

/// KITTI tracking labels or detections. Class names are lower-cased; DontCare
/// rows are skipped; an empty filter keeps every class. Rows without a score
/// get confidence 100.
inline DetectionStream parse_kitti(std::string_view text, const std::vector<std::string>& class_filter = {}) {
  std::vector<detail::RawDet> raw;
  detail::for_each_line(text, [&](std::string_view line, std::size_t n) {
    const auto f = detail::split(line, ' ');
    if (f.size() != 17 && f.size() != 18) throw FormatError(n, "expected 17 or 18 fields");
    std::string cls = detail::lower(f[2]);
    if (cls == "dontcare" || !detail::class_selected(cls, class_filter)) return;
    const double l = detail::to_double(f[6], n), t = detail::to_double(f[7], n);
    const double r = detail::to_double(f[8], n), b = detail::to_double(f[9], n);
    const BBox2D box = detail::make_box(l, t, r - l, b - t, n);
    const int conf = f.size() == 18 ? detail::confidence_percent(detail::to_double(f[17], n)) : 100;
    raw.push_back({detail::to_long(f[0], n), std::move(cls), conf, box, n});
  });
  return detail::group(std::move(raw), "kitti");
}

/// MOT ground truth or results: `frame,id,x,y,w,h[,...]`.
inline TrackSet parse_mot_tracks(std::string_view text) {
  TrackSet ts;
  std::set<std::pair<Frame, int>> seen;
  detail::for_each_line(text, [&](std::string_view line, std::size_t n) {
    const auto f = detail::split(line, ',');
    if (f.size() < 6) throw FormatError(n, "expected at least 6 comma-separated fields");
    const Frame frame = detail::to_long(f[0], n);
    const int id = static_cast<int>(detail::to_long(f[1], n));
    if (!seen.insert({frame, id}).second)
      throw FormatError(n, "duplicate id " + std::to_string(id) + " in frame " + std::to_string(frame));
    ts.add(frame, id, detail::make_box(detail::to_double(f[2], n), detail::to_double(f[3], n),
                                       detail::to_double(f[4], n), detail::to_double(f[5], n), n));
  });
  return ts;
}

/// KITTI tracking labels as a track set (track_id column as identity).
inline TrackSet parse_kitti_tracks(std::string_view text, const std::vector<std::string>& class_filter = {}) {
  TrackSet ts;
  std::set<std::pair<Frame, int>> seen;
  detail::for_each_line(text, [&](std::string_view line, std::size_t n) {
    const auto f = detail::split(line, ' ');
    if (f.size() != 17 && f.size() != 18) throw FormatError(n, "expected 17 or 18 fields");
    const std::string cls = detail::lower(f[2]);
    if (cls == "dontcare" || !detail::class_selected(cls, class_filter)) return;
    const Frame frame = detail::to_long(f[0], n);
    const int id = static_cast<int>(detail::to_long(f[1], n));
    if (!seen.insert({frame, id}).second)
      throw FormatError(n, "duplicate id " + std::to_string(id) + " in frame " + std::to_string(frame));
    const double l = detail::to_double(f[6], n), t = detail::to_double(f[7], n);
    const double r = detail::to_double(f[8], n), b = detail::to_double(f[9], n);
    ts.add(frame, id, detail::make_box(l, t, r - l, b - t, n));
  });
  return ts;
}

// ---------------------------------------------------------------------------
// Writers

/// Shortest text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string write_events(const std::vector<EventOccurrence>& events) {
  std::string out;
  for (const auto& e : events) out += occurs_at(e) + '\n';
  return out;
}

inline std::string write_events(const Explanation& exp) { return write_events(exp.events); }

/// MOT results, ordered by frame then track id. Confidence is a fraction;
/// interpolated entries carry 0.
inline std::string write_tracks(const Explanation& exp) {
  std::vector<std::tuple<Frame, std::int32_t, const HistoryEntry*>> rows;
  for (const auto& t : exp.tracks)
    for (const auto& h : t.history) rows.emplace_back(h.frame, raw(t.id), &h);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::string out;
  for (const auto& [frame, id, h] : rows) {
    out += std::to_string(frame) + ',' + std::to_string(id) + ',' + format_number(h->box.x()) + ',' +
           format_number(h->box.y()) + ',' + format_number(h->box.w()) + ',' + format_number(h->box.h()) +
           ',' + format_number(h->confidence / 100.0) + ",-1,-1,-1\n";
  }
  return out;
}

namespace detail {

inline nlohmann::json fluent_json(const FluentStore& store) {
  nlohmann::json j = nlohmann::json::object();
  for (TrackId t : store.tracks()) {
    nlohmann::json hidden = nlohmann::json::array();
    for (const auto& [a, b] : store.hidden_pairs())
      if (a == t) hidden.push_back(to_string(b));
    j[to_string(t)] = {{"visibility", std::string(to_string(store.visibility(t)))},
                       {"clipped", store.clipped(t)},
                       {"in_fov", store.in_fov(t)},
                       {"hidden_by", hidden}};
  }
  return j;
}

}  // namespace detail

/// Structured output: tracks with per-entry provenance, the event log, and the
/// fluent state after each frame that has events, recovered by replaying the
/// log from an empty store.
inline nlohmann::json tracks_json(const Explanation& exp) {
  nlohmann::json tracks = nlohmann::json::array();
  for (const auto& t : exp.tracks) {
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& h : t.history)
      hist.push_back({{"frame", h.frame},
                      {"box", {h.box.x(), h.box.y(), h.box.w(), h.box.h()}},
                      {"provenance", h.provenance == Provenance::observed ? "observed" : "interpolated"},
                      {"confidence", h.confidence}});
    tracks.push_back({{"id", to_string(t.id)}, {"class", t.cls}, {"history", hist}});
  }

  nlohmann::json events = nlohmann::json::array();
  nlohmann::json snapshots = nlohmann::json::array();
  FluentStore store;
  for (std::size_t i = 0; i < exp.events.size();) {
    const Frame f = exp.events[i].frame;
    std::vector<TrackId> ended;
    for (; i < exp.events.size() && exp.events[i].frame == f; ++i) {
      const auto& e = exp.events[i];
      events.push_back({{"frame", e.frame}, {"event", event_term(e)}});
      const auto t = e.subject_track();
      if (e.kind == EventKind::enters_fov && t && !store.contains(*t)) store.add_track(*t);
      if (t && !store.contains(*t)) continue;
      if (e.other && !store.contains(*e.other)) continue;
      store.apply(e);
      if (e.kind == EventKind::leaves_fov || e.kind == EventKind::lost) ended.push_back(*t);
    }
    snapshots.push_back({{"frame", f}, {"fluents", detail::fluent_json(store)}});
    for (TrackId t : ended) store.remove_track(t);
  }
  return {{"tracks", tracks}, {"events", events}, {"fluents", snapshots}};
}

}  // namespace abtrack
